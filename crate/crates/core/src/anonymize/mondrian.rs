use crate::anonymize::{check_preconditions, finish_run, Algorithm, AnonymizationRun};
use crate::data::Dataset;
use crate::error::Result;
use crate::loss::{Coord, DimKind, QiSpace};
use crate::scalar::Scalar;

/// Strict multidimensional Mondrian with median cuts.
///
/// At each node the quasi-identifiers are tried widest normalized span first
/// (ties in schema order). A cut sends every value `<=` the lower median left;
/// it is allowed only when both sides keep at least `k` records. Categorical
/// attributes cut on taxonomy leaf order. Nodes without an allowed cut become
/// partitions.
pub fn mondrian_anonymize<T: Scalar>(d: &Dataset<T>, k: usize) -> Result<AnonymizationRun<T>> {
    check_preconditions(d, k)?;
    let space = QiSpace::for_schema(d.schema())?;
    let points = space.points(d)?;

    let mut stack = vec![(0..d.len()).collect::<Vec<_>>()];
    let mut leaves = Vec::new();
    while let Some(part) = stack.pop() {
        match best_cut(&space, &points, &part, k) {
            Some((left, right)) => {
                stack.push(right);
                stack.push(left);
            }
            None => leaves.push(part),
        }
    }
    finish_run(d, Algorithm::BasicMondrian, k, None, leaves)
}

/// Ordering key and extent of one coordinate along a dimension.
fn key_range<T: Scalar>(dim: &DimKind<'_, T>, c: &Coord<T>) -> (T, T) {
    match (dim, c) {
        (DimKind::Numeric(_), Coord::Num(lo, hi)) => (*lo, *hi),
        (DimKind::Categorical(t), Coord::Cat(node)) => {
            let (a, b) = t.rank_span_of(*node);
            (T::from_f64(a as f64), T::from_f64(b as f64))
        }
        _ => unreachable!("coordinate kind matches dimension kind"),
    }
}

fn normalized_span<T: Scalar>(dim: &DimKind<'_, T>, lo: T, hi: T) -> T {
    let width = match dim {
        DimKind::Numeric(w) => *w,
        DimKind::Categorical(t) => T::from_f64(t.leaf_total() as f64),
    };
    if width > T::zero() {
        (hi - lo) / width
    } else {
        T::zero()
    }
}

fn best_cut<T: Scalar>(
    space: &QiSpace<'_, T>,
    points: &[Vec<Coord<T>>],
    part: &[usize],
    k: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if part.len() < 2 * k {
        return None;
    }
    let mut spans: Vec<(usize, T)> = space
        .dims
        .iter()
        .enumerate()
        .map(|(d, dim)| {
            let (lo, hi) = part
                .iter()
                .map(|&i| key_range(&dim.kind, &points[i][d]))
                .fold((T::infinity(), T::neg_infinity()), |(a, b), (lo, hi)| {
                    (a.min(lo), b.max(hi))
                });
            (d, normalized_span(&dim.kind, lo, hi))
        })
        .filter(|&(_, s)| s > T::zero())
        .collect();
    // Stable sort keeps schema order among equal spans.
    spans.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));

    for (d, _) in spans {
        let kind = &space.dims[d].kind;
        let key = |i: usize| key_range(kind, &points[i][d]).0;
        let mut keys: Vec<T> = part.iter().map(|&i| key(i)).collect();
        keys.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let median = keys[(keys.len() - 1) / 2];
        let (left, right): (Vec<usize>, Vec<usize>) = part.iter().partition(|&&i| key(i) <= median);
        if left.len() >= k && right.len() >= k {
            return Some((left, right));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymize::test_support::*;
    use crate::data::Cell;

    #[test]
    fn too_small_to_cut() {
        let d = ages(&[1.0, 5.0, 9.0, 13.0, 17.0, 21.0, 25.0]);
        let run = mondrian_anonymize(&d, 5).unwrap();
        assert_eq!(run.partitions.len(), 1);
        assert_eq!(run.partitions[0].generalized_qi_cells[0], Cell::Interval(1.0, 25.0));
        assert_valid_run(&d, &run, 5);
        assert_eq!(run.seed, None);
    }

    #[test]
    fn median_split_hand_trace() {
        // Sorted keys 1,2,9,10: lower median 2, left = {1,2}.
        let d = ages(&[9.0, 1.0, 10.0, 2.0]);
        let run = mondrian_anonymize(&d, 2).unwrap();
        let rendered: Vec<String> = run
            .partitions
            .iter()
            .map(|p| p.generalized_qi_cells[0].render())
            .collect();
        assert_eq!(run.partitions.len(), 2);
        assert_eq!(run.partitions[0].member_indices, vec![0, 2]);
        assert_eq!(rendered, ["9-10", "1-2"]);
        assert_eq!(run.output.records()[1].values[0].render(), "1-2");
    }

    #[test]
    fn median_ties_go_left() {
        // Lower median is 5 and all three 5s go left, leaving {7, 8} on the right.
        let d = ages(&[5.0, 5.0, 5.0, 7.0, 8.0]);
        let run = mondrian_anonymize(&d, 2).unwrap();
        let sizes: Vec<usize> = run.partitions.iter().map(|p| p.member_indices.len()).collect();
        assert_eq!(sizes, [3, 2]);
    }

    #[test]
    fn categorical_cut_uses_leaf_order() {
        let d = mixed(40, 7);
        let run = mondrian_anonymize(&d, 4).unwrap();
        assert_valid_run(&d, &run, 4);
        assert!(run.partitions.len() > 1);
    }

    #[test]
    fn f32_runs_too() {
        use crate::data::{load_dataset, serialize_csv, SchemaConfig};
        let d = mixed(30, 3);
        let cfg = SchemaConfig::from_json_with(
            r#"{"attributes":[
                {"name":"age","kind":"numeric","role":"qi","domain":{"min":0,"max":100}},
                {"name":"city","kind":"categorical","role":"qi","hierarchy":"c"},
                {"name":"disease","kind":"categorical","role":"sensitive"},
                {"name":"note","kind":"categorical","role":"insensitive"}]}"#,
            |_| Ok(ITALY.to_string()),
        )
        .unwrap();
        let d32: Dataset<f32> = load_dataset(serialize_csv(&d).as_slice(), &cfg).unwrap();
        let a = mondrian_anonymize(&d, 3).unwrap();
        let b = mondrian_anonymize(&d32, 3).unwrap();
        assert_eq!(serialize_csv(&a.output), serialize_csv(&b.output));
    }
}
