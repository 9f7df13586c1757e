//! Equivalence classes and the privacy parameters measured on them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::data::{signature_of, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Records sharing one rendered quasi-identifier signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceClass {
    pub signature: Vec<String>,
    pub member_indices: Vec<usize>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.member_indices.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnonymityReport {
    pub k: usize,
    /// `None` when the schema has no sensitive attribute.
    pub l_distinct: Option<usize>,
    pub class_count: usize,
    /// class size -> number of classes of that size
    pub class_size_histogram: BTreeMap<usize, usize>,
}

/// Groups records by rendered quasi-identifier cells, ordered by first member.
///
/// With no quasi-identifiers every record lands in a single class.
pub fn equivalence_classes<T: Scalar>(d: &Dataset<T>) -> Vec<EquivalenceClass> {
    let qi = d.schema().qi_indices();
    let mut by_sig: HashMap<Vec<String>, usize> = HashMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for (i, r) in d.records().iter().enumerate() {
        let sig = signature_of(&qi, r);
        match by_sig.get(&sig) {
            Some(&c) => classes[c].member_indices.push(i),
            None => {
                by_sig.insert(sig.clone(), classes.len());
                classes.push(EquivalenceClass {
                    signature: sig,
                    member_indices: vec![i],
                });
            }
        }
    }
    classes
}

/// Smallest equivalence-class size.
pub fn calc_k<T: Scalar>(d: &Dataset<T>) -> Result<usize> {
    equivalence_classes(d)
        .iter()
        .map(EquivalenceClass::size)
        .min()
        .ok_or(Error::EmptyDataset)
}

/// Smallest number of distinct sensitive values in any class.
pub fn calc_l_distinct<T: Scalar>(d: &Dataset<T>) -> Result<usize> {
    let s = d.schema().sensitive_index().ok_or(Error::NoSensitiveAttribute)?;
    l_distinct_of(d, &equivalence_classes(d), s)
}

fn l_distinct_of<T: Scalar>(d: &Dataset<T>, classes: &[EquivalenceClass], s: usize) -> Result<usize> {
    classes
        .iter()
        .map(|c| {
            c.member_indices
                .iter()
                .map(|&i| d.records()[i].values[s].render())
                .collect::<HashSet<_>>()
                .len()
        })
        .min()
        .ok_or(Error::EmptyDataset)
}

/// k, distinct l and the class-size histogram in one pass.
pub fn audit<T: Scalar>(d: &Dataset<T>) -> Result<AnonymityReport> {
    let classes = equivalence_classes(d);
    let k = classes
        .iter()
        .map(EquivalenceClass::size)
        .min()
        .ok_or(Error::EmptyDataset)?;
    let l_distinct = match d.schema().sensitive_index() {
        Some(s) => Some(l_distinct_of(d, &classes, s)?),
        None => None,
    };
    let mut class_size_histogram = BTreeMap::new();
    for c in &classes {
        *class_size_histogram.entry(c.size()).or_insert(0) += 1;
    }
    Ok(AnonymityReport {
        k,
        l_distinct,
        class_count: classes.len(),
        class_size_histogram,
    })
}

/// Requested-versus-measured k in the `=` / `>(v)` / `<(v)` notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportCell {
    Equal,
    Greater(usize),
    Less(usize),
}

impl ReportCell {
    pub fn is_less(&self) -> bool {
        matches!(self, ReportCell::Less(_))
    }
}

impl fmt::Display for ReportCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportCell::Equal => f.write_str("="),
            ReportCell::Greater(v) => write!(f, ">({v})"),
            ReportCell::Less(v) => write!(f, "<({v})"),
        }
    }
}

impl Serialize for ReportCell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn compare_cell(requested_k: usize, measured_k: usize) -> ReportCell {
    use std::cmp::Ordering::*;
    match measured_k.cmp(&requested_k) {
        Equal => ReportCell::Equal,
        Greater => ReportCell::Greater(measured_k),
        Less => ReportCell::Less(measured_k),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{
        AttributeKind, AttributeRole, AttributeSchema, Cell, Provenance, Record, Schema,
    };
    use crate::taxonomy::TaxonomySet;

    fn attr(name: &str, role: AttributeRole) -> AttributeSchema<f64> {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Categorical,
            role,
            numeric_domain: None,
            taxonomy_ref: None,
        }
    }

    /// Rows of (qi1, qi2, sensitive) with categorical non-taxonomy QIs.
    fn dataset(rows: &[(&str, &str, &str)], with_qis: bool) -> Dataset {
        let qi_role = if with_qis {
            AttributeRole::QuasiIdentifier
        } else {
            AttributeRole::Insensitive
        };
        // Categorical QIs need taxonomies; numeric kind sidesteps that here.
        let mut a = attr("a", qi_role);
        let mut b = attr("b", qi_role);
        if with_qis {
            a.kind = AttributeKind::Numeric;
            b.kind = AttributeKind::Numeric;
        }
        let schema = Schema::new(
            vec![a, b, attr("s", AttributeRole::Sensitive)],
            TaxonomySet::new(),
        )
        .unwrap();
        let records = rows
            .iter()
            .map(|(x, y, s)| {
                let cell = |v: &str| {
                    if with_qis {
                        Cell::Number(v.parse().unwrap())
                    } else {
                        Cell::Raw(v.into())
                    }
                };
                Record::new(vec![cell(x), cell(y), Cell::Raw((*s).into())])
            })
            .collect();
        Dataset::new(Arc::new(schema), records, Provenance::Original).unwrap()
    }

    #[test]
    fn no_qis_single_class() {
        let d = dataset(&[("1", "2", "x"), ("3", "4", "y")], false);
        let classes = equivalence_classes(&d);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].member_indices, vec![0, 1]);
        assert!(classes[0].signature.is_empty());
    }

    #[test]
    fn grouping_by_signature() {
        let d = dataset(
            &[
                ("1", "1", "x"),
                ("2", "2", "x"),
                ("1", "1", "y"),
                ("2", "2", "y"),
                ("1", "1", "x"),
            ],
            true,
        );
        let classes = equivalence_classes(&d);
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].member_indices, vec![0, 2, 4]);
        assert_eq!(classes[1].member_indices, vec![1, 3]);
        assert_eq!(calc_k(&d).unwrap(), 2);
        assert_eq!(calc_l_distinct(&d).unwrap(), 2);
        let report = audit(&d).unwrap();
        assert_eq!(report.class_count, 2);
        assert_eq!(report.class_size_histogram, BTreeMap::from([(2, 1), (3, 1)]));
    }

    #[test]
    fn k_examples() {
        let same: Vec<_> = (0..10).map(|_| ("1", "1", "flu")).collect();
        assert_eq!(calc_k(&dataset(&same, true)).unwrap(), 10);
        assert_eq!(calc_l_distinct(&dataset(&same, true)).unwrap(), 1);

        let mut rows = Vec::new();
        rows.extend(std::iter::repeat_n(("1", "1", "a"), 3));
        rows.extend(std::iter::repeat_n(("2", "2", "a"), 2));
        rows.extend(std::iter::repeat_n(("3", "3", "a"), 5));
        assert_eq!(calc_k(&dataset(&rows, true)).unwrap(), 2);

        let mut rows: Vec<_> = (0..99).map(|_| ("1", "1", "a")).collect();
        rows.push(("9", "9", "a"));
        assert_eq!(calc_k(&dataset(&rows, true)).unwrap(), 1);
    }

    #[test]
    fn l_examples() {
        let d = dataset(&[("1", "1", "flu"), ("1", "1", "flu"), ("1", "1", "cancer")], true);
        assert_eq!(calc_l_distinct(&d).unwrap(), 2);
        let d = dataset(
            &[
                ("1", "1", "a"),
                ("1", "1", "b"),
                ("1", "1", "c"),
                ("2", "2", "a"),
                ("2", "2", "b"),
            ],
            true,
        );
        assert_eq!(calc_l_distinct(&d).unwrap(), 2);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let d = dataset(&[], true);
        assert!(matches!(calc_k(&d), Err(Error::EmptyDataset)));
        assert!(audit(&d).is_err());
    }

    #[test]
    fn no_sensitive_attribute() {
        let schema = Schema::new(
            vec![AttributeSchema {
                name: "a".into(),
                kind: AttributeKind::Numeric,
                role: AttributeRole::QuasiIdentifier,
                numeric_domain: None,
                taxonomy_ref: None,
            }],
            TaxonomySet::new(),
        )
        .unwrap();
        let d = Dataset::new(
            Arc::new(schema),
            vec![Record::new(vec![Cell::Number(1.0)])],
            Provenance::Original,
        )
        .unwrap();
        assert!(matches!(calc_l_distinct(&d), Err(Error::NoSensitiveAttribute)));
        assert_eq!(audit(&d).unwrap().l_distinct, None);
    }

    #[test]
    fn interval_and_raw_text_are_indistinguishable() {
        // Signatures compare rendered text only.
        let schema = Schema::new(
            vec![
                AttributeSchema {
                    name: "a".into(),
                    kind: AttributeKind::Numeric,
                    role: AttributeRole::QuasiIdentifier,
                    numeric_domain: None,
                    taxonomy_ref: None,
                },
                attr("s", AttributeRole::Sensitive),
            ],
            TaxonomySet::new(),
        )
        .unwrap();
        let d = Dataset::new_unchecked(
            Arc::new(schema),
            vec![
                Record::new(vec![Cell::Interval(20.0, 30.0), Cell::Raw("x".into())]),
                Record::new(vec![Cell::Raw("20-30".into()), Cell::Raw("x".into())]),
            ],
            Provenance::Merged,
        );
        assert_eq!(calc_k(&d).unwrap(), 2);
    }

    #[test]
    fn table_notation() {
        assert_eq!(compare_cell(20, 22).to_string(), ">(22)");
        assert_eq!(compare_cell(55, 54).to_string(), "<(54)");
        assert_eq!(compare_cell(10, 10).to_string(), "=");
        assert_eq!(serde_json::to_string(&compare_cell(5, 6)).unwrap(), "\">(6)\"");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_rows() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
            prop::collection::vec((0u8..3, 0u8..3, 0u8..4), 1..60)
        }

        fn build(rows: &[(u8, u8, u8)]) -> Dataset {
            let owned: Vec<(String, String, String)> = rows
                .iter()
                .map(|(a, b, s)| (a.to_string(), b.to_string(), format!("s{s}")))
                .collect();
            let refs: Vec<(&str, &str, &str)> = owned
                .iter()
                .map(|(a, b, s)| (a.as_str(), b.as_str(), s.as_str()))
                .collect();
            dataset(&refs, true)
        }

        proptest! {
            #[test]
            fn permutation_invariant(rows in arb_rows(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut shuffled = rows.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let (a, b) = (build(&rows), build(&shuffled));
                prop_assert_eq!(calc_k(&a).unwrap(), calc_k(&b).unwrap());
                prop_assert_eq!(calc_l_distinct(&a).unwrap(), calc_l_distinct(&b).unwrap());
            }

            #[test]
            fn duplication_doubles_k(rows in arb_rows()) {
                let doubled: Vec<_> = rows.iter().chain(rows.iter()).copied().collect();
                prop_assert_eq!(calc_k(&build(&doubled)).unwrap(), 2 * calc_k(&build(&rows)).unwrap());
            }

            #[test]
            fn appending_existing_signature_never_lowers_k(rows in arb_rows(), pick in any::<prop::sample::Index>(), s in 0u8..4) {
                let (a, b, _) = rows[pick.index(rows.len())];
                let mut more = rows.clone();
                more.push((a, b, s));
                prop_assert!(calc_k(&build(&more)).unwrap() >= calc_k(&build(&rows)).unwrap());
            }
        }
    }
}
