use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anonymize::{check_preconditions, finish_run, Algorithm, AnonymizationRun};
use crate::data::Dataset;
use crate::error::Result;
use crate::loss::{pair_ncp, Hull, QiSpace};
use crate::scalar::Scalar;

/// Greedy k-member clustering.
///
/// While at least `k` records are unassigned, a new cluster is seeded with the
/// unassigned record farthest from the previous seed (the first reference is a
/// random record) and grown to exactly `k` members by repeatedly adding the
/// record that keeps its NCP lowest. The fewer than `k` leftovers then each
/// join the cluster whose NCP grows least. Produces `floor(n / k)` clusters.
///
/// Ties resolve to the lowest record index.
pub fn cba_anonymize<T: Scalar>(d: &Dataset<T>, k: usize, seed: u64) -> Result<AnonymizationRun<T>> {
    check_preconditions(d, k)?;
    let space = QiSpace::for_schema(d.schema())?;
    let points = space.points(d)?;
    let n = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut assigned = vec![false; n];
    let mut remaining = n;
    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(n / k);
    let mut hulls: Vec<Hull<T>> = Vec::with_capacity(n / k);
    let mut reference = rng.random_range(0..n);

    while remaining >= k {
        let start = argbest(&assigned, |x| pair_ncp(&space, &points[reference], &points[x]), true);
        assigned[start] = true;
        remaining -= 1;
        let mut members = vec![start];
        let mut hull = Hull::of(&points[start]);
        while members.len() < k {
            let next = argbest(&assigned, |x| hull.ncp_with(&space, &points[x]), false);
            assigned[next] = true;
            remaining -= 1;
            hull.extend(&space, &points[next]);
            members.push(next);
        }
        clusters.push(members);
        hulls.push(hull);
        reference = start;
    }

    for x in 0..n {
        if assigned[x] {
            continue;
        }
        let (best, _) = hulls
            .iter()
            .enumerate()
            .map(|(c, h)| (c, h.ncp_with(&space, &points[x]) - h.ncp(&space)))
            .fold(None, |best: Option<(usize, T)>, (c, inc)| match best {
                Some((_, b)) if inc >= b => best,
                _ => Some((c, inc)),
            })
            .expect("n >= k guarantees one cluster");
        hulls[best].extend(&space, &points[x]);
        clusters[best].push(x);
    }

    finish_run(d, Algorithm::ClusteringBased, k, Some(seed), clusters)
}

/// Unassigned index maximizing (or minimizing) `score`; lowest index on ties.
fn argbest<T: Scalar>(assigned: &[bool], mut score: impl FnMut(usize) -> T, maximize: bool) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (x, _) in assigned.iter().enumerate().filter(|(_, &a)| !a) {
        let s = score(x);
        let better = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    s > b
                } else {
                    s < b
                }
            }
        };
        if better {
            best = Some((x, s));
        }
    }
    best.expect("at least one unassigned record").0
}
