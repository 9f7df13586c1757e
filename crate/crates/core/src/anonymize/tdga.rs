use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anonymize::{check_preconditions, finish_run, Algorithm, AnonymizationRun};
use crate::data::Dataset;
use crate::error::Result;
use crate::loss::{pair_ncp, Coord, Hull, QiSpace};
use crate::scalar::Scalar;

/// Groups of at least this many multiples of k are split further.
const SPLIT_FACTOR: usize = 2;

/// Farthest-pair refinement rounds when picking split seeds.
const SEED_ROUNDS: usize = 3;

/// Top-down greedy anonymization.
///
/// Starting from the whole dataset, every group of size `>= 2k` is split in
/// two around a far-apart seed pair. Remaining records join the side whose
/// NCP grows least. A side left below `k` is topped up with the records of
/// the other side that cost it least; if that cannot work the split is undone
/// and the group is final.
pub fn tdga_anonymize<T: Scalar>(d: &Dataset<T>, k: usize, seed: u64) -> Result<AnonymizationRun<T>> {
    check_preconditions(d, k)?;
    let space = QiSpace::for_schema(d.schema())?;
    let points = space.points(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut work = vec![(0..d.len()).collect::<Vec<_>>()];
    let mut done = Vec::new();
    while let Some(group) = work.pop() {
        if group.len() < SPLIT_FACTOR * k {
            done.push(group);
            continue;
        }
        match split(&space, &points, &group, k, &mut rng) {
            Some((a, b)) => {
                work.push(b);
                work.push(a);
            }
            None => done.push(group),
        }
    }
    finish_run(d, Algorithm::TopDownGreedy, k, Some(seed), done)
}

fn farthest<T: Scalar>(space: &QiSpace<'_, T>, points: &[Vec<Coord<T>>], from: usize, group: &[usize]) -> usize {
    let mut best = None;
    for &x in group {
        if x == from {
            continue;
        }
        let dist = pair_ncp(space, &points[from], &points[x]);
        match best {
            Some((_, bd)) if dist <= bd => {}
            _ => best = Some((x, dist)),
        }
    }
    best.map(|b| b.0).unwrap_or(from)
}

fn split<T: Scalar>(
    space: &QiSpace<'_, T>,
    points: &[Vec<Coord<T>>],
    group: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut u = group[rng.random_range(0..group.len())];
    let mut v = u;
    for _ in 0..SEED_ROUNDS {
        v = farthest(space, points, u, group);
        u = farthest(space, points, v, group);
    }
    if u == v {
        return None;
    }

    let mut rest: Vec<usize> = group.iter().copied().filter(|&x| x != u && x != v).collect();
    rest.shuffle(rng);

    let mut sides = [vec![u], vec![v]];
    let mut hulls = [Hull::of(&points[u]), Hull::of(&points[v])];
    let mut ncps = [hulls[0].ncp(space), hulls[1].ncp(space)];
    for x in rest {
        let inc0 = hulls[0].ncp_with(space, &points[x]) - ncps[0];
        let inc1 = hulls[1].ncp_with(space, &points[x]) - ncps[1];
        let side = if inc0 < inc1 {
            0
        } else if inc1 < inc0 {
            1
        } else {
            usize::from(sides[1].len() < sides[0].len())
        };
        hulls[side].extend(space, &points[x]);
        ncps[side] = hulls[side].ncp(space);
        sides[side].push(x);
    }

    // Balance: move the cheapest records from the larger side.
    let small = usize::from(sides[1].len() < sides[0].len());
    let large = 1 - small;
    while sides[small].len() < k && sides[large].len() > k {
        let (pos, _) = sides[large]
            .iter()
            .enumerate()
            .map(|(pos, &x)| (pos, hulls[small].ncp_with(space, &points[x])))
            .fold(None, |best: Option<(usize, T)>, (pos, c)| match best {
                Some((_, bc)) if c >= bc => best,
                _ => Some((pos, c)),
            })?;
        let x = sides[large].remove(pos);
        hulls[small].extend(space, &points[x]);
        sides[small].push(x);
    }
    if sides[small].len() < k || sides[large].len() < k {
        return None;
    }
    let [a, b] = sides;
    Some((a, b))
}
