use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audit::equivalence_classes;
use crate::backend::{BackendConfig, BackendSummary, GenerationBatch, GenerationRequest, Generator};
use crate::data::{AttributeRole, Dataset, Record};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Draws `j` records that reuse existing quasi-identifier signatures.
///
/// Each record picks an equivalence class with probability proportional to
/// its size and copies that class's quasi-identifier cells. The sensitive
/// value and each insensitive value are drawn independently from members of
/// the same class.
pub fn synth_generate<T: Scalar>(d_anon: &Dataset<T>, j: usize, seed: u64) -> Result<GenerationBatch<T>> {
    if d_anon.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if j == 0 {
        return Err(Error::InvalidArgument("j must be at least 1".into()));
    }
    let schema = d_anon.schema();
    let records = d_anon.records();
    let classes = equivalence_classes(d_anon);
    let mut class_of = vec![0; records.len()];
    for (c, class) in classes.iter().enumerate() {
        for &m in &class.member_indices {
            class_of[m] = c;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(j);
    for _ in 0..j {
        // A uniform record lands in a class with probability |class| / n.
        let anchor = rng.random_range(0..records.len());
        let members = &classes[class_of[anchor]].member_indices;
        let values = (0..schema.len())
            .map(|a| match schema.attribute(a).role {
                AttributeRole::QuasiIdentifier => records[anchor].values[a].clone(),
                _ => {
                    let m = members[rng.random_range(0..members.len())];
                    records[m].values[a].clone()
                }
            })
            .collect();
        out.push(Record::new(values));
    }

    Ok(GenerationBatch {
        records: out,
        backend: BackendConfig::synth(seed, j).summary(),
        raw_response: None,
        rejected_rows: Vec::new(),
        requests: 0,
    })
}

/// [`synth_generate`] behind the [`Generator`] interface.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    cfg: BackendConfig,
}

impl Synthesizer {
    pub fn new(cfg: BackendConfig) -> Self {
        Synthesizer { cfg }
    }
}

impl<T: Scalar> Generator<T> for Synthesizer {
    fn summary(&self) -> BackendSummary {
        self.cfg.summary()
    }

    fn uses_prompts(&self) -> bool {
        false
    }

    fn generate(&self, request: &GenerationRequest<'_, T>) -> Result<GenerationBatch<T>> {
        synth_generate(request.d_anon, request.count, request.seed)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;
    use crate::anonymize::{anonymize, test_support::*, Algorithm};
    use crate::audit::calc_k;
    use crate::data::{Cell, Provenance};

    fn two_classes(a: usize, b: usize) -> Dataset<f64> {
        let mut values = vec![5.0; a + b];
        values[0] = 0.0;
        values[a + b - 1] = 20.0;
        let d = ages(&values);
        let records = (0..a + b)
            .map(|i| {
                let mut r = d.records()[i].clone();
                r.values[0] = if i < a { Cell::Interval(0.0, 10.0) } else { Cell::Interval(11.0, 20.0) };
                r
            })
            .collect();
        Dataset::new(
            d.schema_arc().clone(),
            records,
            Provenance::Anonymized { algorithm: None, requested_k: 2 },
        )
        .unwrap()
    }

    #[test]
    fn class_share_tracks_class_size() {
        let d = two_classes(60, 40);
        for seed in 1..=20 {
            let b = synth_generate(&d, 1000, seed).unwrap();
            let first = b.records.iter().filter(|r| r.values[0] == Cell::Interval(0.0, 10.0)).count();
            let share = first as f64 / 1000.0;
            assert!((0.4..=0.8).contains(&share), "seed {seed}: {share}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let d = anonymize(&mixed(40, 2), Algorithm::ClusteringBased, 4, 0).unwrap().output;
        let a = synth_generate(&d, 25, 7).unwrap();
        let b = synth_generate(&d, 25, 7).unwrap();
        let c = synth_generate(&d, 25, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn rejects_degenerate_input() {
        let d = two_classes(2, 2);
        assert!(synth_generate(&d, 0, 1).is_err());
        let empty = Dataset::new(d.schema_arc().clone(), vec![], d.provenance().clone()).unwrap();
        assert!(matches!(synth_generate(&empty, 3, 1), Err(Error::EmptyDataset)));
    }

    #[test]
    fn sensitive_values_come_from_the_class() {
        let d = anonymize(&mixed(50, 9), Algorithm::BasicMondrian, 5, 0).unwrap().output;
        let qi = d.schema().qi_indices();
        let b = synth_generate(&d, 200, 3).unwrap();
        for r in &b.records {
            let sig: Vec<String> = qi.iter().map(|&i| r.values[i].render()).collect();
            let allowed: HashSet<_> = d
                .records()
                .iter()
                .filter(|o| qi.iter().map(|&i| o.values[i].render()).collect::<Vec<_>>() == sig)
                .map(|o| o.values[2].render())
                .collect();
            assert!(allowed.contains(&r.values[2].render()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn no_new_signatures_and_k_never_drops(
            n in 6usize..60, salt in 0u64..500, k in 2usize..6, j in 1usize..80, seed in 0u64..1000,
        ) {
            prop_assume!(k <= n);
            let d = anonymize(&mixed(n, salt), Algorithm::ALL[(salt % 3) as usize], k, seed).unwrap().output;
            let sigs: HashSet<_> = (0..d.len()).map(|i| d.qi_signature(i)).collect();
            let b = synth_generate(&d, j, seed).unwrap();
            prop_assert_eq!(b.records.len(), j);
            let mut merged = d.records().to_vec();
            for r in &b.records {
                prop_assert!(d.schema().check_record(r).is_ok());
                let sig: Vec<String> = d.schema().qi_indices().iter().map(|&i| r.values[i].render()).collect();
                prop_assert!(sigs.contains(&sig));
                merged.push(r.clone());
            }
            let m = Dataset::new(d.schema_arc().clone(), merged, Provenance::Merged).unwrap();
            prop_assert!(calc_k(&m).unwrap() >= calc_k(&d).unwrap());
        }
    }
}
