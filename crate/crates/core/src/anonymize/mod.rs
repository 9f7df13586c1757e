//! Partition-then-generalize k-anonymizers: Basic Mondrian, top-down greedy
//! (TDGA) and clustering-based (CBA).
//!
//! None of them suppresses records: the output has exactly the input rows, in
//! input order, with quasi-identifier cells replaced by their partition's
//! generalization.

mod cba;
mod mondrian;
mod tdga;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cba::cba_anonymize;
pub use mondrian::mondrian_anonymize;
pub use tdga::tdga_anonymize;

use crate::audit::{audit, AnonymityReport};
use crate::data::{Cell, Dataset, Provenance, Record, Schema};
use crate::error::{Error, Result};
use crate::loss::gcp_dataset;
use crate::scalar::Scalar;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "BM")]
    BasicMondrian,
    #[serde(rename = "TDGA")]
    TopDownGreedy,
    #[serde(rename = "CBA")]
    ClusteringBased,
}

impl Algorithm {
    /// Report column order.
    pub const ALL: [Algorithm; 3] = [
        Algorithm::BasicMondrian,
        Algorithm::TopDownGreedy,
        Algorithm::ClusteringBased,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            Algorithm::BasicMondrian => "BM",
            Algorithm::TopDownGreedy => "TDGA",
            Algorithm::ClusteringBased => "CBA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm" | "mondrian" => Ok(Algorithm::BasicMondrian),
            "tdga" | "tdg" => Ok(Algorithm::TopDownGreedy),
            "cba" => Ok(Algorithm::ClusteringBased),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected bm, tdga or cba)"
            ))),
        }
    }
}

/// One group of the output and its shared quasi-identifier cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    pub member_indices: Vec<usize>,
    /// One cell per quasi-identifier, in schema order.
    pub generalized_qi_cells: Vec<Cell<T>>,
}

#[derive(Debug, Clone)]
pub struct AnonymizationRun<T> {
    pub algorithm: Algorithm,
    pub requested_k: usize,
    pub partitions: Vec<Partition<T>>,
    pub output: Dataset<T>,
    /// Global certainty penalty of the partition over the input records.
    pub gcp: T,
    /// `None` for Mondrian, which uses no randomness.
    pub seed: Option<u64>,
}

/// JSON sidecar written next to an anonymized CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub algorithm: Algorithm,
    pub requested_k: usize,
    pub seed: Option<u64>,
    pub gcp: f64,
    pub partitions: usize,
    pub report: AnonymityReport,
}

impl<T: Scalar> AnonymizationRun<T> {
    pub fn metadata(&self) -> Result<RunMetadata> {
        Ok(RunMetadata {
            algorithm: self.algorithm,
            requested_k: self.requested_k,
            seed: self.seed,
            gcp: self.gcp.to_f64(),
            partitions: self.partitions.len(),
            report: audit(&self.output)?,
        })
    }
}

/// Runs `algorithm`; `seed` is ignored by Mondrian.
pub fn anonymize<T: Scalar>(
    d: &Dataset<T>,
    algorithm: Algorithm,
    k: usize,
    seed: u64,
) -> Result<AnonymizationRun<T>> {
    match algorithm {
        Algorithm::BasicMondrian => mondrian_anonymize(d, k),
        Algorithm::TopDownGreedy => tdga_anonymize(d, k, seed),
        Algorithm::ClusteringBased => cba_anonymize(d, k, seed),
    }
}

/// Generalized quasi-identifier cells covering every record of `group`.
///
/// Numeric: the enclosing interval, or the bare number when all values agree.
/// Categorical: the lowest common ancestor, left as the raw leaf when the
/// group holds a single value.
pub fn generalize_group<'r, T, I>(group: I, schema: &Schema<T>) -> Result<Vec<Cell<T>>>
where
    T: Scalar,
    I: IntoIterator<Item = &'r Record<T>> + Clone,
{
    let mut out = Vec::new();
    for attr in schema.qi_indices() {
        let cells = group.clone().into_iter().map(|r| &r.values[attr]);
        if schema.attribute(attr).is_numeric() {
            let mut range: Option<(T, T)> = None;
            for c in cells {
                let (lo, hi) = c
                    .bounds()
                    .ok_or_else(|| Error::InvalidArgument(format!("{c:?} is not numeric")))?;
                range = Some(match range {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
            let (lo, hi) = range.ok_or_else(|| Error::InvalidArgument("empty group".into()))?;
            out.push(if lo == hi {
                Cell::Number(lo)
            } else {
                Cell::Interval(lo, hi)
            });
        } else {
            let t = schema
                .taxonomy_for(attr)
                .ok_or_else(|| Error::Schema("categorical QI without taxonomy".into()))?;
            let labels: Vec<&str> = cells
                .map(|c| {
                    c.label()
                        .ok_or_else(|| Error::InvalidArgument(format!("{c:?} is not categorical")))
                })
                .collect::<Result<_>>()?;
            let lca = t.lca(labels)?;
            out.push(if t.is_leaf(lca) {
                Cell::Raw(lca.to_string())
            } else {
                Cell::NodeLabel(lca.to_string())
            });
        }
    }
    Ok(out)
}

/// True when `general` covers `raw`: interval containment or taxonomy ancestry.
pub fn covers<T: Scalar>(general: &Cell<T>, raw: &Cell<T>, taxonomy: Option<&Taxonomy>) -> bool {
    match (general.bounds(), raw.bounds()) {
        (Some((glo, ghi)), Some((lo, hi))) => glo <= lo && hi <= ghi,
        (None, None) => match (general.label(), raw.label(), taxonomy) {
            (Some(g), Some(r), Some(t)) => t.is_ancestor_or_self(g, r).unwrap_or(false),
            (Some(g), Some(r), None) => g == r,
            _ => false,
        },
        _ => false,
    }
}

pub(crate) fn check_preconditions<T: Scalar>(d: &Dataset<T>, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidK {
            k,
            reason: "k must be at least 2".into(),
        });
    }
    if d.qi_count() == 0 {
        return Err(Error::NoQuasiIdentifiers);
    }
    if d.len() < k {
        return Err(Error::InvalidK {
            k,
            reason: format!("dataset has only {} records", d.len()),
        });
    }
    Ok(())
}

/// Generalizes each group and assembles the run.
pub(crate) fn finish_run<T: Scalar>(
    d: &Dataset<T>,
    algorithm: Algorithm,
    k: usize,
    seed: Option<u64>,
    mut groups: Vec<Vec<usize>>,
) -> Result<AnonymizationRun<T>> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);

    let qi = d.schema().qi_indices();
    let mut records: Vec<Record<T>> = d.records().to_vec();
    let mut partitions = Vec::with_capacity(groups.len());
    for g in &groups {
        let cells = generalize_group(g.iter().map(|&i| &d.records()[i]), d.schema())?;
        for &i in g {
            for (&attr, cell) in qi.iter().zip(&cells) {
                records[i].values[attr] = cell.clone();
            }
        }
        partitions.push(Partition {
            member_indices: g.clone(),
            generalized_qi_cells: cells,
        });
    }
    let gcp = gcp_dataset(d, &groups)?;
    let output = Dataset::new(
        Arc::clone(d.schema_arc()),
        records,
        Provenance::Anonymized {
            algorithm: Some(algorithm),
            requested_k: k,
        },
    )?;
    log::debug!(
        "{algorithm} k={k}: {} partitions, gcp {gcp}",
        partitions.len()
    );
    Ok(AnonymizationRun {
        algorithm,
        requested_k: k,
        partitions,
        output,
        gcp,
        seed,
    })
}
