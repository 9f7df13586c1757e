//! Datasets, schemas, CSV ingestion/serialization and sampling.

mod io;
mod schema;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub(crate) use io::write_rows;
pub use io::{load_dataset, load_generalized, parse_cell, serialize_csv, CellParse};
pub use schema::{
    AttributeConfig, AttributeKind, AttributeRole, AttributeSchema, Domain, Schema, SchemaConfig,
};

use crate::anonymize::Algorithm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One field of a record.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell<T> {
    /// Verbatim categorical value.
    Raw(String),
    Number(T),
    /// Closed range produced by numeric generalization.
    Interval(T, T),
    /// Internal taxonomy node produced by categorical generalization.
    NodeLabel(String),
}

impl<T: Scalar> Cell<T> {
    /// Text used in CSV output and for equivalence-class signatures.
    ///
    /// Intervals render as `lo-hi`, or `lo..hi` when either bound is negative.
    pub fn render(&self) -> String {
        match self {
            Cell::Raw(s) | Cell::NodeLabel(s) => s.clone(),
            Cell::Number(v) => format_number(*v),
            Cell::Interval(lo, hi) => {
                let sep = if *lo < T::zero() || *hi < T::zero() {
                    ".."
                } else {
                    "-"
                };
                format!("{}{sep}{}", format_number(*lo), format_number(*hi))
            }
        }
    }

    /// Numeric bounds of a number or interval cell.
    pub fn bounds(&self) -> Option<(T, T)> {
        match self {
            Cell::Number(v) => Some((*v, *v)),
            Cell::Interval(lo, hi) => Some((*lo, *hi)),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Cell::Raw(s) | Cell::NodeLabel(s) => Some(s),
            _ => None,
        }
    }
}

impl<T: Scalar> fmt::Display for Cell<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Integral values print without a decimal point.
pub(crate) fn format_number<T: Scalar>(v: T) -> String {
    if v == T::zero() {
        // Avoid "-0".
        return "0".to_string();
    }
    format!("{v}")
}

/// One row, aligned to schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<T> {
    pub values: Vec<Cell<T>>,
}

impl<T> Record<T> {
    pub fn new(values: Vec<Cell<T>>) -> Self {
        Record { values }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Anonymized {
        algorithm: Option<Algorithm>,
        requested_k: usize,
    },
    Merged,
}

/// Schema plus ordered records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    schema: Arc<Schema<T>>,
    records: Vec<Record<T>>,
    provenance: Provenance,
}

impl<T: Scalar> Dataset<T> {
    /// Validates every record against the schema.
    pub fn new(
        schema: Arc<Schema<T>>,
        records: Vec<Record<T>>,
        provenance: Provenance,
    ) -> Result<Self> {
        for (row, r) in records.iter().enumerate() {
            schema.check_record(r).map_err(|message| Error::Cell {
                row,
                column: String::new(),
                message,
            })?;
        }
        Ok(Dataset {
            schema,
            records,
            provenance,
        })
    }

    pub(crate) fn new_unchecked(
        schema: Arc<Schema<T>>,
        records: Vec<Record<T>>,
        provenance: Provenance,
    ) -> Self {
        Dataset {
            schema,
            records,
            provenance,
        }
    }

    pub fn schema(&self) -> &Schema<T> {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema<T>> {
        &self.schema
    }

    pub fn records(&self) -> &[Record<T>] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record<T>> {
        self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Number of records (n).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of quasi-identifiers (z).
    pub fn qi_count(&self) -> usize {
        self.schema.qi_indices().len()
    }

    /// Rendered quasi-identifier cells of one record.
    pub fn qi_signature(&self, idx: usize) -> Vec<String> {
        signature_of(&self.schema.qi_indices(), &self.records[idx])
    }

    /// Distinct rendered values of one column, in first-seen order.
    pub fn distinct_rendered(&self, attr: usize) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .map(|r| r.values[attr].render())
            .filter(|v| seen.insert(v.clone()))
            .collect()
    }
}

pub(crate) fn signature_of<T: Scalar>(qi: &[usize], record: &Record<T>) -> Vec<String> {
    qi.iter().map(|&i| record.values[i].render()).collect()
}

/// Uniform sample without replacement; equal seeds give equal samples.
///
/// Sampled records keep their original relative order.
pub fn sample_records<T: Scalar>(d: &Dataset<T>, count: usize, seed: u64) -> Result<Dataset<T>> {
    if count > d.len() {
        return Err(Error::SampleTooLarge {
            requested: count,
            available: d.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, d.len(), count).into_vec();
    picked.sort_unstable();
    let records = picked.into_iter().map(|i| d.records[i].clone()).collect();
    Ok(Dataset::new_unchecked(
        d.schema.clone(),
        records,
        d.provenance.clone(),
    ))
}
