//! k-anonymization, privacy auditing and k-preserving augmentation of
//! tabular datasets.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below pin the precision.

// Negated float comparisons in this crate are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anonymize;
pub mod audit;
pub mod backend;
pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod pipeline;
pub mod profiles;
pub mod prompt;
pub mod scalar;
pub mod taxonomy;

pub use anonymize::{anonymize, Algorithm, AnonymizationRun, Partition};
pub use audit::{audit, calc_k, calc_l_distinct, compare_cell, equivalence_classes, AnonymityReport, ReportCell};
pub use data::{load_dataset, load_generalized, sample_records, serialize_csv, Cell, Dataset, Provenance, Record, Schema, SchemaConfig};
pub use error::{Error, Result};
pub use backend::{from_config, BackendConfig, BackendKind, GenerationBatch, Generator, RemoteLlm, Synthesizer};
pub use harness::{default_k_grid, run_experiment, run_grid, ExperimentPlan, ExperimentReport, ExperimentTable, TableCell};
pub use pipeline::{augment_and_merge, AugmentOptions, AugmentRun, MergeOutcome, PolicyMode, ValidationPolicy};
pub use profiles::Profile;
pub use prompt::{render_augmentation_prompt, render_context_prompt, Gamma, PromptKind, RenderedPrompt};
pub use scalar::Scalar;
pub use taxonomy::{Taxonomy, TaxonomySet};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Record64 = Record<f64>;
pub type Cell64 = Cell<f64>;
pub type AnonymizationRun64 = AnonymizationRun<f64>;
pub type AnonymizationRun32 = AnonymizationRun<f32>;
pub type MergeOutcome64 = MergeOutcome<f64>;
pub type MergeOutcome32 = MergeOutcome<f32>;
