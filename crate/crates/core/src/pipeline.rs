//! Anonymized-data augmentation: prompt, generate, validate, merge, re-audit.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audit::{calc_k, compare_cell, ReportCell};
use crate::backend::{GenerationBatch, GenerationRequest, Generator};
use crate::data::{write_rows, Dataset, Provenance, Record};
use crate::error::{Error, Result};
use crate::prompt::{
    parse_context_response, render_augmentation_prompt, render_context_prompt, ContextDiff,
    ExtractedContext, Gamma, RenderedPrompt,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// Only records whose quasi-identifier signature already exists.
    Strict,
    /// Any schema-valid record.
    Permissive,
}

impl FromStr for PolicyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(PolicyMode::Strict),
            "permissive" => Ok(PolicyMode::Permissive),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy `{other}` (expected strict or permissive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    pub mode: PolicyMode,
    pub max_attempts: u32,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy {
            mode: PolicyMode::Strict,
            max_attempts: 3,
        }
    }
}

impl ValidationPolicy {
    pub fn new(mode: PolicyMode, max_attempts: u32) -> Result<Self> {
        if max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be at least 1".into()));
        }
        Ok(ValidationPolicy { mode, max_attempts })
    }
}

pub const REASON_NEW_SIGNATURE: &str = "new QI signature";

/// Records turned away by validation, each with its reason.
pub type Rejected<T> = Vec<(Record<T>, String)>;

/// Splits a batch into records that may be merged into `d_anon` and the rest.
///
/// Every record must pass schema validation and carry a sensitive value
/// already present in `d_anon`. Strict mode also requires an existing
/// quasi-identifier signature.
pub fn validate_batch<T: Scalar>(
    batch: &GenerationBatch<T>,
    d_anon: &Dataset<T>,
    policy: &ValidationPolicy,
) -> (Vec<Record<T>>, Rejected<T>) {
    let schema = d_anon.schema();
    let qi = schema.qi_indices();
    let signatures: HashSet<Vec<String>> = (0..d_anon.len()).map(|i| d_anon.qi_signature(i)).collect();
    let sensitive = schema.sensitive_index();
    let observed: HashSet<String> = sensitive
        .map(|s| d_anon.distinct_rendered(s).into_iter().collect())
        .unwrap_or_default();

    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for r in &batch.records {
        if let Err(reason) = schema.check_record(r) {
            rejected.push((r.clone(), reason));
            continue;
        }
        if let Some(s) = sensitive {
            let v = r.values[s].render();
            if !observed.contains(&v) {
                rejected.push((r.clone(), format!("unseen sensitive value `{v}`")));
                continue;
            }
        }
        if policy.mode == PolicyMode::Strict {
            let sig: Vec<String> = qi.iter().map(|&i| r.values[i].render()).collect();
            if !signatures.contains(&sig) {
                rejected.push((r.clone(), REASON_NEW_SIGNATURE.to_string()));
                continue;
            }
        }
        accepted.push(r.clone());
    }
    (accepted, rejected)
}

/// The merged dataset Δ* and how it compares to the request.
#[derive(Debug, Clone)]
pub struct MergeOutcome<T> {
    pub merged: Dataset<T>,
    pub pre_k: usize,
    pub post_k: usize,
    pub requested_k: usize,
    pub cell: ReportCell,
    pub accepted_records: usize,
    pub rejected_records: usize,
    pub attempts: u32,
}

/// Serializable part of a [`MergeOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub records: usize,
    pub pre_k: usize,
    pub post_k: usize,
    pub requested_k: usize,
    pub cell: ReportCell,
    pub accepted_records: usize,
    pub rejected_records: usize,
    pub attempts: u32,
}

impl<T: Scalar> MergeOutcome<T> {
    pub fn summary(&self) -> OutcomeSummary {
        OutcomeSummary {
            records: self.merged.len(),
            pre_k: self.pre_k,
            post_k: self.post_k,
            requested_k: self.requested_k,
            cell: self.cell,
            accepted_records: self.accepted_records,
            rejected_records: self.rejected_records,
            attempts: self.attempts,
        }
    }
}

/// Generation settings for one augmentation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentOptions {
    /// Records requested per attempt (j).
    pub count: usize,
    /// Attempt `i` (from 0) generates with `seed + i`.
    pub seed: u64,
}

/// `ceil(n / 10)`, at least 1.
pub fn default_count(n: usize) -> usize {
    n.div_ceil(10).max(1)
}

/// One generation attempt.
#[derive(Debug, Clone)]
pub struct AttemptLog<T> {
    pub attempt: u32,
    pub seed: u64,
    pub request: Option<serde_json::Value>,
    pub raw_response: Option<String>,
    pub accepted: Vec<Record<T>>,
    pub rejected: Vec<(Record<T>, String)>,
    /// Rows the backend could not parse: (row text, reason).
    pub unparsed: Vec<(String, String)>,
    pub error: Option<String>,
    pub post_k: Option<usize>,
}

/// Outcome plus everything needed to inspect how it was reached.
#[derive(Debug, Clone)]
pub struct AugmentRun<T> {
    pub outcome: MergeOutcome<T>,
    pub context_prompt: RenderedPrompt,
    pub augmentation_prompt: RenderedPrompt,
    pub context_response: Option<String>,
    pub extracted_context: Option<ExtractedContext>,
    pub context_diff: Option<ContextDiff>,
    pub context_error: Option<String>,
    pub attempts: Vec<AttemptLog<T>>,
}

/// Augments `d_anon` with generated records and re-audits the result.
///
/// Both prompts are always rendered; only prompt-reading backends receive
/// them. A context reply is parsed and compared against the schema but never
/// changes it. Strict mode retries while no record is accepted and falls back
/// to Δ′ unchanged. Permissive mode retries while nothing is accepted or the
/// merged k falls below `requested_k`, and returns the last outcome that
/// accepted records.
pub fn augment_and_merge<T: Scalar>(
    d_anon: &Dataset<T>,
    requested_k: usize,
    backend: &dyn Generator<T>,
    policy: &ValidationPolicy,
    options: AugmentOptions,
) -> Result<AugmentRun<T>> {
    if policy.max_attempts == 0 {
        return Err(Error::InvalidArgument("max_attempts must be at least 1".into()));
    }
    let pre_k = calc_k(d_anon)?;
    let schema = d_anon.schema();
    let sensitive = schema
        .sensitive_index()
        .map(|i| schema.attribute(i).name.clone())
        .ok_or(Error::NoSensitiveAttribute)?;
    let context_prompt = render_context_prompt(d_anon)?;
    let gamma = Gamma::for_dataset(d_anon)?;
    let augmentation_prompt = render_augmentation_prompt(d_anon, requested_k, &sensitive, &gamma)?;

    let mut context_response = None;
    let mut extracted_context = None;
    let mut context_diff = None;
    let mut context_error = None;
    if backend.uses_prompts() {
        context_response = backend.describe(&context_prompt)?;
        if let Some(text) = &context_response {
            match parse_context_response(text, schema) {
                Ok(c) => {
                    let diff = c.diff(schema);
                    if !diff.missing_quasi_identifiers.is_empty()
                        || !diff.extra_quasi_identifiers.is_empty()
                        || !diff.sensitive_matches
                    {
                        log::warn!("extracted context differs from the schema: {diff:?}");
                    }
                    context_diff = Some(diff);
                    extracted_context = Some(c);
                }
                Err(e) => {
                    log::warn!("context reply not understood: {e}");
                    context_error = Some(e.to_string());
                }
            }
        }
    }

    let mut attempts = Vec::new();
    let mut best: Option<MergeOutcome<T>> = None;
    for attempt in 1..=policy.max_attempts {
        let seed = options.seed.wrapping_add(u64::from(attempt - 1));
        let request = GenerationRequest {
            d_anon,
            prompt: &augmentation_prompt,
            count: options.count,
            seed,
        };
        let mut log = AttemptLog {
            attempt,
            seed,
            request: backend.request_body(&augmentation_prompt),
            raw_response: None,
            accepted: Vec::new(),
            rejected: Vec::new(),
            unparsed: Vec::new(),
            error: None,
            post_k: None,
        };
        let batch = match backend.generate(&request) {
            Ok(b) => b,
            // A reply without usable rows counts as an empty attempt.
            Err(e @ Error::ResponseParse(_)) => {
                log::warn!("attempt {attempt}: {e}");
                log.error = Some(e.to_string());
                attempts.push(log);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (accepted, rejected) = validate_batch(&batch, d_anon, policy);
        log.raw_response = batch.raw_response;
        log.unparsed = batch.rejected_rows;
        log.rejected = rejected;
        if accepted.is_empty() {
            attempts.push(log);
            continue;
        }
        let outcome = merge(d_anon, &accepted, pre_k, requested_k, &log, attempt)?;
        log.accepted = accepted;
        log.post_k = Some(outcome.post_k);
        attempts.push(log);
        let done = policy.mode == PolicyMode::Strict || outcome.post_k >= requested_k;
        best = Some(outcome);
        if done {
            break;
        }
    }

    let attempts_made = attempts.len() as u32;
    let outcome = match best {
        Some(mut o) => {
            o.attempts = attempts_made;
            o
        }
        None if policy.mode == PolicyMode::Strict => {
            let last = attempts.last().expect("at least one attempt");
            merge(d_anon, &[], pre_k, requested_k, last, attempts_made)?
        }
        None => {
            return Err(Error::NoAcceptedRecords {
                attempts: attempts_made,
            })
        }
    };
    Ok(AugmentRun {
        outcome,
        context_prompt,
        augmentation_prompt,
        context_response,
        extracted_context,
        context_diff,
        context_error,
        attempts,
    })
}

fn merge<T: Scalar>(
    d_anon: &Dataset<T>,
    accepted: &[Record<T>],
    pre_k: usize,
    requested_k: usize,
    log: &AttemptLog<T>,
    attempts: u32,
) -> Result<MergeOutcome<T>> {
    let mut records = d_anon.records().to_vec();
    records.extend_from_slice(accepted);
    let merged = Dataset::new(d_anon.schema_arc().clone(), records, Provenance::Merged)?;
    let post_k = calc_k(&merged)?;
    Ok(MergeOutcome {
        merged,
        pre_k,
        post_k,
        requested_k,
        cell: compare_cell(requested_k, post_k),
        accepted_records: accepted.len(),
        rejected_records: log.rejected.len() + log.unparsed.len(),
        attempts,
    })
}

/// Writes prompts, raw replies, Δ″, Δ* and the outcome under `dir`.
///
/// Layout: `prompts/{context,augmentation}.txt`, `responses/context.txt`,
/// `responses/attempt_N.txt`, `requests/attempt_N.json`, `generated.csv`
/// (accepted records of the kept attempt), `rejected.csv`, `merged.csv`,
/// `outcome.json`.
pub fn write_run_dir<T: Scalar>(run: &AugmentRun<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("prompts"))?;
    fs::create_dir_all(dir.join("responses"))?;
    fs::write(dir.join("prompts/context.txt"), &run.context_prompt.text)?;
    fs::write(dir.join("prompts/augmentation.txt"), &run.augmentation_prompt.text)?;
    if let Some(c) = &run.context_response {
        fs::write(dir.join("responses/context.txt"), c)?;
    }
    for a in &run.attempts {
        if let Some(r) = &a.raw_response {
            fs::write(dir.join(format!("responses/attempt_{}.txt", a.attempt)), r)?;
        }
        if let Some(req) = &a.request {
            fs::create_dir_all(dir.join("requests"))?;
            fs::write(
                dir.join(format!("requests/attempt_{}.json", a.attempt)),
                serde_json::to_string_pretty(req)?,
            )?;
        }
    }

    let schema = run.outcome.merged.schema();
    let kept = &run.outcome.merged.records()[run.outcome.merged.len() - run.outcome.accepted_records..];
    fs::write(dir.join("generated.csv"), write_rows(schema, kept))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = vec!["attempt", "reason"];
    header.extend(schema.names());
    w.write_record(&header)?;
    for a in &run.attempts {
        for (r, reason) in &a.rejected {
            let mut row = vec![a.attempt.to_string(), reason.clone()];
            row.extend(r.values.iter().map(|c| c.render()));
            w.write_record(&row)?;
        }
    }
    fs::write(dir.join("rejected.csv"), w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    fs::write(dir.join("merged.csv"), write_rows(schema, run.outcome.merged.records()))?;

    let attempts: Vec<_> = run
        .attempts
        .iter()
        .map(|a| {
            serde_json::json!({
                "attempt": a.attempt,
                "seed": a.seed,
                "accepted": a.accepted.len(),
                "rejected": a.rejected.len(),
                "unparsed": a.unparsed,
                "error": a.error,
                "post_k": a.post_k,
            })
        })
        .collect();
    let json = serde_json::json!({
        "outcome": run.outcome.summary(),
        "attempts": attempts,
        "extracted_context": run.extracted_context,
        "context_diff": run.context_diff,
        "context_error": run.context_error,
    });
    fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(&json)?)?;
    Ok(())
}
