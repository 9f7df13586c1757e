//! Prompt rendering for the two model interactions (context understanding
//! and record augmentation) and parsing of the model's fenced-block replies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{parse_cell, write_rows, AttributeKind, CellParse, Dataset, Provenance, Record, Schema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Context-understanding template. `[Δ]` is filled; `[Γ]` and `[S]` are left
/// for the model to answer.
pub const CONTEXT_TEMPLATE: &str = "Given this attached dataset [Δ], I have performed a Data Anonimization task by using the K-Anonimity technique. Please provide a comprehensive description of it, including the following details:
- Dataset Overview: Number of rows (records) and columns (attributes); Purpose and context of the data.
Moreover, provide the following column details:
List all column names and for each of them, specify the data type (numerical, categorical, etc.); Identify the quasi-identifier columns whose values could potentially re-identify individuals when combined; Specify the sensitive column containing confidential information requiring protection; Identify the taxonomy used to anonymize this dataset. [Γ], [S]";

/// Augmentation template. `[Δ']`, `[Γ]`, `[S]` and `[K]` are filled; the
/// trailing record slots are left for the model.
pub const AUGMENTATION_TEMPLATE: &str = "Given the attached anonymized dataset [Δ'] and the following information: 1. Quasi-identifiers and their taxonomies: [Γ]; 2. A Sensitive attribute: [S]; Current k-anonymity level: k = [K].

Task: Generate new records that can be merged with the original dataset while satisfying the following conditions: a) The new records must follow the same structure and data types as the original dataset; b) The values for quasi-identifiers must be consistent with the provided taxonomies; c) The values for the sensitive attribute must be consistent with the dataset.

Important considerations: 1) Ensure that the new records do not introduce new unique combinations of quasi-identifiers that could reduce anonymity; 2) The distribution of sensitive attribute values in the new records should be similar to the original dataset to prevent attribute disclosure. 3) If possible, aim to increase or maintain the overall k-anonymity level of the merged dataset. [R''_1], ..., [R''_j]";

pub const SLOT_DELTA: &str = "[Δ]";
pub const SLOT_DELTA_ANON: &str = "[Δ']";
pub const SLOT_GAMMA: &str = "[Γ]";
pub const SLOT_SENSITIVE: &str = "[S]";
pub const SLOT_K: &str = "[K]";

const CONTEXT_FORMAT: &str = "\n\nAnswer with a single fenced ```json block of the form {\"quasi_identifiers\": [{\"attribute\": \"<column>\", \"taxonomy\": \"<levels>\"}], \"sensitive_attribute\": \"<column>\"} followed by any free-text description.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ContextUnderstanding,
    DataAugmentation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    pub text: String,
    pub embedded_dataset_csv: String,
    /// Slot marker to the exact text substituted for it.
    pub slot_values: BTreeMap<String, String>,
}

impl RenderedPrompt {
    /// Template text with every filled slot put back, and the format
    /// instruction removed.
    pub fn unfilled(&self) -> String {
        let template = match self.kind {
            PromptKind::ContextUnderstanding => CONTEXT_TEMPLATE,
            PromptKind::DataAugmentation => AUGMENTATION_TEMPLATE,
        };
        let mut out = self.text[..self.text.len() - self.format_suffix_len()].to_string();
        // Refill in template order so earlier values cannot shadow later slots.
        let mut order: Vec<(&String, &String)> = self.slot_values.iter().collect();
        order.sort_by_key(|(slot, _)| template.find(slot.as_str()));
        let mut rebuilt = String::new();
        for (slot, value) in order {
            if let Some(pos) = out.find(value.as_str()) {
                rebuilt.push_str(&out[..pos]);
                rebuilt.push_str(slot);
                out = out[pos + value.len()..].to_string();
            }
        }
        rebuilt.push_str(&out);
        rebuilt
    }

    fn format_suffix_len(&self) -> usize {
        let start = match self.kind {
            PromptKind::ContextUnderstanding => self.text.rfind(CONTEXT_FORMAT),
            PromptKind::DataAugmentation => self.text.rfind("\n\nReturn the new records"),
        };
        start.map_or(0, |s| self.text.len() - s)
    }
}

/// One `[Γ]` line: a quasi-identifier and its generalization levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEntry {
    pub attribute: String,
    pub levels: String,
}

/// Taxonomy descriptions for every quasi-identifier of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma {
    pub entries: Vec<GammaEntry>,
}

impl Gamma {
    /// Categorical attributes list their taxonomy levels, leaves first;
    /// numeric attributes list the distinct intervals observed in `d`.
    pub fn for_dataset<T: Scalar>(d: &Dataset<T>) -> Result<Self> {
        let schema = d.schema();
        let mut entries = Vec::new();
        for idx in schema.qi_indices() {
            let attr = schema.attribute(idx);
            let levels = match attr.kind {
                AttributeKind::Categorical => {
                    let t = schema.taxonomy_for(idx).ok_or_else(|| {
                        Error::Schema(format!("no taxonomy for `{}`", attr.name))
                    })?;
                    t.levels()
                        .iter()
                        .map(|level| level.join(", "))
                        .collect::<Vec<_>>()
                        .join(" -> ")
                }
                AttributeKind::Numeric => {
                    let mut cells: Vec<_> = d.records().iter().map(|r| &r.values[idx]).collect();
                    cells.sort_by(|a, b| {
                        let (a, b) = (a.bounds(), b.bounds());
                        a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
                    });
                    let mut seen = Vec::<String>::new();
                    for c in cells {
                        let s = c.render();
                        if seen.last() != Some(&s) && !seen.contains(&s) {
                            seen.push(s);
                        }
                    }
                    seen.join(", ")
                }
            };
            entries.push(GammaEntry {
                attribute: attr.name.clone(),
                levels,
            });
        }
        Ok(Gamma { entries })
    }

    pub fn get(&self, attribute: &str) -> Option<&GammaEntry> {
        self.entries.iter().find(|e| e.attribute == attribute)
    }

    /// Block substituted for `[Γ]`: one `- name: levels` line per entry.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str("\n- ");
            out.push_str(&e.attribute);
            out.push_str(": ");
            out.push_str(&e.levels);
        }
        out.push('\n');
        out
    }
}

/// Wraps CSV text in a fenced block.
pub fn fence_csv(csv: &str) -> String {
    let mut s = String::from("\n```csv\n");
    s.push_str(csv);
    if !csv.ends_with('\n') {
        s.push('\n');
    }
    s.push_str("```\n");
    s
}

fn require_anonymized<T: Scalar>(d: &Dataset<T>) -> Result<()> {
    if !matches!(d.provenance(), Provenance::Anonymized { .. }) {
        return Err(Error::InvalidArgument(
            "prompts are rendered from anonymized datasets only".into(),
        ));
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn embedded_csv<T: Scalar>(d: &Dataset<T>) -> String {
    String::from_utf8(write_rows(d.schema(), d.records())).expect("rendered cells are UTF-8")
}

/// Fills the context-understanding template with `d_anon` inlined as CSV.
pub fn render_context_prompt<T: Scalar>(d_anon: &Dataset<T>) -> Result<RenderedPrompt> {
    require_anonymized(d_anon)?;
    let csv = embedded_csv(d_anon);
    let delta = fence_csv(&csv);
    let mut text = CONTEXT_TEMPLATE.replacen(SLOT_DELTA, &delta, 1);
    text.push_str(CONTEXT_FORMAT);
    Ok(RenderedPrompt {
        kind: PromptKind::ContextUnderstanding,
        text,
        embedded_dataset_csv: csv,
        slot_values: BTreeMap::from([(SLOT_DELTA.to_string(), delta)]),
    })
}

/// Fills the augmentation template.
///
/// `sensitive` must name a schema column and `gamma` must describe every
/// quasi-identifier.
pub fn render_augmentation_prompt<T: Scalar>(
    d_anon: &Dataset<T>,
    k: usize,
    sensitive: &str,
    gamma: &Gamma,
) -> Result<RenderedPrompt> {
    require_anonymized(d_anon)?;
    if k < 2 {
        return Err(Error::InvalidK {
            k,
            reason: "k must be at least 2".into(),
        });
    }
    let schema = d_anon.schema();
    if schema.index_of(sensitive).is_none() {
        return Err(Error::InvalidArgument(format!(
            "unknown sensitive attribute `{sensitive}`"
        )));
    }
    for idx in schema.qi_indices() {
        let name = &schema.attribute(idx).name;
        if gamma.get(name).is_none() {
            return Err(Error::InvalidArgument(format!(
                "taxonomy description missing for quasi-identifier `{name}`"
            )));
        }
    }

    let csv = embedded_csv(d_anon);
    let slots = [
        (SLOT_DELTA_ANON, fence_csv(&csv)),
        (SLOT_GAMMA, gamma.render()),
        (SLOT_SENSITIVE, sensitive.to_string()),
        (SLOT_K, k.to_string()),
    ];
    let mut text = AUGMENTATION_TEMPLATE.to_string();
    for (slot, value) in &slots {
        text = text.replacen(slot, value, 1);
    }
    text.push_str(&records_format(schema));
    Ok(RenderedPrompt {
        kind: PromptKind::DataAugmentation,
        text,
        embedded_dataset_csv: csv,
        slot_values: slots
            .into_iter()
            .map(|(s, v)| (s.to_string(), v))
            .collect(),
    })
}

fn records_format<T: Scalar>(schema: &Schema<T>) -> String {
    let header = schema.names().collect::<Vec<_>>().join(",");
    format!(
        "\n\nReturn the new records as a single fenced ```csv block whose first line is exactly this header:\n{header}"
    )
}

/// A fenced block and the language tag after its opening fence.
#[derive(Debug, Clone, PartialEq)]
pub struct FencedBlock<'a> {
    pub lang: &'a str,
    pub body: String,
}

/// Fenced blocks in order of appearance. An unterminated last block runs to
/// the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    let mut blocks = Vec::new();
    let mut open: Option<(&str, String)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match open.take() {
            None => {
                if let Some(rest) = trimmed.strip_prefix("```") {
                    open = Some((rest.trim(), String::new()));
                }
            }
            Some((lang, mut body)) => {
                if trimmed.trim_end() == "```" {
                    blocks.push(FencedBlock { lang, body });
                } else {
                    body.push_str(line);
                    body.push('\n');
                    open = Some((lang, body));
                }
            }
        }
    }
    if let Some((lang, body)) = open {
        blocks.push(FencedBlock { lang, body });
    }
    blocks
}

/// Quasi-identifiers and sensitive attribute named by a context response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractedContext {
    /// (attribute, taxonomy description) for names found in the schema.
    pub quasi_identifiers: Vec<(String, String)>,
    pub sensitive_attribute: String,
    /// Response text outside the structured block.
    pub model_free_text: String,
    /// Quasi-identifier names that are not schema columns.
    pub unknown_attributes: Vec<String>,
}

/// Differences between an extracted context and the configured schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextDiff {
    pub missing_quasi_identifiers: Vec<String>,
    pub extra_quasi_identifiers: Vec<String>,
    pub sensitive_matches: bool,
}

impl ExtractedContext {
    pub fn diff<T: Scalar>(&self, schema: &Schema<T>) -> ContextDiff {
        let configured: Vec<String> = schema
            .qi_indices()
            .iter()
            .map(|&i| schema.attribute(i).name.clone())
            .collect();
        let named: Vec<&String> = self.quasi_identifiers.iter().map(|(a, _)| a).collect();
        ContextDiff {
            missing_quasi_identifiers: configured
                .iter()
                .filter(|c| !named.contains(c))
                .cloned()
                .collect(),
            extra_quasi_identifiers: named
                .iter()
                .filter(|n| !configured.contains(n))
                .map(|n| n.to_string())
                .chain(self.unknown_attributes.iter().cloned())
                .collect(),
            sensitive_matches: schema
                .sensitive_index()
                .is_some_and(|i| schema.attribute(i).name == self.sensitive_attribute),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QiEntry {
    Name(String),
    Described {
        attribute: String,
        #[serde(default)]
        taxonomy: serde_json::Value,
    },
}

#[derive(Deserialize)]
struct ContextBlock {
    quasi_identifiers: Vec<QiEntry>,
    sensitive_attribute: String,
}

/// Reads the first fenced block of a context-understanding reply as JSON.
pub fn parse_context_response<T: Scalar>(
    response_text: &str,
    schema: &Schema<T>,
) -> Result<ExtractedContext> {
    let block = fenced_blocks(response_text)
        .into_iter()
        .next()
        .ok_or_else(|| Error::ResponseParse("no fenced block in response".into()))?;
    let parsed: ContextBlock = serde_json::from_str(&block.body)
        .map_err(|e| Error::ResponseParse(format!("context block is not valid JSON: {e}")))?;
    if schema.index_of(&parsed.sensitive_attribute).is_none() {
        return Err(Error::ResponseParse(format!(
            "unknown sensitive attribute `{}`",
            parsed.sensitive_attribute
        )));
    }

    let mut quasi_identifiers = Vec::new();
    let mut unknown_attributes = Vec::new();
    for entry in parsed.quasi_identifiers {
        let (name, taxonomy) = match entry {
            QiEntry::Name(n) => (n, String::new()),
            QiEntry::Described { attribute, taxonomy } => {
                let t = match taxonomy {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Null => String::new(),
                    other => other.to_string(),
                };
                (attribute, t)
            }
        };
        if schema.index_of(&name).is_some() {
            quasi_identifiers.push((name, taxonomy));
        } else {
            unknown_attributes.push(name);
        }
    }

    Ok(ExtractedContext {
        quasi_identifiers,
        sensitive_attribute: parsed.sensitive_attribute,
        model_free_text: strip_blocks(response_text),
        unknown_attributes,
    })
}

fn strip_blocks(text: &str) -> String {
    let mut out = Vec::new();
    let mut inside = false;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            inside = !inside;
            continue;
        }
        if !inside {
            out.push(line);
        }
    }
    out.join("\n").trim().to_string()
}

/// Records read from a reply, plus the rows that failed to parse.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecords<T> {
    pub records: Vec<Record<T>>,
    /// (row text, reason).
    pub rejected: Vec<(String, String)>,
}

/// Reads the first fenced block of an augmentation reply as CSV in schema
/// column order. Quasi-identifier columns may hold intervals or internal
/// taxonomy labels.
pub fn parse_records_response<T: Scalar>(
    response_text: &str,
    schema: &Schema<T>,
) -> Result<ParsedRecords<T>> {
    let block = fenced_blocks(response_text)
        .into_iter()
        .next()
        .ok_or_else(|| Error::ResponseParse("no parseable records: no fenced block".into()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(block.body.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let expected: Vec<&str> = schema.names().collect();
    if header != expected {
        return Err(Error::ResponseParse(format!(
            "header `{}` does not match schema columns `{}`",
            header.join(","),
            expected.join(",")
        )));
    }

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejected.push((String::new(), e.to_string()));
                continue;
            }
        };
        let text = row.iter().collect::<Vec<_>>().join(",");
        if row.len() != schema.len() {
            rejected.push((
                text,
                format!("expected {} fields, found {}", schema.len(), row.len()),
            ));
            continue;
        }
        let cells: std::result::Result<Vec<_>, String> = row
            .iter()
            .enumerate()
            .map(|(idx, field)| {
                parse_cell(schema, idx, field, CellParse::Generalized)
                    .map_err(|m| format!("column `{}`: {m}", schema.attribute(idx).name))
            })
            .collect();
        let record = match cells {
            Ok(values) => Record::new(values),
            Err(reason) => {
                rejected.push((text, reason));
                continue;
            }
        };
        match schema.check_record(&record) {
            Ok(()) => records.push(record),
            Err(reason) => rejected.push((text, reason)),
        }
    }
    if records.is_empty() {
        return Err(Error::ResponseParse(format!(
            "no parseable records ({} rows rejected)",
            rejected.len()
        )));
    }
    Ok(ParsedRecords { records, rejected })
}

/// Fenced CSV block holding `records` under the schema header.
pub fn records_block<T: Scalar>(schema: &Schema<T>, records: &[Record<T>]) -> String {
    let csv = String::from_utf8(write_rows(schema, records)).expect("rendered cells are UTF-8");
    fence_csv(&csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymize::{mondrian_anonymize, test_support::*};
    use crate::data::{load_generalized, Cell, SchemaConfig};
    use proptest::prelude::*;

    fn anon() -> Dataset<f64> {
        mondrian_anonymize(&mixed(12, 4), 3).unwrap().output
    }

    #[test]
    fn context_prompt_contains_template_phrases() {
        let p = render_context_prompt(&anon()).unwrap();
        assert!(p.text.contains("provide a comprehensive description of it"));
        assert!(p.text.contains("Identify the quasi-identifier columns whose values could potentially re-identify individuals when combined"));
        assert!(p.text.contains("Identify the taxonomy used to anonymize this dataset. [Γ], [S]"));
        assert!(!p.text.contains(SLOT_DELTA));
        assert_eq!(p.unfilled(), CONTEXT_TEMPLATE);
    }

    #[test]
    fn context_prompt_rejects_original_and_empty() {
        let d = mixed(6, 1);
        assert!(render_context_prompt(&d).is_err());
        let empty = Dataset::new(d.schema_arc().clone(), vec![], Provenance::Anonymized {
            algorithm: None,
            requested_k: 2,
        })
        .unwrap();
        assert!(matches!(render_context_prompt(&empty), Err(Error::EmptyDataset)));
    }

    #[test]
    fn embedded_csv_round_trips() {
        let d = anon();
        let p = render_context_prompt(&d).unwrap();
        let cfg = SchemaConfig::from_json_with(
            r#"{"attributes":[
                {"name":"age","kind":"numeric","role":"qi","domain":{"min":0,"max":100}},
                {"name":"city","kind":"categorical","role":"qi","hierarchy":"c"},
                {"name":"disease","kind":"categorical","role":"sensitive"},
                {"name":"note","kind":"categorical","role":"insensitive"}]}"#,
            |_| Ok(ITALY.to_string()),
        )
        .unwrap();
        let back: Dataset<f64> =
            load_generalized(p.embedded_dataset_csv.as_bytes(), &cfg, d.provenance().clone()).unwrap();
        assert_eq!(back.records(), d.records());
    }

    #[test]
    fn augmentation_prompt_fills_k() {
        let d = anon();
        let g = Gamma::for_dataset(&d).unwrap();
        let p = render_augmentation_prompt(&d, 5, "disease", &g).unwrap();
        assert!(p.text.contains("Current k-anonymity level: k = 5."));
        assert!(p.text.contains("2. A Sensitive attribute: disease;"));
        assert!(p.text.contains("[R''_1], ..., [R''_j]"));
        assert_eq!(p.unfilled(), AUGMENTATION_TEMPLATE);
    }

    #[test]
    fn gamma_has_one_line_per_qi() {
        let d = anon();
        let g = Gamma::for_dataset(&d).unwrap();
        assert_eq!(g.render().trim().lines().count(), d.qi_count());
        let city = g.get("city").unwrap();
        assert!(city.levels.ends_with("-> Italy"));
    }

    #[test]
    fn augmentation_prompt_errors() {
        let d = anon();
        let g = Gamma::for_dataset(&d).unwrap();
        assert!(render_augmentation_prompt(&d, 5, "income2", &g).is_err());
        assert!(render_augmentation_prompt(&d, 1, "disease", &g).is_err());
        let partial = Gamma {
            entries: g.entries[..1].to_vec(),
        };
        assert!(render_augmentation_prompt(&d, 5, "disease", &partial).is_err());
    }

    #[test]
    fn rendering_is_pure() {
        let d = anon();
        let g = Gamma::for_dataset(&d).unwrap();
        let a = render_augmentation_prompt(&d, 2, "disease", &g).unwrap();
        let b = render_augmentation_prompt(&d, 2, "disease", &g).unwrap();
        assert_eq!(a, b);
        for slot in [SLOT_DELTA_ANON, SLOT_GAMMA] {
            let v = &a.slot_values[slot];
            assert_eq!(a.text.matches(v.as_str()).count(), 1, "{v:?}");
        }
    }

    #[test]
    fn context_response_parses() {
        let s = schema(true, (0.0, 100.0));
        let reply = "Here you go.\n```json\n{\"quasi_identifiers\":[{\"attribute\":\"age\",\"taxonomy\":\"intervals\"},\"city\"],\"sensitive_attribute\":\"disease\"}\n```\nDone.";
        let c = parse_context_response(reply, &s).unwrap();
        assert_eq!(c.quasi_identifiers, [("age".into(), "intervals".into()), ("city".into(), String::new())]);
        assert_eq!(c.sensitive_attribute, "disease");
        assert_eq!(c.model_free_text, "Here you go.\nDone.");
        let diff = c.diff(&s);
        assert!(diff.missing_quasi_identifiers.is_empty() && diff.sensitive_matches);
    }

    #[test]
    fn context_response_unknown_names() {
        let s = schema(true, (0.0, 100.0));
        let bad = "```json\n{\"quasi_identifiers\":[\"age\"],\"sensitive_attribute\":\"income2\"}\n```";
        let err = parse_context_response(bad, &s).unwrap_err();
        assert!(err.to_string().contains("income2"));
        let extra = "```json\n{\"quasi_identifiers\":[\"age\",\"zip\"],\"sensitive_attribute\":\"disease\"}\n```";
        let c = parse_context_response(extra, &s).unwrap();
        assert_eq!(c.unknown_attributes, ["zip"]);
        assert_eq!(c.diff(&s).missing_quasi_identifiers, ["city"]);
        assert!(parse_context_response("only prose", &s).is_err());
    }

    #[test]
    fn records_response_filters_short_rows() {
        let s = schema(true, (0.0, 100.0));
        let reply = "```csv\nage,city,disease,note\n26-35,Milan,flu,a\n40,Northern Italy,flu,b\n30,Rome,cold,c\n31,Rome\n```";
        let p = parse_records_response(reply, &s).unwrap();
        assert_eq!(p.records.len(), 3);
        assert_eq!(p.rejected.len(), 1);
        assert_eq!(p.records[0].values[0], Cell::Interval(26.0, 35.0));
        assert_eq!(p.records[1].values[1], Cell::NodeLabel("Northern Italy".into()));
    }

    #[test]
    fn records_response_errors() {
        let s = schema(true, (0.0, 100.0));
        let swapped = "```csv\ncity,age,disease,note\nMilan,30,flu,a\n```";
        assert!(parse_records_response(swapped, &s).is_err());
        let err = parse_records_response("no block", &s).unwrap_err();
        assert!(err.to_string().contains("no parseable records"));
        let all_bad = "```csv\nage,city,disease,note\n30,Atlantis,flu,a\n```";
        assert!(parse_records_response(all_bad, &s).is_err());
    }

    #[test]
    fn first_block_wins() {
        let s = schema(true, (0.0, 100.0));
        let reply = "```csv\nage,city,disease,note\n30,Milan,flu,a\n```\n```csv\nage,city,disease,note\n1,Rome,x,y\n2,Rome,x,y\n```";
        assert_eq!(parse_records_response(reply, &s).unwrap().records.len(), 1);
    }

    proptest! {
        #[test]
        fn records_block_round_trips(n in 1usize..30, salt in 0u64..1000) {
            let d = mixed(n, salt);
            let block = records_block(d.schema(), d.records());
            let parsed = parse_records_response(&block, d.schema()).unwrap();
            prop_assert!(parsed.rejected.is_empty());
            prop_assert_eq!(parsed.records, d.records().to_vec());
        }
    }
}
