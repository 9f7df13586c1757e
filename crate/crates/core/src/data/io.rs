use std::io::Read;
use std::sync::Arc;

use crate::data::{AttributeKind, Cell, Dataset, Domain, Provenance, Record, Schema, SchemaConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How permissive cell parsing is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellParse {
    /// Original data: numbers and taxonomy leaves only.
    Original,
    /// Anonymized data: also intervals and internal taxonomy labels in quasi-identifiers.
    Generalized,
}

/// Reads an original (not yet anonymized) dataset.
pub fn load_dataset<T: Scalar, R: Read>(source: R, config: &SchemaConfig) -> Result<Dataset<T>> {
    load_with(source, config, CellParse::Original, Provenance::Original)
}

/// Reads a dataset whose quasi-identifiers may already be generalized.
pub fn load_generalized<T: Scalar, R: Read>(
    source: R,
    config: &SchemaConfig,
    provenance: Provenance,
) -> Result<Dataset<T>> {
    load_with(source, config, CellParse::Generalized, provenance)
}

fn load_with<T: Scalar, R: Read>(
    source: R,
    config: &SchemaConfig,
    mode: CellParse,
    provenance: Provenance,
) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Schema("empty file: no header row".into()));
    }
    let mut schema: Schema<T> = config.schema_for(&header)?;

    let mut records = Vec::new();
    for (row, line) in reader.records().enumerate() {
        let line = line?;
        let mut values = Vec::with_capacity(header.len());
        for (idx, text) in line.iter().enumerate() {
            let cell = parse_cell(&schema, idx, text, mode).map_err(|message| Error::Cell {
                row: row + 1,
                column: header[idx].clone(),
                message,
            })?;
            values.push(cell);
        }
        records.push(Record::new(values));
    }

    for idx in 0..schema.len() {
        let attr = schema.attribute(idx);
        if attr.kind != AttributeKind::Numeric || attr.numeric_domain.is_some() {
            continue;
        }
        let mut bounds = records.iter().filter_map(|r| r.values[idx].bounds());
        if let Some(first) = bounds.next() {
            let (lo, hi) = bounds.fold(first, |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
            schema.set_domain(idx, Domain::new(lo, hi));
        }
    }

    let schema = Arc::new(schema);
    for (row, r) in records.iter().enumerate() {
        schema.check_record(r).map_err(|message| Error::Cell {
            row: row + 1,
            column: String::new(),
            message,
        })?;
    }
    Ok(Dataset::new_unchecked(schema, records, provenance))
}

/// Parses one field against attribute `idx` of `schema`.
pub fn parse_cell<T: Scalar>(
    schema: &Schema<T>,
    idx: usize,
    text: &str,
    mode: CellParse,
) -> std::result::Result<Cell<T>, String> {
    let attr = schema.attribute(idx);
    let text = text.trim();
    match attr.kind {
        AttributeKind::Numeric => {
            if let Some(v) = parse_number::<T>(text) {
                return Ok(Cell::Number(v));
            }
            if mode == CellParse::Generalized && attr.is_qi() {
                if let Some((lo, hi)) = parse_interval::<T>(text) {
                    return Ok(Cell::Interval(lo, hi));
                }
                return Err(format!("`{text}` is neither a number nor an interval"));
            }
            Err(format!("non-numeric token `{text}`"))
        }
        AttributeKind::Categorical => match schema.taxonomy_for(idx) {
            Some(t) if attr.is_qi() => {
                if t.is_leaf(text) {
                    Ok(Cell::Raw(text.to_string()))
                } else if t.contains(text) {
                    if mode == CellParse::Generalized {
                        Ok(Cell::NodeLabel(text.to_string()))
                    } else {
                        Err(format!("`{text}` is a generalized label, expected a leaf"))
                    }
                } else {
                    Err(format!("`{text}` is not in the hierarchy"))
                }
            }
            _ => Ok(Cell::Raw(text.to_string())),
        },
    }
}

fn parse_number<T: Scalar>(text: &str) -> Option<T> {
    text.parse::<T>().ok().filter(|v| v.is_finite())
}

/// Accepts `lo-hi`, `lo - hi` and `lo..hi`.
fn parse_interval<T: Scalar>(text: &str) -> Option<(T, T)> {
    let (a, b) = match text.split_once("..") {
        Some(parts) => parts,
        None => {
            // Skip a leading sign so "-5-3" is not split at position 0.
            let pos = text.get(1..)?.find('-')? + 1;
            (&text[..pos], &text[pos + 1..])
        }
    };
    let lo = parse_number::<T>(a.trim())?;
    let hi = parse_number::<T>(b.trim())?;
    (lo <= hi).then_some((lo, hi))
}

/// Header plus rendered records.
pub fn serialize_csv<T: Scalar>(d: &Dataset<T>) -> Vec<u8> {
    write_rows(d.schema(), d.records())
}

pub(crate) fn write_rows<T: Scalar>(schema: &Schema<T>, records: &[Record<T>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    w.write_record(schema.names()).expect("in-memory write");
    for r in records {
        w.write_record(r.values.iter().map(Cell::render))
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_records;

    const CONFIG: &str = r#"{"attributes":[
        {"name":"age","kind":"numeric","role":"qi"},
        {"name":"city","kind":"categorical","role":"qi","hierarchy":"city.csv"},
        {"name":"zip","kind":"numeric","role":"qi","domain":{"min":0,"max":100000}},
        {"name":"disease","kind":"categorical","role":"sensitive"}]}"#;

    const CITY: &str = "Milan;Northern Italy;Italy\nTurin;Northern Italy;Italy\nNaples;Southern Italy;Italy\n";

    fn config() -> SchemaConfig {
        SchemaConfig::from_json_with(CONFIG, |_| Ok(CITY.to_string())).unwrap()
    }

    fn csv_rows(n: usize) -> String {
        let cities = ["Milan", "Turin", "Naples"];
        let diseases = ["Cancer", "Autism", "AIDS", "Anorexia"];
        let mut s = String::from("age,city,zip,disease\n");
        for i in 0..n {
            s.push_str(&format!(
                "{},{},{},{}\n",
                1 + (i * 37) % 100,
                cities[i % 3],
                (i * 7919) % 100000,
                diseases[i % 4]
            ));
        }
        s
    }

    #[test]
    fn loads_four_column_dataset() {
        let d: Dataset = load_dataset(csv_rows(100).as_bytes(), &config()).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d.schema().len(), 4);
        assert_eq!(d.qi_count(), 3);
        assert_eq!(d.schema().sensitive_index(), Some(3));
        assert_eq!(*d.provenance(), Provenance::Original);
        assert!(d
            .records()
            .iter()
            .flat_map(|r| &r.values)
            .all(|c| matches!(c, Cell::Raw(_) | Cell::Number(_))));
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let d: Dataset = load_dataset("age,city,zip,disease\n".as_bytes(), &config()).unwrap();
        assert_eq!(d.len(), 0);
    }

    #[test]
    fn infers_numeric_domain() {
        let csv = "age,city,zip,disease\n20,Milan,1,Flu\n30,Turin,2,Flu\n40,Naples,3,Flu\n";
        let d: Dataset = load_dataset(csv.as_bytes(), &config()).unwrap();
        assert_eq!(
            d.schema().attribute(0).numeric_domain,
            Some(Domain::new(20.0, 40.0))
        );
        // Configured domain wins over inference.
        assert_eq!(
            d.schema().attribute(2).numeric_domain,
            Some(Domain::new(0.0, 100000.0))
        );
    }

    #[test]
    fn load_errors() {
        let cfg = config();
        let bad_header = "age,city,disease\n1,Milan,Flu\n";
        assert!(matches!(
            load_dataset::<f64, _>(bad_header.as_bytes(), &cfg),
            Err(Error::Schema(_))
        ));
        let dup = "age,age,zip,disease\n1,2,3,Flu\n";
        assert!(load_dataset::<f64, _>(dup.as_bytes(), &cfg).is_err());
        let non_numeric = "age,city,zip,disease\nold,Milan,3,Flu\n";
        assert!(matches!(
            load_dataset::<f64, _>(non_numeric.as_bytes(), &cfg),
            Err(Error::Cell { row: 1, .. })
        ));
        assert!(load_dataset::<f64, _>("".as_bytes(), &cfg).is_err());
        let unknown_city = "age,city,zip,disease\n1,Rome,3,Flu\n";
        assert!(load_dataset::<f64, _>(unknown_city.as_bytes(), &cfg).is_err());
        let out_of_domain = "age,city,zip,disease\n1,Milan,200000,Flu\n";
        assert!(load_dataset::<f64, _>(out_of_domain.as_bytes(), &cfg).is_err());
    }

    #[test]
    fn missing_value_token_is_a_value() {
        let csv = "age,city,zip,disease\n1,Milan,3,?\n";
        let d: Dataset = load_dataset(csv.as_bytes(), &config()).unwrap();
        assert_eq!(d.records()[0].values[3], Cell::Raw("?".into()));
    }

    #[test]
    fn generalized_load_accepts_intervals_and_labels() {
        let csv = "age,city,zip,disease\n20-30,Northern Italy,0-500,Flu\n-5..3,Milan,7,Flu\n";
        let d: Dataset = load_generalized(
            csv.as_bytes(),
            &config(),
            Provenance::Anonymized {
                algorithm: None,
                requested_k: 2,
            },
        )
        .unwrap();
        assert_eq!(d.records()[0].values[0], Cell::Interval(20.0, 30.0));
        assert_eq!(
            d.records()[0].values[1],
            Cell::NodeLabel("Northern Italy".into())
        );
        assert_eq!(d.records()[1].values[0], Cell::Interval(-5.0, 3.0));
        assert_eq!(d.records()[1].values[1], Cell::Raw("Milan".into()));
        // The original loader refuses the same file.
        assert!(load_dataset::<f64, _>(csv.as_bytes(), &config()).is_err());
    }

    #[test]
    fn interval_parsing() {
        assert_eq!(parse_interval::<f64>("26-35"), Some((26.0, 35.0)));
        assert_eq!(parse_interval::<f64>("1 - 50"), Some((1.0, 50.0)));
        assert_eq!(parse_interval::<f64>("-10..-2"), Some((-10.0, -2.0)));
        assert_eq!(parse_interval::<f64>("35-26"), None);
        assert_eq!(parse_interval::<f64>("abc"), None);
    }

    #[test]
    fn round_trip_and_f32() {
        let src = csv_rows(30);
        let d: Dataset = load_dataset(src.as_bytes(), &config()).unwrap();
        let again: Dataset = load_dataset(serialize_csv(&d).as_slice(), &config()).unwrap();
        assert_eq!(d, again);
        let d32: Dataset<f32> = load_dataset(src.as_bytes(), &config()).unwrap();
        assert_eq!(serialize_csv(&d32), serialize_csv(&d));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_csv() -> impl Strategy<Value = String> {
            let row = (0u32..200, 0usize..3, 0u32..100_000, 0usize..4, 0u32..4);
            prop::collection::vec(row, 0..40).prop_map(|rows| {
                let cities = ["Milan", "Turin", "Naples"];
                let diseases = ["Cancer", "Heart disease", "?", "A, quoted \"one\""];
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["age", "city", "zip", "disease"]).unwrap();
                for (age, c, zip, dis, frac) in rows {
                    let age = format!("{}", age as f64 + frac as f64 * 0.25);
                    w.write_record([age, cities[c].to_string(), zip.to_string(), diseases[dis].to_string()])
                        .unwrap();
                }
                String::from_utf8(w.into_inner().unwrap()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn load_serialize_load_is_identity(src in arb_csv()) {
                let cfg = config();
                let d: Dataset = load_dataset(src.as_bytes(), &cfg).unwrap();
                let again: Dataset = load_dataset(serialize_csv(&d).as_slice(), &cfg).unwrap();
                prop_assert_eq!(d, again);
            }

            #[test]
            fn sampling_is_deterministic_sub_multiset(src in arb_csv(), frac in 0.0f64..=1.0, seed in any::<u64>()) {
                let d: Dataset = load_dataset(src.as_bytes(), &config()).unwrap();
                let count = (d.len() as f64 * frac) as usize;
                let a = sample_records(&d, count, seed).unwrap();
                let b = sample_records(&d, count, seed).unwrap();
                prop_assert_eq!(a.len(), count);
                prop_assert_eq!(a.records(), b.records());
                let mut pool: Vec<String> = d.records().iter().map(|r| format!("{r:?}")).collect();
                for r in a.records() {
                    let key = format!("{r:?}");
                    let pos = pool.iter().position(|p| *p == key);
                    prop_assert!(pos.is_some());
                    pool.swap_remove(pos.unwrap());
                }
            }
        }
    }

    #[test]
    fn sample_edge_cases() {
        let d: Dataset = load_dataset(csv_rows(10).as_bytes(), &config()).unwrap();
        assert_eq!(sample_records(&d, 0, 1).unwrap().len(), 0);
        let full = sample_records(&d, 10, 99).unwrap();
        let mut a: Vec<_> = full.records().iter().map(|r| format!("{r:?}")).collect();
        let mut b: Vec<_> = d.records().iter().map(|r| format!("{r:?}")).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(matches!(
            sample_records(&d, 11, 1),
            Err(Error::SampleTooLarge { .. })
        ));
    }
}
