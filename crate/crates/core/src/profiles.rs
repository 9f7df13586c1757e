//! Bundled dataset profiles: schema configs, hierarchies and seeded
//! generators that reproduce published per-attribute group counts.
//!
//! Columns are drawn independently. Each column's group counts are scaled to
//! the requested row count by largest remainder, assigned to rows in a
//! shuffled order, and a leaf is picked uniformly inside each group.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Cell, Dataset, Provenance, Record, SchemaConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const ITALIA_CONFIG: &str = include_str!("../data/italia/config.json");
const ITALIA_FILES: &[(&str, &str)] = &[("city_birth.csv", include_str!("../data/italia/city_birth.csv"))];

const ADULT_CONFIG: &str = include_str!("../data/adult/config.json");
const ADULT_FILES: &[(&str, &str)] = &[
    ("workclass.csv", include_str!("../data/adult/workclass.csv")),
    ("education.csv", include_str!("../data/adult/education.csv")),
    ("marital-status.csv", include_str!("../data/adult/marital-status.csv")),
    ("race.csv", include_str!("../data/adult/race.csv")),
    ("sex.csv", include_str!("../data/adult/sex.csv")),
    ("native-country.csv", include_str!("../data/adult/native-country.csv")),
];

/// How one column is filled.
enum Column {
    /// (lo, hi, count): integers drawn uniformly from `lo..=hi`.
    Buckets(&'static [(i64, i64, usize)]),
    /// (group, count): a leaf of `group` in the column's hierarchy.
    Grouped(&'static [(&'static str, usize)]),
    /// (values, count): one of `values`, uniformly.
    Listed(&'static [(&'static [&'static str], usize)]),
}

const ITALIA_COLUMNS: &[Column] = &[
    Column::Buckets(&[(1, 50, 55), (51, 75, 25), (76, 100, 20)]),
    Column::Grouped(&[("Southern Italy", 19), ("Northern Italy", 35), ("Central Italy", 37), ("Islands", 9)]),
    Column::Buckets(&[(0, 24_999, 21), (25_000, 49_999, 36), (50_000, 74_999, 13), (75_000, 99_999, 22)]),
    Column::Listed(&[
        (&["Heart disease"], 21),
        (&["Anorexia"], 21),
        (&["Autism"], 20),
        (&["AIDS"], 14),
        (&["Alzheimer"], 13),
        (&["Cancer"], 11),
    ]),
];

const ADULT_COLUMNS: &[Column] = &[
    Column::Buckets(&[(18, 25, 5290), (26, 35, 8054), (36, 45, 7734), (46, 90, 9084)]),
    Column::Grouped(&[("Private (all)", 22286), ("Self-employed", 3573), ("Government", 4289), ("Other", 14)]),
    Column::Grouped(&[
        ("High School or less", 13335),
        ("Some college", 7686),
        ("Bachelor's", 5044),
        ("Advanced degree", 2544),
        ("Other", 553),
    ]),
    Column::Grouped(&[("Married", 14456), ("Never-Married", 9726), ("Divorced (all)", 5153), ("Widowed (all)", 827)]),
    Column::Listed(&[
        (&["Prof-specialty", "Exec-managerial", "Tech-support"], 8042),
        (&["Craft-repair", "Machine-op-inspct", "Transport-moving", "Handlers-cleaners", "Farming-fishing"], 10918),
        (&["Adm-clerical"], 3721),
        (&["Sales"], 3584),
        (&["Other-service", "Protective-serv", "Priv-house-serv"], 3999),
    ]),
    Column::Grouped(&[("White (all)", 25933), ("Black (all)", 2817), ("Other (all)", 1412)]),
    Column::Listed(&[(&["Male"], 20380), (&["Female"], 9782)]),
    Column::Grouped(&[
        ("United-States (all)", 27504),
        ("North America", 826),
        ("Asia", 1039),
        ("Europe", 520),
        ("Other", 273),
    ]),
    Column::Listed(&[(&["<=50K"], 22654), (&[">50K"], 7508)]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// 4 attributes: age, city of birth, zip code (QIs) and disease (sensitive).
    Italia,
    /// 9 census attributes; salary class is sensitive, occupation insensitive.
    Adult,
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Italia => "italia",
            Profile::Adult => "adult",
        }
    }

    /// Row count whose group counts match the source table exactly.
    pub fn default_rows(&self) -> usize {
        match self {
            Profile::Italia => 100,
            Profile::Adult => 30_162,
        }
    }

    fn files(&self) -> (&'static str, &'static [(&'static str, &'static str)]) {
        match self {
            Profile::Italia => (ITALIA_CONFIG, ITALIA_FILES),
            Profile::Adult => (ADULT_CONFIG, ADULT_FILES),
        }
    }

    pub fn config(&self) -> Result<SchemaConfig> {
        let (json, files) = self.files();
        SchemaConfig::from_json_with(json, |name| {
            files
                .iter()
                .find(|(f, _)| *f == name)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| Error::Schema(format!("no bundled hierarchy `{name}`")))
        })
    }

    /// Writes `config.json` and the hierarchy files into `dir`; returns the config path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let (json, files) = self.files();
        for (name, text) in files {
            fs::write(dir.join(name), text)?;
        }
        let path = dir.join("config.json");
        fs::write(&path, json)?;
        Ok(path)
    }

    /// `n` seeded rows; equal seeds give equal datasets.
    pub fn generate<T: Scalar>(&self, n: usize, seed: u64) -> Result<Dataset<T>> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let config = self.config()?;
        let names: Vec<&str> = config.attributes.iter().map(|a| a.name.as_str()).collect();
        let schema = Arc::new(config.schema_for::<T, _>(&names)?);
        let columns = match self {
            Profile::Italia => ITALIA_COLUMNS,
            Profile::Adult => ADULT_COLUMNS,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells: Vec<Vec<Cell<T>>> = Vec::with_capacity(columns.len());
        for (idx, column) in columns.iter().enumerate() {
            let col = match column {
                Column::Buckets(b) => {
                    let slots = shuffled_slots(b.iter().map(|x| x.2), n, &mut rng);
                    slots
                        .into_iter()
                        .map(|g| Cell::Number(T::from_f64(rng.random_range(b[g].0..=b[g].1) as f64)))
                        .collect()
                }
                Column::Grouped(groups) => {
                    let t = schema.taxonomy_for(idx).ok_or_else(|| {
                        Error::Schema(format!("no hierarchy for `{}`", names[idx]))
                    })?;
                    let leaves: Vec<Vec<String>> = groups
                        .iter()
                        .map(|(g, _)| {
                            let found: Vec<String> = t
                                .leaf_labels()
                                .filter(|l| t.is_ancestor_or_self(g, l).unwrap_or(false))
                                .map(String::from)
                                .collect();
                            if found.is_empty() {
                                Err(Error::Hierarchy(format!("group `{g}` has no leaves")))
                            } else {
                                Ok(found)
                            }
                        })
                        .collect::<Result<_>>()?;
                    let slots = shuffled_slots(groups.iter().map(|x| x.1), n, &mut rng);
                    slots
                        .into_iter()
                        .map(|g| Cell::Raw(leaves[g][rng.random_range(0..leaves[g].len())].clone()))
                        .collect()
                }
                Column::Listed(groups) => {
                    let slots = shuffled_slots(groups.iter().map(|x| x.1), n, &mut rng);
                    slots
                        .into_iter()
                        .map(|g| {
                            let vals = groups[g].0;
                            Cell::Raw(vals[rng.random_range(0..vals.len())].to_string())
                        })
                        .collect()
                }
            };
            cells.push(col);
        }

        let records = (0..n)
            .map(|row| Record::new(cells.iter().map(|c| c[row].clone()).collect()))
            .collect();
        Dataset::new(schema, records, Provenance::Original)
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "italia" => Ok(Profile::Italia),
            "adult" => Ok(Profile::Adult),
            other => Err(Error::InvalidArgument(format!(
                "unknown profile `{other}` (expected italia or adult)"
            ))),
        }
    }
}

/// Scales `counts` to sum to `n` by the largest-remainder method; ties go
/// to the earlier group.
pub fn allocate(counts: &[usize], n: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut out: Vec<usize> = counts.iter().map(|&c| c * n / total).collect();
    let mut rem: Vec<(usize, usize)> = counts.iter().enumerate().map(|(i, &c)| (c * n % total, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = n - out.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(missing) {
        out[i] += 1;
    }
    out
}

fn shuffled_slots(counts: impl Iterator<Item = usize>, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let counts: Vec<usize> = counts.collect();
    let mut slots: Vec<usize> = allocate(&counts, n)
        .into_iter()
        .enumerate()
        .flat_map(|(g, c)| std::iter::repeat_n(g, c))
        .collect();
    slots.shuffle(rng);
    slots
}
