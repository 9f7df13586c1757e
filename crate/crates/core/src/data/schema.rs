use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Record};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::taxonomy::{Taxonomy, TaxonomySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttributeRole {
    #[serde(rename = "qi", alias = "quasi_identifier")]
    QuasiIdentifier,
    #[serde(rename = "sensitive")]
    Sensitive,
    #[serde(rename = "insensitive")]
    Insensitive,
}

/// Closed numeric range `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Domain<T> {
    pub fn new(min: T, max: T) -> Self {
        Domain { min, max }
    }

    pub fn width(&self) -> T {
        self.max - self.min
    }

    pub fn contains(&self, v: T) -> bool {
        self.min <= v && v <= self.max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema<T> {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
    pub numeric_domain: Option<Domain<T>>,
    /// Key into the schema's [`TaxonomySet`]; set for categorical quasi-identifiers.
    pub taxonomy_ref: Option<String>,
}

impl<T> AttributeSchema<T> {
    pub fn is_qi(&self) -> bool {
        self.role == AttributeRole::QuasiIdentifier
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == AttributeKind::Numeric
    }
}

/// Ordered attributes plus the taxonomies of the categorical quasi-identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema<T> {
    attributes: Vec<AttributeSchema<T>>,
    taxonomies: TaxonomySet,
}

impl<T: Scalar> Schema<T> {
    pub fn new(attributes: Vec<AttributeSchema<T>>, taxonomies: TaxonomySet) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.name.is_empty() {
                return Err(Error::Schema("attribute with an empty name".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
        }
        let sensitive = attributes
            .iter()
            .filter(|a| a.role == AttributeRole::Sensitive)
            .count();
        if sensitive > 1 {
            return Err(Error::Schema(format!(
                "at most one sensitive attribute is supported, found {sensitive}"
            )));
        }
        for a in &attributes {
            if let Some(d) = &a.numeric_domain {
                if !(d.min <= d.max) {
                    return Err(Error::Schema(format!(
                        "attribute `{}`: domain min {} exceeds max {}",
                        a.name, d.min, d.max
                    )));
                }
            }
            if a.kind == AttributeKind::Categorical && a.is_qi() {
                let key = a.taxonomy_ref.as_deref().ok_or_else(|| {
                    Error::Schema(format!(
                        "categorical quasi-identifier `{}` needs a hierarchy",
                        a.name
                    ))
                })?;
                if taxonomies.get(key).is_none() {
                    return Err(Error::Schema(format!(
                        "attribute `{}` references missing taxonomy `{key}`",
                        a.name
                    )));
                }
            }
        }
        Ok(Schema {
            attributes,
            taxonomies,
        })
    }

    pub fn attributes(&self) -> &[AttributeSchema<T>] {
        &self.attributes
    }

    pub fn attribute(&self, idx: usize) -> &AttributeSchema<T> {
        &self.attributes[idx]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Positions of the quasi-identifiers, in schema order.
    pub fn qi_indices(&self) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&i| self.attributes[i].is_qi())
            .collect()
    }

    pub fn sensitive_index(&self) -> Option<usize> {
        self.attributes
            .iter()
            .position(|a| a.role == AttributeRole::Sensitive)
    }

    pub fn taxonomies(&self) -> &TaxonomySet {
        &self.taxonomies
    }

    pub fn taxonomy_for(&self, idx: usize) -> Option<&Taxonomy> {
        self.attributes[idx]
            .taxonomy_ref
            .as_deref()
            .and_then(|k| self.taxonomies.get(k))
    }

    pub(crate) fn set_domain(&mut self, idx: usize, domain: Domain<T>) {
        self.attributes[idx].numeric_domain = Some(domain);
    }

    /// Checks arity, cell kinds, taxonomy membership and domain containment.
    pub fn check_record(&self, record: &Record<T>) -> std::result::Result<(), String> {
        if record.values.len() != self.attributes.len() {
            return Err(format!(
                "expected {} fields, found {}",
                self.attributes.len(),
                record.values.len()
            ));
        }
        for (idx, (attr, cell)) in self.attributes.iter().zip(&record.values).enumerate() {
            self.check_cell(idx, cell)
                .map_err(|m| format!("column `{}`: {m}", attr.name))?;
        }
        Ok(())
    }

    pub(crate) fn check_cell(&self, idx: usize, cell: &Cell<T>) -> std::result::Result<(), String> {
        let attr = &self.attributes[idx];
        match (attr.kind, cell) {
            (AttributeKind::Numeric, Cell::Number(v)) => {
                if !v.is_finite() {
                    return Err("non-finite number".into());
                }
                if let Some(d) = &attr.numeric_domain {
                    if !d.contains(*v) {
                        return Err(format!("{v} lies outside domain [{}, {}]", d.min, d.max));
                    }
                }
                Ok(())
            }
            (AttributeKind::Numeric, Cell::Interval(lo, hi)) => {
                if !attr.is_qi() {
                    return Err("intervals are only allowed in quasi-identifiers".into());
                }
                if !(lo <= hi) {
                    return Err(format!("interval {lo}..{hi} is inverted"));
                }
                if let Some(d) = &attr.numeric_domain {
                    if !(d.contains(*lo) && d.contains(*hi)) {
                        return Err(format!(
                            "interval {lo}..{hi} exceeds domain [{}, {}]",
                            d.min, d.max
                        ));
                    }
                }
                Ok(())
            }
            (AttributeKind::Categorical, Cell::Raw(s) | Cell::NodeLabel(s)) => {
                match self.taxonomy_for(idx) {
                    Some(t) if attr.is_qi() => {
                        if !t.contains(s) {
                            return Err(format!("`{s}` is not in the hierarchy"));
                        }
                        if matches!(cell, Cell::Raw(_)) && !t.is_leaf(s) {
                            return Err(format!("`{s}` is not a leaf of the hierarchy"));
                        }
                        Ok(())
                    }
                    _ if matches!(cell, Cell::NodeLabel(_)) => {
                        Err("generalized label in a non-generalizable column".into())
                    }
                    _ => Ok(()),
                }
            }
            (kind, other) => Err(format!("{other:?} is incompatible with a {kind:?} attribute")),
        }
    }
}

/// On-disk schema description (JSON).
///
/// ```json
/// {"attributes":[{"name":"age","kind":"numeric","role":"qi","domain":{"min":0,"max":100}},
///                {"name":"city","kind":"categorical","role":"qi","hierarchy":"city.csv"}]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub attributes: Vec<AttributeConfig>,
    #[serde(skip)]
    taxonomies: TaxonomySet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<String>,
}

impl SchemaConfig {
    /// Reads a config file; hierarchy paths resolve relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_with(&text, |rel| Ok(fs::read_to_string(base.join(rel))?))
    }

    /// Parses config JSON, fetching each referenced hierarchy through `resolve`.
    pub fn from_json_with<F>(json: &str, mut resolve: F) -> Result<Self>
    where
        F: FnMut(&str) -> Result<String>,
    {
        let mut cfg: SchemaConfig = serde_json::from_str(json)?;
        for attr in &cfg.attributes {
            let wants_tax =
                attr.kind == AttributeKind::Categorical && attr.role == AttributeRole::QuasiIdentifier;
            match (&attr.hierarchy, wants_tax) {
                (Some(h), true) => {
                    let text = resolve(h)?;
                    cfg.taxonomies
                        .insert(Taxonomy::load_hierarchy(text.as_bytes(), &attr.name)?);
                }
                (None, true) => {
                    return Err(Error::Schema(format!(
                        "categorical quasi-identifier `{}` needs a hierarchy",
                        attr.name
                    )))
                }
                _ => {}
            }
        }
        Ok(cfg)
    }

    /// Builds a config directly from attributes and already-loaded taxonomies.
    pub fn from_parts(attributes: Vec<AttributeConfig>, taxonomies: TaxonomySet) -> Self {
        SchemaConfig {
            attributes,
            taxonomies,
        }
    }

    pub fn taxonomies(&self) -> &TaxonomySet {
        &self.taxonomies
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Schema with columns in `column_order`; every configured name must appear once.
    pub(crate) fn schema_for<T: Scalar, S: AsRef<str>>(&self, column_order: &[S]) -> Result<Schema<T>> {
        let mut seen = HashSet::new();
        for c in column_order {
            if !seen.insert(c.as_ref()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.as_ref())));
            }
        }
        if column_order.len() != self.attributes.len() {
            return Err(Error::Schema(format!(
                "header has {} columns, config names {}",
                column_order.len(),
                self.attributes.len()
            )));
        }
        let mut attrs = Vec::with_capacity(column_order.len());
        for c in column_order {
            let c = c.as_ref();
            let a = self
                .attributes
                .iter()
                .find(|a| a.name == c)
                .ok_or_else(|| Error::Schema(format!("column `{c}` is not in the config")))?;
            let is_cat_qi =
                a.kind == AttributeKind::Categorical && a.role == AttributeRole::QuasiIdentifier;
            attrs.push(AttributeSchema {
                name: a.name.clone(),
                kind: a.kind,
                role: a.role,
                numeric_domain: a
                    .domain
                    .filter(|_| a.kind == AttributeKind::Numeric)
                    .map(|d| Domain::new(T::from_f64(d.min), T::from_f64(d.max))),
                taxonomy_ref: is_cat_qi.then(|| a.name.clone()),
            });
        }
        Schema::new(attrs, self.taxonomies.clone())
    }
}
