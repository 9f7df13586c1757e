//! Normalized certainty penalty (NCP) and global certainty penalty (GCP).
//!
//! * numeric attribute: `(group_max - group_min) / (domain_max - domain_min)`
//! * categorical attribute: `0` if the group covers a single leaf, otherwise
//!   `leaves(lca(values)) / leaves(root)`
//! * group: unweighted mean over the quasi-identifiers
//! * dataset: record-weighted mean of the group penalties

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::{Cell, Dataset, Record, Schema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::taxonomy::Taxonomy;

pub fn ncp_numeric<T: Scalar>(group_min: T, group_max: T, domain_min: T, domain_max: T) -> Result<T> {
    if !(domain_min < domain_max) {
        return Err(Error::ZeroWidthDomain {
            min: domain_min.to_string(),
            max: domain_max.to_string(),
        });
    }
    if !(domain_min <= group_min && group_min <= group_max && group_max <= domain_max) {
        return Err(Error::InvalidArgument(format!(
            "group [{group_min}, {group_max}] is not inside domain [{domain_min}, {domain_max}]"
        )));
    }
    Ok((group_max - group_min) / (domain_max - domain_min))
}

pub fn ncp_categorical<T, I, S>(t: &Taxonomy, values: I) -> Result<T>
where
    T: Scalar,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let lca = t.lca(values)?;
    Ok(categorical_ratio(t, t.node_id(lca).expect("lca is a node")))
}

fn categorical_ratio<T: Scalar>(t: &Taxonomy, node: usize) -> T {
    if t.is_leaf_id(node) {
        T::zero()
    } else {
        T::ratio(t.leaf_count_of(node), t.leaf_count_of(t.root_id()))
    }
}

/// Per-attribute penalties of one group, keyed by attribute name in schema order.
pub fn attribute_ncps<'r, T, I>(group: I, schema: &Schema<T>) -> Result<Vec<(String, T)>>
where
    T: Scalar,
    I: IntoIterator<Item = &'r Record<T>>,
{
    let space = QiSpace::for_schema(schema)?;
    let mut hull: Option<Hull<T>> = None;
    for r in group {
        let p = space.point_of(r)?;
        match &mut hull {
            None => hull = Some(Hull::of(&p)),
            Some(h) => h.extend(&space, &p),
        }
    }
    let hull = hull.ok_or_else(|| Error::InvalidArgument("empty group".into()))?;
    Ok(space
        .dims
        .iter()
        .zip(&hull.coords)
        .map(|(dim, c)| (schema.attribute(dim.attr).name.clone(), space.dim_ncp(dim, c)))
        .collect())
}

/// Mean NCP over the quasi-identifiers; `0` when there are none.
pub fn group_ncp<'r, T, I>(group: I, schema: &Schema<T>) -> Result<T>
where
    T: Scalar,
    I: IntoIterator<Item = &'r Record<T>>,
{
    let per = attribute_ncps(group, schema)?;
    if per.is_empty() {
        return Ok(T::zero());
    }
    let sum = per.iter().fold(T::zero(), |acc, (_, v)| acc + *v);
    Ok(sum / T::from_f64(per.len() as f64))
}

/// `Σ |g| · ncp(g) / n` from `(size, ncp)` pairs.
pub fn gcp_from_groups<T: Scalar>(groups: &[(usize, T)], n: usize) -> Result<T> {
    let total: usize = groups.iter().map(|g| g.0).sum();
    if total != n {
        return Err(Error::InvalidArgument(format!(
            "group sizes sum to {total}, expected {n}"
        )));
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let weighted = groups
        .iter()
        .fold(T::zero(), |acc, &(size, ncp)| acc + T::from_f64(size as f64) * ncp);
    Ok(weighted / T::from_f64(n as f64))
}

/// GCP of a partition of `d` given as record-index groups.
pub fn gcp_dataset<T: Scalar>(d: &Dataset<T>, groups: &[Vec<usize>]) -> Result<T> {
    Ok(loss_breakdown(d, groups)?.gcp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown<T> {
    /// Record-weighted mean NCP of each quasi-identifier.
    pub per_attribute_ncp: BTreeMap<String, T>,
    /// NCP of each group, in input order.
    pub group_ncp: Vec<T>,
    pub gcp: T,
}

pub fn loss_breakdown<T: Scalar>(d: &Dataset<T>, groups: &[Vec<usize>]) -> Result<LossBreakdown<T>> {
    let n = d.len();
    let total: usize = groups.iter().map(Vec::len).sum();
    if total != n {
        return Err(Error::InvalidArgument(format!(
            "group sizes sum to {total}, expected {n}"
        )));
    }
    let mut per_attr: BTreeMap<String, T> = BTreeMap::new();
    let mut group_ncps = Vec::with_capacity(groups.len());
    let mut sized = Vec::with_capacity(groups.len());
    for g in groups {
        if let Some(&bad) = g.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("record index {bad} out of range")));
        }
        let per = attribute_ncps(g.iter().map(|&i| &d.records()[i]), d.schema())?;
        let weight = T::from_f64(g.len() as f64);
        for (name, v) in &per {
            let acc = per_attr.entry(name.clone()).or_insert(T::zero());
            *acc = *acc + weight * *v;
        }
        let ncp = if per.is_empty() {
            T::zero()
        } else {
            per.iter().fold(T::zero(), |a, (_, v)| a + *v) / T::from_f64(per.len() as f64)
        };
        group_ncps.push(ncp);
        sized.push((g.len(), ncp));
    }
    if n > 0 {
        let nn = T::from_f64(n as f64);
        for v in per_attr.values_mut() {
            *v = *v / nn;
        }
    }
    Ok(LossBreakdown {
        per_attribute_ncp: per_attr,
        group_ncp: group_ncps,
        gcp: gcp_from_groups(&sized, n)?,
    })
}

// ---------------------------------------------------------------------------
// Incremental machinery shared by the anonymizers.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Coord<T> {
    Num(T, T),
    /// Taxonomy node id.
    Cat(usize),
}

pub(crate) enum DimKind<'a, T> {
    /// Domain width; `0` means every value is equal and the penalty is `0`.
    Numeric(T),
    Categorical(&'a Taxonomy),
}

pub(crate) struct Dim<'a, T> {
    pub attr: usize,
    pub kind: DimKind<'a, T>,
}

/// Quasi-identifier geometry of a schema.
pub(crate) struct QiSpace<'a, T> {
    pub dims: Vec<Dim<'a, T>>,
}

impl<'a, T: Scalar> QiSpace<'a, T> {
    pub fn for_schema(schema: &'a Schema<T>) -> Result<Self> {
        let dims = schema
            .qi_indices()
            .into_iter()
            .map(|attr| {
                let a = schema.attribute(attr);
                let kind = if a.is_numeric() {
                    DimKind::Numeric(a.numeric_domain.map(|d| d.width()).unwrap_or_default())
                } else {
                    DimKind::Categorical(schema.taxonomy_for(attr).ok_or_else(|| {
                        Error::Schema(format!("no taxonomy for `{}`", a.name))
                    })?)
                };
                Ok(Dim { attr, kind })
            })
            .collect::<Result<_>>()?;
        Ok(QiSpace { dims })
    }

    pub fn point_of(&self, r: &Record<T>) -> Result<Vec<Coord<T>>> {
        self.dims
            .iter()
            .map(|dim| {
                let cell = &r.values[dim.attr];
                match (&dim.kind, cell) {
                    (DimKind::Numeric(_), c) => c
                        .bounds()
                        .map(|(lo, hi)| Coord::Num(lo, hi))
                        .ok_or_else(|| Error::InvalidArgument(format!("{c:?} is not numeric"))),
                    (DimKind::Categorical(t), Cell::Raw(s) | Cell::NodeLabel(s)) => t
                        .node_id(s)
                        .map(Coord::Cat)
                        .ok_or_else(|| Error::UnknownLabel(s.clone())),
                    (_, c) => Err(Error::InvalidArgument(format!("{c:?} is not categorical"))),
                }
            })
            .collect()
    }

    pub fn points(&self, d: &Dataset<T>) -> Result<Vec<Vec<Coord<T>>>> {
        d.records().iter().map(|r| self.point_of(r)).collect()
    }

    pub fn dim_ncp(&self, dim: &Dim<'a, T>, c: &Coord<T>) -> T {
        match (&dim.kind, c) {
            (DimKind::Numeric(w), Coord::Num(lo, hi)) => {
                if *w > T::zero() {
                    (*hi - *lo) / *w
                } else {
                    T::zero()
                }
            }
            (DimKind::Categorical(t), Coord::Cat(node)) => categorical_ratio(t, *node),
            _ => unreachable!("coordinate kind matches dimension kind"),
        }
    }

    fn join(&self, dim: &Dim<'a, T>, a: &Coord<T>, b: &Coord<T>) -> Coord<T> {
        match (&dim.kind, a, b) {
            (_, Coord::Num(l1, h1), Coord::Num(l2, h2)) => Coord::Num(l1.min(*l2), h1.max(*h2)),
            (DimKind::Categorical(t), Coord::Cat(x), Coord::Cat(y)) => Coord::Cat(t.lca_ids(*x, *y)),
            _ => unreachable!("coordinate kind matches dimension kind"),
        }
    }

    fn mean(&self, sum: T) -> T {
        if self.dims.is_empty() {
            T::zero()
        } else {
            sum / T::from_f64(self.dims.len() as f64)
        }
    }
}

/// Bounding box of a group: numeric ranges and categorical LCAs.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Hull<T> {
    pub coords: Vec<Coord<T>>,
}

impl<T: Scalar> Hull<T> {
    pub fn of(point: &[Coord<T>]) -> Self {
        Hull {
            coords: point.to_vec(),
        }
    }

    #[cfg(test)]
    pub fn of_group(space: &QiSpace<'_, T>, points: &[Vec<Coord<T>>], members: &[usize]) -> Self {
        let mut h = Hull::of(&points[members[0]]);
        for &m in &members[1..] {
            h.extend(space, &points[m]);
        }
        h
    }

    pub fn extend(&mut self, space: &QiSpace<'_, T>, point: &[Coord<T>]) {
        for ((dim, c), p) in space.dims.iter().zip(self.coords.iter_mut()).zip(point) {
            *c = space.join(dim, c, p);
        }
    }

    pub fn ncp(&self, space: &QiSpace<'_, T>) -> T {
        let sum = space
            .dims
            .iter()
            .zip(&self.coords)
            .fold(T::zero(), |acc, (d, c)| acc + space.dim_ncp(d, c));
        space.mean(sum)
    }

    /// NCP the hull would have after adding `point`.
    pub fn ncp_with(&self, space: &QiSpace<'_, T>, point: &[Coord<T>]) -> T {
        let sum = space
            .dims
            .iter()
            .zip(&self.coords)
            .zip(point)
            .fold(T::zero(), |acc, ((d, c), p)| {
                acc + space.dim_ncp(d, &space.join(d, c, p))
            });
        space.mean(sum)
    }
}

/// NCP of the two-record group `{a, b}`.
pub(crate) fn pair_ncp<T: Scalar>(space: &QiSpace<'_, T>, a: &[Coord<T>], b: &[Coord<T>]) -> T {
    Hull::of(a).ncp_with(space, b)
}
