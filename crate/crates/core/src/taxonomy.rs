//! Value-generalization hierarchies for categorical quasi-identifiers.
//!
//! A hierarchy file lists one leaf-to-root path per row, levels separated by
//! `;`:
//!
//! ```text
//! Milan;Northern Italy;Italy
//! Naples;Southern Italy;Italy
//! ```
//!
//! Rows sharing a suffix share the corresponding ancestors. Leaf order is the
//! file order and is the total order Mondrian uses for categorical medians.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    label: String,
    parent: Option<usize>,
    children: Vec<usize>,
    /// Distance from the root (root = 0).
    depth: usize,
    leaf_count: usize,
    /// Smallest and largest leaf rank in the subtree.
    rank_span: (usize, usize),
    /// Position in file order, leaves only.
    leaf_rank: Option<usize>,
}

/// A rooted generalization tree for one attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    attribute: String,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    leaves: Vec<usize>,
}

/// Borrowed view of one node, mostly useful for tests and rendering.
#[derive(Debug, Clone, Copy)]
pub struct TaxonomyNode<'a> {
    tax: &'a Taxonomy,
    id: usize,
}

impl<'a> TaxonomyNode<'a> {
    pub fn label(&self) -> &'a str {
        &self.tax.nodes[self.id].label
    }

    pub fn children(&self) -> impl Iterator<Item = TaxonomyNode<'a>> + 'a {
        let tax = self.tax;
        tax.nodes[self.id]
            .children
            .iter()
            .map(move |&id| TaxonomyNode { tax, id })
    }

    pub fn is_leaf(&self) -> bool {
        self.tax.nodes[self.id].children.is_empty()
    }
}

impl Taxonomy {
    /// Parses a leaf-to-root hierarchy CSV.
    pub fn load_hierarchy<R: Read>(mut source: R, attribute_name: &str) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        let paths: Vec<Vec<String>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.split(';').map(|s| s.trim().to_string()).collect())
            .collect();
        Self::from_paths(attribute_name, &paths)
    }

    /// Builds a taxonomy from leaf-to-root paths.
    pub fn from_paths<S: AsRef<str>>(attribute_name: &str, paths: &[Vec<S>]) -> Result<Self> {
        let first = paths.first().ok_or_else(|| {
            Error::Hierarchy(format!("hierarchy for `{attribute_name}` is empty"))
        })?;
        let depth = first.len();
        if depth == 0 {
            return Err(Error::Hierarchy("hierarchy row has no labels".into()));
        }

        let mut tax = Taxonomy {
            attribute: attribute_name.to_string(),
            nodes: Vec::new(),
            index: HashMap::new(),
            leaves: Vec::new(),
        };

        for (row, path) in paths.iter().enumerate() {
            let line = row + 1;
            if path.len() != depth {
                return Err(Error::Hierarchy(format!(
                    "line {line}: path has {} levels, expected {depth}",
                    path.len()
                )));
            }
            if let Some(empty) = path.iter().position(|l| l.as_ref().is_empty()) {
                return Err(Error::Hierarchy(format!(
                    "line {line}: empty label at level {empty}"
                )));
            }

            // Walk root -> leaf, creating or verifying each node.
            let mut parent: Option<usize> = None;
            for (d, label) in path.iter().rev().enumerate() {
                let label = label.as_ref();
                let is_leaf = d + 1 == depth;
                match tax.index.get(label) {
                    Some(&id) => {
                        let node = &tax.nodes[id];
                        if node.parent != parent || node.depth != d {
                            return Err(Error::Hierarchy(format!(
                                "line {line}: label `{label}` appears with conflicting ancestry"
                            )));
                        }
                        parent = Some(id);
                    }
                    None => {
                        if parent.is_none() && !tax.nodes.is_empty() {
                            return Err(Error::Hierarchy(format!(
                                "line {line}: second root `{label}` (root is `{}`)",
                                tax.nodes[0].label
                            )));
                        }
                        let id = tax.nodes.len();
                        tax.nodes.push(Node {
                            label: label.to_string(),
                            parent,
                            children: Vec::new(),
                            depth: d,
                            leaf_count: 0,
                            rank_span: (usize::MAX, 0),
                            leaf_rank: None,
                        });
                        tax.index.insert(label.to_string(), id);
                        if let Some(p) = parent {
                            tax.nodes[p].children.push(id);
                        }
                        if is_leaf {
                            tax.nodes[id].leaf_rank = Some(tax.leaves.len());
                            tax.leaves.push(id);
                        }
                        parent = Some(id);
                    }
                }
            }
        }

        for (rank, &leaf) in tax.leaves.iter().enumerate() {
            let mut cur = Some(leaf);
            while let Some(id) = cur {
                let node = &mut tax.nodes[id];
                node.leaf_count += 1;
                node.rank_span = (node.rank_span.0.min(rank), node.rank_span.1.max(rank));
                cur = node.parent;
            }
        }
        Ok(tax)
    }

    pub fn attribute_name(&self) -> &str {
        &self.attribute
    }

    pub fn root(&self) -> TaxonomyNode<'_> {
        TaxonomyNode { tax: self, id: 0 }
    }

    pub fn root_label(&self) -> &str {
        &self.nodes[0].label
    }

    /// Number of levels from leaf to root inclusive.
    pub fn depth(&self) -> usize {
        self.nodes[self.leaves[0]].depth + 1
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn is_leaf(&self, label: &str) -> bool {
        self.node_id(label)
            .is_some_and(|id| self.nodes[id].children.is_empty())
    }

    pub fn leaf_labels(&self) -> impl Iterator<Item = &str> {
        self.leaves.iter().map(|&id| self.nodes[id].label.as_str())
    }

    pub fn leaf_total(&self) -> usize {
        self.leaves.len()
    }

    /// Lowest node that is an ancestor-or-self of every label.
    pub fn lca<I, S>(&self, labels: I) -> Result<&str>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut acc: Option<usize> = None;
        for label in labels {
            let id = self.require(label.as_ref())?;
            acc = Some(match acc {
                None => id,
                Some(a) => self.lca_ids(a, id),
            });
        }
        let id = acc.ok_or_else(|| Error::InvalidArgument("lca of an empty label set".into()))?;
        Ok(&self.nodes[id].label)
    }

    /// 0-based position of a leaf in file order.
    pub fn leaf_index(&self, leaf_label: &str) -> Result<usize> {
        let id = self.require(leaf_label)?;
        self.nodes[id]
            .leaf_rank
            .ok_or_else(|| Error::NotALeaf(leaf_label.to_string()))
    }

    /// Number of leaves under a node; a leaf counts as one.
    pub fn subtree_leaf_count(&self, label: &str) -> Result<usize> {
        Ok(self.nodes[self.require(label)?].leaf_count)
    }

    /// True when `ancestor` is `label` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, ancestor: &str, label: &str) -> Result<bool> {
        let a = self.require(ancestor)?;
        let l = self.require(label)?;
        Ok(self.is_ancestor_ids(a, l))
    }

    /// Labels grouped by level, leaves first and the root last.
    pub fn levels(&self) -> Vec<Vec<&str>> {
        let depth = self.depth();
        let mut levels: Vec<Vec<&str>> = vec![Vec::new(); depth];
        // Breadth-first from the root keeps sibling order stable.
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let node = &self.nodes[id];
            levels[depth - 1 - node.depth].push(&node.label);
            queue.extend(node.children.iter().copied());
        }
        // Leaves in file order rather than BFS order.
        levels[0] = self.leaf_labels().collect();
        levels
    }

    fn require(&self, label: &str) -> Result<usize> {
        self.node_id(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    // Index-based helpers used by the anonymizers and loss accumulators.

    pub(crate) fn node_id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub(crate) fn root_id(&self) -> usize {
        0
    }

    pub(crate) fn leaf_count_of(&self, id: usize) -> usize {
        self.nodes[id].leaf_count
    }

    pub(crate) fn is_leaf_id(&self, id: usize) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Smallest and largest leaf rank under a node.
    pub(crate) fn rank_span_of(&self, id: usize) -> (usize, usize) {
        self.nodes[id].rank_span
    }

    pub(crate) fn lca_ids(&self, mut a: usize, mut b: usize) -> usize {
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.expect("non-root has parent");
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.expect("non-root has parent");
        }
        while a != b {
            a = self.nodes[a].parent.expect("non-root has parent");
            b = self.nodes[b].parent.expect("non-root has parent");
        }
        a
    }

    pub(crate) fn is_ancestor_ids(&self, ancestor: usize, mut id: usize) -> bool {
        loop {
            if id == ancestor {
                return true;
            }
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }
}

/// Taxonomies for every categorical quasi-identifier, keyed by attribute name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaxonomySet {
    map: BTreeMap<String, Taxonomy>,
}

impl TaxonomySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, taxonomy: Taxonomy) {
        self.map.insert(taxonomy.attribute.clone(), taxonomy);
    }

    pub fn get(&self, attribute: &str) -> Option<&Taxonomy> {
        self.map.get(attribute)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// JSON-friendly summary of a taxonomy, leaves first.
#[derive(Debug, Clone, Serialize)]
pub struct TaxonomySummary {
    pub attribute: String,
    pub levels: Vec<Vec<String>>,
}

impl From<&Taxonomy> for TaxonomySummary {
    fn from(t: &Taxonomy) -> Self {
        TaxonomySummary {
            attribute: t.attribute.clone(),
            levels: t
                .levels()
                .into_iter()
                .map(|l| l.into_iter().map(String::from).collect())
                .collect(),
        }
    }
}
