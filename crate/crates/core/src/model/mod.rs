//! Morphological system model: a rooted tree whose leaves are components,
//! each component carrying a list of design alternatives (DAs), plus the
//! pairwise compatibility estimates between DAs of sibling components.

mod ime;
mod quality;
mod validate;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use ime::{aggregate_ime, compare_ime, IntervalMultisetEstimate};
pub(crate) use quality::{cumulative, fold_dominance};
pub use quality::{dominates_quality, quality_vector, Dominance, QualityVector};
pub use validate::{validate_model, Finding, Severity, ValidationReport};

/// Ordinal scales shared by a model: priorities run `1..=levels` (1 is best)
/// and compatibility runs `0..=compat_max` (0 is incompatible).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrdinalScale {
    pub levels: u32,
    pub compat_max: u32,
}

impl OrdinalScale {
    pub fn new(levels: u32, compat_max: u32) -> Result<Self> {
        if levels == 0 || compat_max == 0 {
            return Err(Error::Argument(format!(
                "scale requires levels >= 1 and compat_max >= 1, got ({levels}, {compat_max})"
            )));
        }
        Ok(Self { levels, compat_max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignAlternative {
    pub id: String,
    pub component: String,
    pub priority: u32,
    pub cost: f64,
    pub profit: f64,
    pub ime: Option<IntervalMultisetEstimate>,
}

impl DesignAlternative {
    pub fn new(id: impl Into<String>, component: impl Into<String>, priority: u32) -> Self {
        Self {
            id: id.into(),
            component: component.into(),
            priority,
            cost: 0.0,
            profit: 0.0,
            ime: None,
        }
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_profit(mut self, profit: f64) -> Self {
        self.profit = profit;
        self
    }

    pub fn with_ime(mut self, ime: IntervalMultisetEstimate) -> Self {
        self.ime = Some(ime);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: String,
    pub children: Vec<String>,
}

impl TreeNode {
    pub fn internal(id: impl Into<String>, children: &[&str]) -> Self {
        Self {
            id: id.into(),
            children: children.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn leaf(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Flat node list plus a designated root. Tree-ness is checked by
/// [`validate_model`]; traversal helpers assume a valid tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    root: String,
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Nodes are kept sorted by id so equal trees compare equal.
    pub fn new(root: impl Into<String>, mut nodes: Vec<TreeNode>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        Self {
            root: root.into(),
            nodes,
        }
    }

    /// Root over a single layer of leaves.
    pub fn flat(root: &str, leaves: &[&str]) -> Self {
        let mut nodes = vec![TreeNode::internal(root, leaves)];
        nodes.extend(leaves.iter().map(|l| TreeNode::leaf(*l)));
        Self::new(root, nodes)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&TreeNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.node(id).is_some()
    }

    pub fn children(&self, id: &str) -> &[String] {
        self.node(id).map(|n| n.children.as_slice()).unwrap_or(&[])
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.node(id).is_some_and(TreeNode::is_leaf)
    }

    pub fn parent(&self, id: &str) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| n.children.iter().any(|c| c == id))
            .map(|n| n.id.as_str())
    }

    /// Leaves below `id` in depth-first, left-to-right order.
    pub fn leaves_under(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![id.to_string()];
        while let Some(cur) = stack.pop() {
            let children = self.children(&cur);
            if children.is_empty() {
                out.push(cur);
            } else {
                stack.extend(children.iter().rev().cloned());
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<String> {
        self.leaves_under(&self.root)
    }

    /// Internal nodes below and including `id`, children before parents.
    pub fn internal_post_order(&self, id: &str) -> Vec<String> {
        fn walk(tree: &Tree, id: &str, out: &mut Vec<String>) {
            let children = tree.children(id);
            if children.is_empty() {
                return;
            }
            for c in children {
                walk(tree, c, out);
            }
            out.push(id.to_string());
        }
        let mut out = Vec::new();
        walk(self, id, &mut out);
        out
    }

    /// Turns an internal node into a leaf by dropping its subtree.
    pub(crate) fn collapse(&mut self, id: &str) {
        let removed: Vec<String> = self
            .children(id)
            .iter()
            .flat_map(|c| {
                let mut sub = self.internal_post_order(c);
                sub.extend(self.leaves_under(c));
                sub
            })
            .collect();
        self.nodes.retain(|n| !removed.contains(&n.id));
        if let Some(node) = self.nodes.iter_mut().find(|n| n.id == id) {
            node.children.clear();
        }
    }
}

pub(crate) fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// The morphological model. Alternatives of each leaf are kept sorted by id,
/// which makes enumeration order and serialization canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphModel {
    scale: OrdinalScale,
    tree: Tree,
    alternatives: BTreeMap<String, Vec<DesignAlternative>>,
    compatibility: BTreeMap<(String, String), u32>,
    default_compatibility: u32,
}

impl MorphModel {
    pub fn builder(scale: OrdinalScale, tree: Tree) -> ModelBuilder {
        ModelBuilder {
            scale,
            tree,
            alternatives: BTreeMap::new(),
            compatibility: BTreeMap::new(),
            default_compatibility: 0,
        }
    }

    pub fn scale(&self) -> OrdinalScale {
        self.scale
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn default_compatibility(&self) -> u32 {
        self.default_compatibility
    }

    /// Components in tree order, followed by any component entries that are
    /// not attached to a leaf.
    pub fn component_ids(&self) -> Vec<String> {
        let mut ids = self.tree.leaves();
        for key in self.alternatives.keys() {
            if !ids.contains(key) {
                ids.push(key.clone());
            }
        }
        ids
    }

    pub fn alternatives(&self, component: &str) -> &[DesignAlternative] {
        self.alternatives
            .get(component)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn all_alternatives(&self) -> impl Iterator<Item = &DesignAlternative> {
        self.alternatives.values().flatten()
    }

    pub fn alternative(&self, id: &str) -> Option<&DesignAlternative> {
        self.all_alternatives().find(|da| da.id == id)
    }

    pub fn compatibility_entries(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.compatibility
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn compat(&self, a: &str, b: &str) -> Option<u32> {
        self.compatibility.get(&pair_key(a, b)).copied()
    }

    pub fn compat_or_default(&self, a: &str, b: &str) -> u32 {
        self.compat(a, b).unwrap_or(self.default_compatibility)
    }

    /// Children of `scope`, failing unless the scope exists and every child is a leaf.
    pub fn leaf_scope(&self, scope: &str) -> Result<&[String]> {
        let node = self
            .tree
            .node(scope)
            .ok_or_else(|| Error::Argument(format!("scope `{scope}` not found")))?;
        if node.is_leaf() {
            return Err(Error::Argument(format!(
                "scope `{scope}` is a leaf, expected an internal node"
            )));
        }
        if let Some(c) = node.children.iter().find(|c| !self.tree.is_leaf(c)) {
            return Err(Error::Argument(format!(
                "scope `{scope}` has non-leaf child `{c}`"
            )));
        }
        Ok(&node.children)
    }

    pub(crate) fn set_priority(&mut self, da: &str, priority: u32) -> Result<()> {
        let target = self
            .alternatives
            .values_mut()
            .flatten()
            .find(|d| d.id == da)
            .ok_or_else(|| Error::ModelReference(format!("alternative `{da}`")))?;
        target.priority = priority;
        Ok(())
    }

    pub(crate) fn set_compat(&mut self, a: &str, b: &str, w: u32) {
        self.compatibility.insert(pair_key(a, b), w);
    }

    pub(crate) fn remove_compat(&mut self, a: &str, b: &str) {
        self.compatibility.remove(&pair_key(a, b));
    }

    pub(crate) fn set_default_compatibility(&mut self, w: u32) {
        self.default_compatibility = w;
    }

    pub(crate) fn set_scale(&mut self, scale: OrdinalScale) {
        self.scale = scale;
    }

    pub(crate) fn insert_alternative(&mut self, da: DesignAlternative) {
        let list = self.alternatives.entry(da.component.clone()).or_default();
        list.retain(|d| d.id != da.id);
        list.push(da);
        list.sort_by(|a, b| a.id.cmp(&b.id));
    }

    /// Drops the alternative and every compatibility entry mentioning it.
    pub(crate) fn remove_alternative(&mut self, id: &str) {
        for list in self.alternatives.values_mut() {
            list.retain(|d| d.id != id);
        }
        self.compatibility.retain(|(a, b), _| a != id && b != id);
    }

    pub(crate) fn retain_alternatives(&mut self, component: &str, keep: impl Fn(&str) -> bool) {
        let dropped: Vec<String> = self
            .alternatives(component)
            .iter()
            .filter(|d| !keep(&d.id))
            .map(|d| d.id.clone())
            .collect();
        for id in dropped {
            self.remove_alternative(&id);
        }
    }

    /// Replaces the subtree under `node` by a leaf whose alternatives are `das`.
    pub(crate) fn collapse_into_leaf(&mut self, node: &str, das: Vec<DesignAlternative>) {
        for leaf in self.tree.leaves_under(node) {
            self.alternatives.remove(&leaf);
        }
        self.tree.collapse(node);
        self.alternatives.insert(node.to_string(), Vec::new());
        for da in das {
            self.insert_alternative(da);
        }
    }
}

pub struct ModelBuilder {
    scale: OrdinalScale,
    tree: Tree,
    alternatives: BTreeMap<String, Vec<DesignAlternative>>,
    compatibility: BTreeMap<(String, String), u32>,
    default_compatibility: u32,
}

impl ModelBuilder {
    pub fn alternative(mut self, component: &str, id: &str, priority: u32) -> Self {
        self.alternatives
            .entry(component.to_string())
            .or_default()
            .push(DesignAlternative::new(id, component, priority));
        self
    }

    pub fn push_alternative(mut self, da: DesignAlternative) -> Self {
        self.alternatives
            .entry(da.component.clone())
            .or_default()
            .push(da);
        self
    }

    /// Registers a component even if it ends up with no alternatives.
    pub fn component(mut self, component: &str) -> Self {
        self.alternatives.entry(component.to_string()).or_default();
        self
    }

    pub fn compat(mut self, a: &str, b: &str, w: u32) -> Self {
        self.compatibility.insert(pair_key(a, b), w);
        self
    }

    pub fn default_compatibility(mut self, w: u32) -> Self {
        self.default_compatibility = w;
        self
    }

    /// Builds without checking invariants; pair with [`validate_model`].
    pub fn build_unchecked(mut self) -> MorphModel {
        for list in self.alternatives.values_mut() {
            list.sort_by(|a, b| a.id.cmp(&b.id));
        }
        MorphModel {
            scale: self.scale,
            tree: self.tree,
            alternatives: self.alternatives,
            compatibility: self.compatibility,
            default_compatibility: self.default_compatibility,
        }
    }

    pub fn build(self) -> Result<MorphModel> {
        let model = self.build_unchecked();
        let report = validate_model(&model);
        if report.has_errors() {
            return Err(Error::Invalid(report));
        }
        Ok(model)
    }
}

/// One DA chosen per child of a synthesis scope, in the scope's child order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositeSystem {
    pub scope: String,
    pub selection: Vec<(String, String)>,
}

impl CompositeSystem {
    pub fn new(scope: impl Into<String>, selection: Vec<(String, String)>) -> Self {
        Self {
            scope: scope.into(),
            selection,
        }
    }

    /// Builds a composite from DA ids given in the scope's child order.
    pub fn from_ids(model: &MorphModel, scope: &str, ids: &[&str]) -> Result<Self> {
        let selection = ids
            .iter()
            .map(|id| {
                model
                    .alternative(id)
                    .map(|da| (da.component.clone(), da.id.clone()))
                    .ok_or_else(|| Error::ModelReference(format!("alternative `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(scope, selection))
    }

    pub fn da_ids(&self) -> Vec<&str> {
        self.selection.iter().map(|(_, d)| d.as_str()).collect()
    }

    pub fn get(&self, component: &str) -> Option<&str> {
        self.selection
            .iter()
            .find(|(c, _)| c == component)
            .map(|(_, d)| d.as_str())
    }

    /// Identifier used when this composite becomes a DA of its scope node.
    /// Nested composites are parenthesized.
    pub fn composite_id(&self) -> String {
        self.selection
            .iter()
            .map(|(_, d)| {
                if d.contains('*') {
                    format!("({d})")
                } else {
                    d.clone()
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Lexicographic comparison of the selected DA ids.
    pub fn cmp_selection(&self, other: &Self) -> std::cmp::Ordering {
        self.da_ids().cmp(&other.da_ids())
    }
}
