use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::MorphModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    /// Where in the model the finding applies, e.g. `compatibility(A1,A2)`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

const RESERVED_ID_CHARS: [char; 3] = ['*', '(', ')'];

/// Checks every model invariant. Errors and warnings are returned, never raised.
pub fn validate_model(model: &MorphModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tree_ok = check_tree(model, &mut report);
    check_alternatives(model, &mut report);
    check_compatibility(model, &mut report);
    if tree_ok {
        warn_default_pairs(model, &mut report);
    }
    report
}

fn check_tree(model: &MorphModel, report: &mut ValidationReport) -> bool {
    let tree = model.tree();
    let before = report.findings.len();
    let mut seen = BTreeSet::new();
    for node in tree.nodes() {
        if !seen.insert(node.id.as_str()) {
            report.error(format!("tree/{}", node.id), "duplicate node id");
        }
    }
    if !tree.contains(tree.root()) {
        report.error("tree", format!("root `{}` is not a node", tree.root()));
        return false;
    }
    let mut parents: BTreeMap<&str, usize> = BTreeMap::new();
    for node in tree.nodes() {
        for child in &node.children {
            if !tree.contains(child) {
                report.error(
                    format!("tree/{}", node.id),
                    format!("child `{child}` is not a node"),
                );
            }
            *parents.entry(child.as_str()).or_default() += 1;
        }
    }
    for node in tree.nodes() {
        let count = parents.get(node.id.as_str()).copied().unwrap_or(0);
        if node.id == tree.root() {
            if count > 0 {
                report.error(format!("tree/{}", node.id), "root has a parent");
            }
        } else if count != 1 {
            report.error(
                format!("tree/{}", node.id),
                format!("node has {count} parents, expected exactly one"),
            );
        }
    }
    // reachability from the root, guarding against cycles
    let mut reached = BTreeSet::new();
    let mut stack = vec![tree.root()];
    while let Some(cur) = stack.pop() {
        if !reached.insert(cur) {
            continue;
        }
        stack.extend(tree.children(cur).iter().map(String::as_str));
    }
    for node in tree.nodes() {
        if !reached.contains(node.id.as_str()) {
            report.error(format!("tree/{}", node.id), "node unreachable from root");
        }
    }
    report.findings.len() == before
}

fn check_alternatives(model: &MorphModel, report: &mut ValidationReport) {
    let tree = model.tree();
    let levels = model.scale().levels;
    let mut ids = BTreeSet::new();
    for component in model.component_ids() {
        let is_leaf = tree.is_leaf(&component);
        let alts = model.alternatives(&component);
        if !is_leaf {
            report.error(
                format!("components/{component}"),
                "component is not a leaf of the tree",
            );
        } else if alts.is_empty() {
            report.error(
                format!("components/{component}"),
                "leaf has no design alternatives",
            );
        }
        for da in alts {
            let loc = format!("components/{component}/{}", da.id);
            if !ids.insert(da.id.as_str()) {
                report.error(&loc, format!("duplicate alternative id `{}`", da.id));
            }
            if da.id.is_empty() || da.id.contains(RESERVED_ID_CHARS) {
                report.error(&loc, "alternative id is empty or contains one of `*()`");
            }
            if da.component != component {
                report.error(
                    &loc,
                    format!("alternative claims component `{}`", da.component),
                );
            }
            if da.priority < 1 || da.priority > levels {
                report.error(
                    &loc,
                    format!("priority {} out of scale 1..{levels}", da.priority),
                );
            }
            if !(da.cost.is_finite() && da.cost >= 0.0) {
                report.error(&loc, format!("cost {} must be nonnegative", da.cost));
            }
            if !(da.profit.is_finite() && da.profit >= 0.0) {
                report.error(&loc, format!("profit {} must be nonnegative", da.profit));
            }
            if let Some(ime) = &da.ime {
                if ime.levels() != levels as usize {
                    report.error(
                        &loc,
                        format!(
                            "estimate has {} levels, scale has {levels}",
                            ime.levels()
                        ),
                    );
                }
            }
        }
    }
}

/// Leaf-level DA ids named inside a (possibly nested) composite id.
fn composite_parts(id: &str) -> impl Iterator<Item = &str> {
    id.split(|c| RESERVED_ID_CHARS.contains(&c))
        .filter(|p| !p.is_empty())
}

fn check_compatibility(model: &MorphModel, report: &mut ValidationReport) {
    let nu = model.scale().compat_max;
    if model.default_compatibility() > nu {
        report.error(
            "default_compatibility",
            format!(
                "compatibility out of scale: {} exceeds {nu}",
                model.default_compatibility()
            ),
        );
    }
    let tree = model.tree();
    for (a, b, w) in model.compatibility_entries() {
        let loc = format!("compatibility({a},{b})");
        if w > nu {
            report.error(&loc, format!("compatibility out of scale: {w} exceeds {nu}"));
        }
        if a == b {
            report.error(&loc, "alternative paired with itself");
            continue;
        }
        let mut resolved = Vec::new();
        for id in [a, b] {
            if id.contains('*') {
                if let Some(bad) = composite_parts(id).find(|p| model.alternative(p).is_none()) {
                    report.error(
                        &loc,
                        format!("composite `{id}` names unknown alternative `{bad}`"),
                    );
                }
            } else {
                match model.alternative(id) {
                    Some(da) => resolved.push(da.component.as_str()),
                    None => report.error(&loc, format!("unknown alternative `{id}`")),
                }
            }
        }
        if let [ca, cb] = resolved[..] {
            if ca == cb {
                report.error(&loc, "intra-component compatibility");
            } else if tree.parent(ca).is_none() || tree.parent(ca) != tree.parent(cb) {
                report.warning(&loc, "components do not share a synthesis scope");
            }
        }
    }
}

fn warn_default_pairs(model: &MorphModel, report: &mut ValidationReport) {
    let tree = model.tree();
    for node in tree.nodes() {
        let leaves: Vec<&String> = node.children.iter().filter(|c| tree.is_leaf(c)).collect();
        for (i, ca) in leaves.iter().enumerate() {
            for cb in &leaves[i + 1..] {
                for da in model.alternatives(ca) {
                    for db in model.alternatives(cb) {
                        if model.compat(&da.id, &db.id).is_none() {
                            report.warning(
                                format!("compatibility({},{})", da.id, db.id),
                                format!(
                                    "unspecified, defaults to {}",
                                    model.default_compatibility()
                                ),
                            );
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m0;
    use crate::model::{DesignAlternative, OrdinalScale, Tree, TreeNode};

    #[test]
    fn reference_instance_is_clean() {
        let r = validate_model(&m0());
        assert_eq!(r.findings, vec![]);
    }

    #[test]
    fn intra_component_entry_is_an_error() {
        let mut m = m0();
        m.set_compat("A1", "A2", 2);
        let r = validate_model(&m);
        let errors: Vec<_> = r.errors().collect();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].message.contains("intra-component compatibility"));
    }

    #[test]
    fn out_of_scale_entry_is_an_error() {
        let mut m = m0();
        m.set_compat("A1", "B1", 5);
        let r = validate_model(&m);
        let errors: Vec<_> = r.errors().collect();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].message.contains("compatibility out of scale"));
        assert_eq!(errors[0].location, "compatibility(A1,B1)");
    }

    #[test]
    fn defaulted_pairs_are_warned() {
        let mut m = m0();
        m.remove_compat("A1", "B1");
        m.remove_compat("B2", "C2");
        let r = validate_model(&m);
        assert!(!r.has_errors());
        let locs: Vec<_> = r.warnings().map(|w| w.location.as_str()).collect();
        assert_eq!(locs, ["compatibility(A1,B1)", "compatibility(B2,C2)"]);
    }

    #[test]
    fn broken_trees() {
        let scale = OrdinalScale::new(2, 2).unwrap();
        let cyclic = Tree::new(
            "R",
            vec![
                TreeNode::internal("R", &["A"]),
                TreeNode::leaf("A"),
                TreeNode::internal("P", &["Q"]),
                TreeNode::internal("Q", &["P"]),
            ],
        );
        let m = MorphModel::builder(scale, cyclic)
            .alternative("A", "A1", 1)
            .build_unchecked();
        let r = validate_model(&m);
        assert!(r.errors().any(|f| f.message.contains("unreachable")));

        let shared = Tree::new(
            "R",
            vec![
                TreeNode::internal("R", &["A", "P"]),
                TreeNode::internal("P", &["A"]),
                TreeNode::leaf("A"),
            ],
        );
        let m = MorphModel::builder(scale, shared)
            .alternative("A", "A1", 1)
            .build_unchecked();
        assert!(validate_model(&m)
            .errors()
            .any(|f| f.message.contains("2 parents")));
    }

    #[test]
    fn alternative_errors() {
        let scale = OrdinalScale::new(2, 2).unwrap();
        let m = MorphModel::builder(scale, Tree::flat("R", &["A", "B"]))
            .alternative("A", "A1", 1)
            .alternative("A", "A1", 2)
            .push_alternative(DesignAlternative::new("A*2", "A", 3).with_cost(-1.0))
            .component("B")
            .component("Z")
            .default_compatibility(1)
            .build_unchecked();
        let r = validate_model(&m);
        let msgs: Vec<_> = r.errors().map(|f| f.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("duplicate alternative id `A1`")));
        assert!(msgs.iter().any(|m| m.contains("contains one of")));
        assert!(msgs.iter().any(|m| m.contains("priority 3 out of scale")));
        assert!(msgs.iter().any(|m| m.contains("cost -1")));
        assert!(msgs.iter().any(|m| m.contains("no design alternatives")));
        assert!(msgs.iter().any(|m| m.contains("not a leaf")));
    }

    #[test]
    fn composite_entries_must_name_known_alternatives() {
        let mut m = m0();
        m.set_compat("A1*B1", "C1", 2);
        assert!(!validate_model(&m).has_errors());
        m.set_compat("A1*B9", "C1", 2);
        assert!(validate_model(&m)
            .errors()
            .any(|f| f.message.contains("`B9`")));
    }
}
