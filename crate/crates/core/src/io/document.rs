//! JSON model documents: parsing into models, canonical serialization.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Edge, WeightedGraph};
use crate::lifecycle::StagePlan;
use crate::model::{
    pair_key, validate_model, DesignAlternative, IntervalMultisetEstimate, MorphModel,
    OrdinalScale, Tree, TreeNode, ValidationReport,
};
use crate::redesign::{ActionKind, ImprovementAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDoc {
    pub levels: u32,
    pub compat_max: u32,
}

/// Internal nodes carry `id` and `children`; leaves carry `component`
/// (an `id`, if given, must repeat it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternativeDoc {
    pub id: String,
    pub priority: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ime: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub id: String,
    pub alternatives: Vec<AlternativeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibilityDoc {
    pub a: String,
    pub b: String,
    pub w: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKindDoc {
    Priority,
    Compatibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub id: String,
    pub kind: ActionKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub da: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[String; 2]>,
    pub cost: u64,
}

/// A stage or generation: alternatives and compatibilities over the scale and
/// tree of the enclosing document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayDoc {
    pub components: Vec<ComponentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compatibility: Vec<CompatibilityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_compatibility: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub scale: ScaleDoc,
    pub tree: NodeDoc,
    pub components: Vec<ComponentDoc>,
    #[serde(default)]
    pub compatibility: Vec<CompatibilityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_compatibility: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<OverlayDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generations: Vec<OverlayDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

/// Weighted graph input for hierarchy design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, f64>>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            // strip serde_json's trailing " at line L column C"
            let msg = inner.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            schema(path, msg)
        } else {
            Error::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        }
    })?;
    Ok(value)
}

pub fn parse_document(text: &str) -> Result<ModelDocument> {
    from_json(text)
}

pub fn parse_graph(text: &str) -> Result<GraphDocument> {
    from_json(text)
}

impl GraphDocument {
    pub fn to_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(
            self.nodes.clone(),
            self.edges
                .iter()
                .map(|e| Edge::new(e.a.clone(), e.b.clone(), e.weight))
                .collect(),
        )
    }
}

fn tree_from_doc(root: &NodeDoc) -> Result<Tree> {
    fn walk(node: &NodeDoc, path: String, out: &mut Vec<TreeNode>) -> Result<String> {
        match (&node.id, &node.children, &node.component) {
            (Some(id), Some(children), None) => {
                let mut ids = Vec::with_capacity(children.len());
                for (i, c) in children.iter().enumerate() {
                    ids.push(walk(c, format!("{path}.children[{i}]"), out)?);
                }
                out.push(TreeNode {
                    id: id.clone(),
                    children: ids,
                });
                Ok(id.clone())
            }
            (id, None, Some(component)) => {
                if id.as_ref().is_some_and(|id| id != component) {
                    return Err(schema(path, "leaf `id` must equal its `component`"));
                }
                out.push(TreeNode::leaf(component.clone()));
                Ok(component.clone())
            }
            _ => Err(schema(
                path,
                "node needs either `id` with `children` or `component`",
            )),
        }
    }
    let mut nodes = Vec::new();
    let root_id = walk(root, "tree".into(), &mut nodes)?;
    Ok(Tree::new(root_id, nodes))
}

fn tree_to_doc(tree: &Tree, id: &str) -> NodeDoc {
    if tree.is_leaf(id) {
        NodeDoc {
            id: None,
            children: None,
            component: Some(id.to_string()),
        }
    } else {
        NodeDoc {
            id: Some(id.to_string()),
            children: Some(tree.children(id).iter().map(|c| tree_to_doc(tree, c)).collect()),
            component: None,
        }
    }
}

/// Model location string -> document path, for validation messages.
type Locations = HashMap<String, String>;

fn build_model(
    scale: &ScaleDoc,
    tree: &Tree,
    components: &[ComponentDoc],
    compatibility: &[CompatibilityDoc],
    default_compatibility: Option<u32>,
    prefix: &str,
) -> Result<(MorphModel, Locations)> {
    let scale = OrdinalScale::new(scale.levels, scale.compat_max)
        .map_err(|e| schema("scale", e.to_string()))?;
    let mut builder = MorphModel::builder(scale, tree.clone());
    if let Some(w) = default_compatibility {
        builder = builder.default_compatibility(w);
    }
    let mut locations = Locations::new();
    let mut seen_components = BTreeSet::new();
    let mut seen_das = BTreeSet::new();
    for (i, c) in components.iter().enumerate() {
        let cpath = format!("{prefix}components[{i}]");
        if !seen_components.insert(c.id.as_str()) {
            return Err(schema(cpath, format!("duplicate component id `{}`", c.id)));
        }
        locations.insert(format!("components/{}", c.id), cpath.clone());
        builder = builder.component(&c.id);
        for (j, a) in c.alternatives.iter().enumerate() {
            let path = format!("{cpath}.alternatives[{j}]");
            if !seen_das.insert(a.id.as_str()) {
                return Err(schema(path, format!("duplicate alternative id `{}`", a.id)));
            }
            let mut da = DesignAlternative::new(a.id.clone(), c.id.clone(), a.priority)
                .with_cost(a.cost.unwrap_or(0.0))
                .with_profit(a.profit.unwrap_or(0.0));
            if let Some(counts) = &a.ime {
                let ime = IntervalMultisetEstimate::new(counts.clone())
                    .map_err(|e| schema(format!("{path}.ime"), e.to_string()))?;
                da = da.with_ime(ime);
            }
            locations.insert(format!("components/{}/{}", c.id, a.id), path);
            builder = builder.push_alternative(da);
        }
    }
    let mut pairs: HashMap<(String, String), usize> = HashMap::new();
    for (k, e) in compatibility.iter().enumerate() {
        let path = format!("{prefix}compatibility[{k}]");
        let key = pair_key(&e.a, &e.b);
        if let Some(prev) = pairs.insert(key.clone(), k) {
            return Err(schema(
                path,
                format!(
                    "pair ({},{}) already given at {prefix}compatibility[{prev}]",
                    key.0, key.1
                ),
            ));
        }
        locations.insert(format!("compatibility({},{})", key.0, key.1), path);
        builder = builder.compat(&e.a, &e.b, e.w);
    }
    Ok((builder.build_unchecked(), locations))
}

fn locate(mut report: ValidationReport, locations: &Locations) -> ValidationReport {
    for f in &mut report.findings {
        if let Some(path) = locations.get(&f.location) {
            f.location = format!("{path} {}", f.location);
        }
    }
    report
}

impl ModelDocument {
    fn tree(&self) -> Result<Tree> {
        tree_from_doc(&self.tree)
    }

    /// Model plus its validation report; findings carry document paths.
    pub fn to_model_unchecked(&self) -> Result<(MorphModel, ValidationReport)> {
        let (model, locations) = build_model(
            &self.scale,
            &self.tree()?,
            &self.components,
            &self.compatibility,
            self.default_compatibility,
            "",
        )?;
        let report = locate(validate_model(&model), &locations);
        Ok((model, report))
    }

    pub fn to_model(&self) -> Result<MorphModel> {
        let (model, report) = self.to_model_unchecked()?;
        if report.has_errors() {
            return Err(Error::Invalid(report));
        }
        Ok(model)
    }

    fn overlays(&self, key: &str, overlays: &[OverlayDoc]) -> Result<Vec<MorphModel>> {
        let tree = self.tree()?;
        overlays
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let (model, locations) = build_model(
                    &self.scale,
                    &tree,
                    &o.components,
                    &o.compatibility,
                    o.default_compatibility,
                    &format!("{key}[{i}]."),
                )?;
                let report = locate(validate_model(&model), &locations);
                if report.has_errors() {
                    return Err(Error::Invalid(report));
                }
                Ok(model)
            })
            .collect()
    }

    pub fn stage_models(&self) -> Result<Vec<MorphModel>> {
        self.overlays("stages", &self.stages)
    }

    pub fn generation_models(&self) -> Result<Vec<MorphModel>> {
        self.overlays("generations", &self.generations)
    }

    pub fn stage_plan(&self, change_cost: u64) -> Result<StagePlan> {
        StagePlan::new(self.stage_models()?, change_cost)
    }

    pub fn improvement_actions(&self) -> Result<Vec<ImprovementAction>> {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let path = format!("actions[{i}]");
                let kind = match (a.kind, &a.da, &a.pair) {
                    (ActionKindDoc::Priority, Some(da), None) => ActionKind::UpgradePriority(da.clone()),
                    (ActionKindDoc::Compatibility, None, Some([x, y])) => {
                        ActionKind::UpgradeCompatibility(x.clone(), y.clone())
                    }
                    (ActionKindDoc::Priority, _, _) => {
                        return Err(schema(path, "priority action needs `da` and no `pair`"))
                    }
                    (ActionKindDoc::Compatibility, _, _) => {
                        return Err(schema(path, "compatibility action needs `pair` and no `da`"))
                    }
                };
                Ok(ImprovementAction::new(a.id.clone(), kind, a.cost))
            })
            .collect()
    }
}

fn components_doc(model: &MorphModel) -> Vec<ComponentDoc> {
    model
        .component_ids()
        .into_iter()
        .map(|c| ComponentDoc {
            alternatives: model
                .alternatives(&c)
                .iter()
                .map(|da| AlternativeDoc {
                    id: da.id.clone(),
                    priority: da.priority,
                    cost: (da.cost != 0.0).then_some(da.cost),
                    profit: (da.profit != 0.0).then_some(da.profit),
                    ime: da.ime.as_ref().map(|e| e.counts().to_vec()),
                })
                .collect(),
            id: c,
        })
        .collect()
}

fn compatibility_doc(model: &MorphModel) -> Vec<CompatibilityDoc> {
    model
        .compatibility_entries()
        .map(|(a, b, w)| CompatibilityDoc {
            a: a.to_string(),
            b: b.to_string(),
            w,
        })
        .collect()
}

fn default_doc(model: &MorphModel) -> Option<u32> {
    Some(model.default_compatibility()).filter(|&w| w != 0)
}

/// Canonical document of a model: components and alternatives sorted by id,
/// compatibility pairs ordered with `a < b`, defaults omitted.
pub fn model_to_document(model: &MorphModel) -> ModelDocument {
    let scale = model.scale();
    ModelDocument {
        scale: ScaleDoc {
            levels: scale.levels,
            compat_max: scale.compat_max,
        },
        tree: tree_to_doc(model.tree(), model.tree().root()),
        components: components_doc(model),
        compatibility: compatibility_doc(model),
        default_compatibility: default_doc(model),
        actions: Vec::new(),
        stages: Vec::new(),
        generations: Vec::new(),
    }
}

pub fn overlay_document(model: &MorphModel) -> OverlayDoc {
    OverlayDoc {
        components: components_doc(model),
        compatibility: compatibility_doc(model),
        default_compatibility: default_doc(model),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialize");
    s.push('\n');
    s
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<MorphModel> {
    parse_document(text)?.to_model()
}

pub fn serialize_model(model: &MorphModel) -> String {
    to_json(&model_to_document(model))
}

/// Canonical form of a whole document, including actions, stages and
/// generations. Overlays are canonicalized through their models.
pub fn canonicalize(doc: &ModelDocument) -> Result<ModelDocument> {
    let mut out = model_to_document(&doc.to_model()?);
    out.actions = doc.actions.clone();
    out.stages = doc.stage_models()?.iter().map(overlay_document).collect();
    out.generations = doc.generation_models()?.iter().map(overlay_document).collect();
    Ok(out)
}
