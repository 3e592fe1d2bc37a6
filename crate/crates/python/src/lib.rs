//! Python bindings. Results are returned as plain lists, tuples and dicts.

use std::collections::BTreeMap;

use morphkit_core::analysis::{
    composite_criteria, detect_compatibility_bottlenecks, detect_element_bottlenecks,
    rank_pareto_layers, BottleneckReport, CriteriaMatrix, Criterion, Direction,
};
use morphkit_core::hierarchy::{
    agglomerative_clustering, design_multilayer, minimum_spanning_tree, Edge, WeightedGraph,
};
use morphkit_core::io::{model_to_document, parse_document, to_json, ModelDocument};
use morphkit_core::lifecycle::{design_trajectory, forecast_model, TrajectoryOutcome};
use morphkit_core::model::{quality_vector, validate_model, Severity};
use morphkit_core::redesign::{aggregate_versions, improve_under_budget, AggregationOutcome, VersionSet};
use morphkit_core::synthesis::{
    solve_mckp, synthesize_scope, synthesize_scope_ime, synthesize_subtree, MckpGroup,
    MckpInstance, MckpItem, MckpOutcome, ParetoEntry,
};
use morphkit_core::{CompositeSystem, MorphModel};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(morphkit, MorphkitError, PyException);

type Score = Option<(u32, Vec<u32>)>;
type BottleneckRows = Vec<(usize, String, Score)>;
type TrajectoryTuple = (Vec<Vec<String>>, Vec<usize>, usize, u64);
type EdgeTuples = Vec<(String, String, f64)>;

fn err(e: morphkit_core::Error) -> PyErr {
    MorphkitError::new_err(e.to_string())
}

fn entry_dict<'py>(py: Python<'py>, e: &ParetoEntry) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("selection", e.system.da_ids())?;
    d.set_item("w", e.quality.w)?;
    d.set_item("counts", e.quality.counts.clone())?;
    Ok(d)
}

fn bottleneck_list(r: &BottleneckReport) -> BottleneckRows {
    r.entries
        .iter()
        .map(|e| {
            (
                e.layer,
                e.target.to_string(),
                e.score.as_ref().map(|q| (q.w, q.counts.clone())),
            )
        })
        .collect()
}

/// A validated morphological model, optionally with the actions, stages and
/// generations of the document it was read from.
#[pyclass(frozen)]
struct Model {
    model: MorphModel,
    doc: ModelDocument,
}

impl Model {
    fn scope(&self, scope: Option<String>) -> String {
        scope.unwrap_or_else(|| self.model.tree().root().to_string())
    }

    fn system(&self, scope: &str, ids: &[String]) -> PyResult<CompositeSystem> {
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        CompositeSystem::from_ids(&self.model, scope, &ids).map_err(err)
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = parse_document(text).map_err(err)?;
        let model = doc.to_model().map_err(err)?;
        Ok(Self { model, doc })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MorphkitError::new_err(format!("cannot read {path}: {e}")))?;
        Self::from_json(&text)
    }

    /// Canonical document text of the model (without actions or stages).
    fn to_json(&self) -> String {
        to_json(&model_to_document(&self.model))
    }

    #[getter]
    fn root(&self) -> String {
        self.model.tree().root().to_string()
    }

    fn components(&self) -> Vec<String> {
        self.model.component_ids()
    }

    fn alternatives(&self, component: &str) -> Vec<(String, u32)> {
        self.model
            .alternatives(component)
            .iter()
            .map(|d| (d.id.clone(), d.priority))
            .collect()
    }

    /// Findings as (severity, location, message); errors never occur here
    /// because construction already rejected them.
    fn validate(&self) -> Vec<(&'static str, String, String)> {
        validate_model(&self.model)
            .findings
            .into_iter()
            .map(|f| {
                let s = match f.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                (s, f.location, f.message)
            })
            .collect()
    }

    #[pyo3(signature = (ids, scope=None))]
    fn quality(&self, ids: Vec<String>, scope: Option<String>) -> PyResult<(u32, Vec<u32>)> {
        let s = self.system(&self.scope(scope), &ids)?;
        let q = quality_vector(&self.model, &s).map_err(err)?;
        Ok((q.w, q.counts))
    }

    /// Pareto set of a scope; bottom-up when the scope has internal children.
    #[pyo3(signature = (scope=None, min_w=None, top=None))]
    fn synthesize<'py>(
        &self,
        py: Python<'py>,
        scope: Option<String>,
        min_w: Option<u32>,
        top: Option<usize>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let scope = self.scope(scope);
        let tree = self.model.tree();
        let hierarchical =
            tree.contains(&scope) && tree.children(&scope).iter().any(|c| !tree.is_leaf(c));
        let mut set = if hierarchical {
            synthesize_subtree(&self.model, &scope, top, min_w)
        } else {
            synthesize_scope(&self.model, &scope, min_w)
        }
        .map_err(err)?;
        if let Some(k) = top {
            set.entries.truncate(k);
        }
        set.entries.iter().map(|e| entry_dict(py, e)).collect()
    }

    #[pyo3(signature = (scope=None, min_w=None))]
    fn synthesize_ime<'py>(
        &self,
        py: Python<'py>,
        scope: Option<String>,
        min_w: Option<u32>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let set = synthesize_scope_ime(&self.model, &self.scope(scope), min_w).map_err(err)?;
        set.entries
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("selection", e.system.da_ids())?;
                d.set_item("w", e.quality.w)?;
                d.set_item("ime", e.quality.estimate.counts().to_vec())?;
                d.set_item("gap_filled", e.quality.estimate.gap_filled())?;
                Ok(d)
            })
            .collect()
    }

    /// Knapsack over DA costs and profits: (selection, profit, cost), or
    /// None when even the cheapest choice exceeds the budget.
    #[pyo3(signature = (budget, scope=None))]
    fn mckp(&self, budget: u64, scope: Option<String>) -> PyResult<Option<(Vec<String>, f64, u64)>> {
        let inst = MckpInstance::from_model(&self.model, &self.scope(scope), budget).map_err(err)?;
        Ok(match solve_mckp(&inst).map_err(err)? {
            MckpOutcome::Optimal(s) => Some((
                s.selection.into_iter().map(|(_, i)| i).collect(),
                s.profit,
                s.cost,
            )),
            MckpOutcome::Infeasible { .. } => None,
        })
    }

    /// Feasible composites grouped into dominance layers.
    #[pyo3(signature = (scope=None, min_w=None))]
    fn rank(&self, scope: Option<String>, min_w: Option<u32>) -> PyResult<Vec<Vec<String>>> {
        let m = composite_criteria(&self.model, &self.scope(scope), min_w).map_err(err)?;
        Ok(rank_pareto_layers(&m))
    }

    /// (layer, target, score) with score = (w, counts) or None.
    #[pyo3(signature = (scope=None, system=None))]
    fn bottlenecks(
        &self,
        scope: Option<String>,
        system: Option<Vec<String>>,
    ) -> PyResult<BottleneckRows> {
        let scope = self.scope(scope);
        let report = match system {
            Some(ids) => detect_compatibility_bottlenecks(&self.model, &self.system(&scope, &ids)?),
            None => detect_element_bottlenecks(&self.model, &scope),
        }
        .map_err(err)?;
        Ok(bottleneck_list(&report))
    }

    /// Uses the document's actions: (chosen ids, cost, best entry or None).
    #[pyo3(signature = (budget, scope=None))]
    fn improve<'py>(
        &self,
        py: Python<'py>,
        budget: u64,
        scope: Option<String>,
    ) -> PyResult<(Vec<String>, u64, Option<Bound<'py, PyDict>>)> {
        let actions = self.doc.improvement_actions().map_err(err)?;
        let out = improve_under_budget(&self.model, &self.scope(scope), &actions, budget).map_err(err)?;
        let best = out.best.as_ref().map(|e| entry_dict(py, e)).transpose()?;
        Ok((out.chosen, out.cost, best))
    }

    /// Aggregated Pareto entries; raises when agreed DAs are incompatible.
    #[pyo3(signature = (versions, scope=None))]
    fn aggregate<'py>(
        &self,
        py: Python<'py>,
        versions: Vec<Vec<String>>,
        scope: Option<String>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let scope = self.scope(scope);
        let systems = versions
            .iter()
            .map(|v| self.system(&scope, v))
            .collect::<PyResult<Vec<_>>>()?;
        let vs = VersionSet::new(&self.model, systems).map_err(err)?;
        match aggregate_versions(&self.model, &vs).map_err(err)? {
            AggregationOutcome::Aggregated(set) => set.entries.iter().map(|e| entry_dict(py, e)).collect(),
            AggregationOutcome::Blocked { pair } => Err(MorphkitError::new_err(format!(
                "agreed alternatives {} and {} are incompatible",
                pair.0, pair.1
            ))),
        }
    }

    /// Trajectory over the document's stages: (selections, layers, total
    /// layer, total change cost).
    #[pyo3(signature = (change_cost=1, scope=None))]
    fn trajectory(
        &self,
        change_cost: u64,
        scope: Option<String>,
    ) -> PyResult<TrajectoryTuple> {
        let plan = self.doc.stage_plan(change_cost).map_err(err)?;
        match design_trajectory(&plan, &self.scope(scope)).map_err(err)? {
            TrajectoryOutcome::Planned(t) => Ok((
                t.solutions
                    .iter()
                    .map(|s| s.da_ids().into_iter().map(String::from).collect())
                    .collect(),
                t.layers,
                t.total_layer,
                t.total_change_cost,
            )),
            TrajectoryOutcome::BrokenHorizon { stage } => Err(MorphkitError::new_err(format!(
                "broken horizon at stage {stage}"
            ))),
        }
    }

    /// Forecast from the document's generations.
    fn forecast(&self) -> PyResult<Model> {
        let history = self.doc.generation_models().map_err(err)?;
        let model = forecast_model(&history).map_err(err)?;
        let doc = model_to_document(&model);
        Ok(Model { model, doc })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(root={:?}, components={})",
            self.model.tree().root(),
            self.model.component_ids().len()
        )
    }
}

fn graph(nodes: Vec<String>, edges: Vec<(String, String, f64)>) -> PyResult<WeightedGraph> {
    WeightedGraph::new(nodes, edges.into_iter().map(|(a, b, w)| Edge::new(a, b, w)).collect())
        .map_err(err)
}

/// Groups are lists of (item id, integer cost, profit); returns
/// (item ids, profit, cost) or None when infeasible.
#[pyfunction(name = "solve_mckp")]
fn py_solve_mckp(
    groups: Vec<Vec<(String, u64, f64)>>,
    budget: u64,
) -> PyResult<Option<(Vec<String>, f64, u64)>> {
    let inst = MckpInstance {
        groups: groups
            .into_iter()
            .enumerate()
            .map(|(g, items)| MckpGroup {
                id: format!("G{g}"),
                items: items
                    .into_iter()
                    .map(|(id, cost, profit)| MckpItem { id, cost, profit })
                    .collect(),
            })
            .collect(),
        budget,
    };
    Ok(match solve_mckp(&inst).map_err(err)? {
        MckpOutcome::Optimal(s) => Some((
            s.selection.into_iter().map(|(_, i)| i).collect(),
            s.profit,
            s.cost,
        )),
        MckpOutcome::Infeasible { .. } => None,
    })
}

/// Dominance layers of items; criteria are (name, "max" | "min").
#[pyfunction(name = "rank_pareto_layers")]
fn py_rank_pareto_layers(
    items: Vec<String>,
    criteria: Vec<(String, String)>,
    values: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<String>>> {
    let criteria = criteria
        .into_iter()
        .map(|(name, dir)| match dir.as_str() {
            "max" => Ok(Criterion::new(name, Direction::Maximize)),
            "min" => Ok(Criterion::new(name, Direction::Minimize)),
            other => Err(MorphkitError::new_err(format!("direction must be max or min, not {other:?}"))),
        })
        .collect::<PyResult<Vec<_>>>()?;
    let m = CriteriaMatrix::new(items, criteria, values).map_err(err)?;
    Ok(rank_pareto_layers(&m))
}

/// (edges as (a, b, weight), total weight).
#[pyfunction(name = "minimum_spanning_tree")]
fn py_minimum_spanning_tree(
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
) -> PyResult<(EdgeTuples, f64)> {
    let f = minimum_spanning_tree(&graph(nodes, edges)?);
    Ok((
        f.edges.into_iter().map(|e| (e.a, e.b, e.weight)).collect(),
        f.total_weight,
    ))
}

#[pyfunction(name = "cluster")]
fn py_cluster(
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
    k: usize,
) -> PyResult<Vec<Vec<String>>> {
    Ok(agglomerative_clustering(&graph(nodes, edges)?, k).map_err(err)?.clusters)
}

/// Layers bottom-up, with intra-layer edges and upward links (weight None
/// marks a fallback link).
#[pyfunction(name = "design_multilayer")]
fn py_design_multilayer<'py>(
    py: Python<'py>,
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
    scores: BTreeMap<String, f64>,
    layers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let t = design_multilayer(&graph(nodes, edges)?, &scores, layers).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("layers", t.layers)?;
    let intra: Vec<Vec<(String, String, f64)>> = t
        .intra_edges
        .into_iter()
        .map(|es| es.into_iter().map(|e| (e.a, e.b, e.weight)).collect())
        .collect();
    d.set_item("intra_edges", intra)?;
    let inter: Vec<Vec<(String, String, Option<f64>)>> = t
        .inter_edges
        .into_iter()
        .map(|es| es.into_iter().map(|e| (e.lower, e.upper, e.weight)).collect())
        .collect();
    d.set_item("inter_edges", inter)?;
    Ok(d)
}

/// Runs a CLI command line (without the program name): (exit code, output).
#[pyfunction]
fn run(args: Vec<String>) -> (i32, String) {
    let inv = morphkit_core::cli::run_command(std::iter::once("morphkit".to_string()).chain(args));
    (inv.code, inv.output)
}

#[pymodule]
fn morphkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MorphkitError", m.py().get_type::<MorphkitError>())?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(py_solve_mckp, m)?)?;
    m.add_function(wrap_pyfunction!(py_rank_pareto_layers, m)?)?;
    m.add_function(wrap_pyfunction!(py_minimum_spanning_tree, m)?)?;
    m.add_function(wrap_pyfunction!(py_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(py_design_multilayer, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
