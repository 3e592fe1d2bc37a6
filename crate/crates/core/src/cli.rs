//! Batch command surface. Each subcommand reads input files, calls one
//! library operation and renders a [`Report`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    composite_criteria, detect_compatibility_bottlenecks, detect_element_bottlenecks,
    rank_pareto_layers, BottleneckReport,
};
use crate::error::{Error, Result};
use crate::hierarchy::{agglomerative_clustering, design_multilayer, minimum_spanning_tree};
use crate::io::{
    digest_inputs, parse_document, parse_graph, serialize_model, Cell, ModelDocument, Record,
    Report, Status,
};
use crate::lifecycle::{design_trajectory, forecast_model, generation_delta, TrajectoryOutcome};
use crate::model::{CompositeSystem, MorphModel, Severity, ValidationReport};
use crate::redesign::{aggregate_versions, improve_under_budget, AggregationOutcome, VersionSet};
use crate::synthesis::{
    synthesize_scope, synthesize_scope_ime, synthesize_subtree, solve_mckp, MckpInstance,
    MckpOutcome, ParetoEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "morphkit", version, about = "Combinatorial design of hierarchical modular systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Write the report to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Worker threads for parallel search (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Synthesis scope; defaults to the tree root.
    #[arg(long, value_name = "ID")]
    scope: Option<String>,

    #[arg(long, value_name = "N")]
    min_w: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model document.
    Validate {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Pareto-optimal composites of a scope (bottom-up over internal children).
    Synthesize {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_name = "K")]
        top: Option<usize>,
    },
    /// Synthesis under interval multiset estimates.
    SynthesizeIme {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_name = "K")]
        top: Option<usize>,
    },
    /// Multiple-choice knapsack over DA costs and profits.
    Mckp {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "ID")]
        scope: Option<String>,
        #[arg(long, value_name = "N")]
        budget: u64,
    },
    /// Dominance layers of feasible composites.
    Rank {
        #[command(flatten)]
        m: ModelArgs,
    },
    /// Element bottlenecks, or pair bottlenecks of one system with --system.
    Bottlenecks {
        #[command(flatten)]
        m: ModelArgs,
        /// Comma-separated DA ids of the system to inspect.
        #[arg(long, value_delimiter = ',', value_name = "IDS")]
        system: Option<Vec<String>>,
    },
    /// Best affordable set of improvement actions.
    Improve {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_name = "N")]
        budget: u64,
    },
    /// Aggregate system versions into one system.
    Aggregate {
        #[command(flatten)]
        m: ModelArgs,
        /// A version as comma-separated DA ids; repeat for each version.
        #[arg(long = "version", value_name = "IDS", required = true)]
        versions: Vec<String>,
    },
    /// Multistage trajectory over the document's stages.
    Trajectory {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_name = "N", default_value_t = 1)]
        change_cost: u64,
    },
    /// One-step forecast from the document's generations.
    Forecast {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Also write the forecast model document to FILE.
        #[arg(long, value_name = "FILE")]
        model_out: Option<PathBuf>,
    },
    /// Spanning tree, clustering or layered topology of a weighted graph.
    DesignTree {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        #[arg(long, value_name = "K", conflicts_with = "layers")]
        clusters: Option<usize>,
        #[arg(long, value_name = "N")]
        layers: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Synthesize { .. } => "synthesize",
            Command::SynthesizeIme { .. } => "synthesize-ime",
            Command::Mckp { .. } => "mckp",
            Command::Rank { .. } => "rank",
            Command::Bottlenecks { .. } => "bottlenecks",
            Command::Improve { .. } => "improve",
            Command::Aggregate { .. } => "aggregate",
            Command::Trajectory { .. } => "trajectory",
            Command::Forecast { .. } => "forecast",
            Command::DesignTree { .. } => "design-tree",
        }
    }

    fn input(&self) -> &Path {
        match self {
            Command::Validate { model }
            | Command::Mckp { model, .. }
            | Command::Forecast { model, .. } => model,
            Command::Synthesize { m, .. }
            | Command::SynthesizeIme { m, .. }
            | Command::Rank { m }
            | Command::Bottlenecks { m, .. }
            | Command::Improve { m, .. }
            | Command::Aggregate { m, .. }
            | Command::Trajectory { m, .. } => &m.model,
            Command::DesignTree { graph, .. } => graph,
        }
    }
}

/// Result of one invocation: exit status, the report (absent for usage
/// errors and help), and the rendered output.
#[derive(Debug)]
pub struct Invocation {
    pub code: i32,
    pub report: Option<Report>,
    pub output: String,
    /// Where `output` should go; None means standard output.
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_command<I, T>(argv: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Invocation {
                code,
                report: None,
                output: e.render().to_string(),
                out: None,
            };
        }
    };
    let report = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => failed(cli.command.name(), String::new(), Error::Argument(e.to_string())),
        },
        None => execute(&cli.command),
    };
    let output = match cli.format {
        Format::Text => report.text(),
        Format::Machine => report.machine(),
    };
    Invocation {
        code: report.status.exit_code(),
        report: Some(report),
        output,
        out: cli.out,
    }
}

fn failed(command: &str, digest: String, err: Error) -> Report {
    let mut r = Report::new(command, digest);
    r.status = Status::Error;
    if let Error::Invalid(report) = &err {
        r.status = Status::Invalid;
        r.message = Some("model failed validation".into());
        r.entries = finding_rows(report);
    } else {
        r.message = Some(err.to_string());
    }
    r
}

fn execute(cmd: &Command) -> Report {
    let name = cmd.name();
    let bytes = match std::fs::read(cmd.input()) {
        Ok(b) => b,
        Err(e) => {
            return failed(
                name,
                String::new(),
                Error::Argument(format!("cannot read {}: {e}", cmd.input().display())),
            )
        }
    };
    let digest = digest_inputs([bytes.as_slice()]);
    let mut report = Report::new(name, digest.clone());
    let result = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Argument(format!("input is not UTF-8: {e}")))
        .and_then(|text| dispatch(cmd, text, &mut report));
    match result {
        Ok(()) => report,
        Err(e) => failed(name, digest, e),
    }
}

fn finding_rows(report: &ValidationReport) -> Vec<Record> {
    report
        .findings
        .iter()
        .map(|f| {
            Record::new()
                .with(
                    "severity",
                    match f.severity {
                        Severity::Error => "error",
                        Severity::Warning => "warning",
                    },
                )
                .with("location", f.location.as_str())
                .with("message", f.message.as_str())
        })
        .collect()
}

fn selection_cell(s: &CompositeSystem) -> Cell {
    Cell::List(s.da_ids().into_iter().map(str::to_string).collect())
}

fn pareto_rows(entries: &[ParetoEntry]) -> Vec<Record> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Record::new()
                .with("rank", i + 1)
                .with("selection", selection_cell(&e.system))
                .with("quality", e.quality.clone())
        })
        .collect()
}

fn bottleneck_rows(r: &BottleneckReport) -> Vec<Record> {
    r.entries
        .iter()
        .map(|e| {
            Record::new()
                .with("layer", e.layer)
                .with("target", e.target.to_string())
                .with("score", e.score.clone())
        })
        .collect()
}

fn scope_of(model: &MorphModel, m: &ModelArgs) -> String {
    m.scope.clone().unwrap_or_else(|| model.tree().root().to_string())
}

fn load(text: &str) -> Result<(ModelDocument, MorphModel)> {
    let doc = parse_document(text)?;
    let model = doc.to_model()?;
    Ok((doc, model))
}

fn infeasible_if_empty(report: &mut Report) {
    if report.entries.is_empty() {
        report.status = Status::Infeasible;
    }
}

fn dispatch(cmd: &Command, text: &str, report: &mut Report) -> Result<()> {
    match cmd {
        Command::Validate { .. } => {
            let (_, findings) = parse_document(text)?.to_model_unchecked()?;
            report.summary = Record::new()
                .with("errors", findings.errors().count())
                .with("warnings", findings.warnings().count());
            report.entries = finding_rows(&findings);
            if findings.has_errors() {
                report.status = Status::Invalid;
            }
        }
        Command::Synthesize { m, top } => {
            let (_, model) = load(text)?;
            let scope = scope_of(&model, m);
            let hierarchical = model.tree().contains(&scope)
                && model.tree().children(&scope).iter().any(|c| !model.tree().is_leaf(c));
            let mut set = if hierarchical {
                synthesize_subtree(&model, &scope, *top, m.min_w)?
            } else {
                synthesize_scope(&model, &scope, m.min_w)?
            };
            if let Some(k) = top {
                set.entries.truncate(*k);
            }
            report.summary = Record::new()
                .with("scope", scope)
                .with("mode", if hierarchical { "bottom-up" } else { "flat" })
                .with("min_w", m.min_w.unwrap_or(1));
            report.entries = pareto_rows(&set.entries);
            infeasible_if_empty(report);
        }
        Command::SynthesizeIme { m, top } => {
            let (_, model) = load(text)?;
            let scope = scope_of(&model, m);
            let mut set = synthesize_scope_ime(&model, &scope, m.min_w)?;
            if let Some(k) = top {
                set.entries.truncate(*k);
            }
            report.summary = Record::new()
                .with("scope", scope)
                .with("min_w", m.min_w.unwrap_or(1));
            report.entries = set
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    Record::new()
                        .with("rank", i + 1)
                        .with("selection", selection_cell(&e.system))
                        .with("w", e.quality.w)
                        .with("ime", Cell::Counts(e.quality.estimate.counts().to_vec()))
                        .with("gap_filled", e.quality.estimate.gap_filled())
                })
                .collect();
            infeasible_if_empty(report);
        }
        Command::Mckp { scope, budget, .. } => {
            let (_, model) = load(text)?;
            let scope = scope.clone().unwrap_or_else(|| model.tree().root().to_string());
            let inst = MckpInstance::from_model(&model, &scope, *budget)?;
            report.summary = Record::new().with("scope", scope).with("budget", *budget);
            match solve_mckp(&inst)? {
                MckpOutcome::Optimal(sol) => {
                    report.summary = std::mem::take(&mut report.summary)
                        .with("profit", sol.profit)
                        .with("cost", sol.cost);
                    report.entries = sol
                        .selection
                        .into_iter()
                        .map(|(g, i)| Record::new().with("group", g).with("item", i))
                        .collect();
                }
                MckpOutcome::Infeasible { min_cost } => {
                    report.summary = std::mem::take(&mut report.summary).with("min_cost", min_cost);
                    report.status = Status::Infeasible;
                }
            }
        }
        Command::Rank { m } => {
            let (_, model) = load(text)?;
            let scope = scope_of(&model, m);
            let matrix = composite_criteria(&model, &scope, m.min_w)?;
            report.summary = Record::new()
                .with("scope", scope)
                .with("min_w", m.min_w.unwrap_or(1));
            for (layer, items) in rank_pareto_layers(&matrix).iter().enumerate() {
                for item in items {
                    let row = matrix.items().iter().position(|i| i == item).expect("ranked item");
                    let mut rec = Record::new().with("layer", layer + 1).with("item", item.as_str());
                    for (c, v) in matrix.criteria().iter().zip(matrix.row(row)) {
                        rec = rec.with(&c.name, *v);
                    }
                    report.entries.push(rec);
                }
            }
            infeasible_if_empty(report);
        }
        Command::Bottlenecks { m, system } => {
            let (_, model) = load(text)?;
            let scope = scope_of(&model, m);
            report.summary = Record::new().with("scope", scope.as_str());
            let found = match system {
                Some(ids) => {
                    let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                    let s = CompositeSystem::from_ids(&model, &scope, &ids)?;
                    report.summary = std::mem::take(&mut report.summary)
                        .with("kind", "compatibility")
                        .with("system", selection_cell(&s));
                    detect_compatibility_bottlenecks(&model, &s)?
                }
                None => {
                    report.summary = std::mem::take(&mut report.summary).with("kind", "element");
                    detect_element_bottlenecks(&model, &scope)?
                }
            };
            report.entries = bottleneck_rows(&found);
        }
        Command::Improve { m, budget } => {
            let (doc, model) = load(text)?;
            let scope = scope_of(&model, m);
            let actions = doc.improvement_actions()?;
            let out = improve_under_budget(&model, &scope, &actions, *budget)?;
            report.summary = Record::new()
                .with("scope", scope)
                .with("budget", *budget)
                .with("chosen", Cell::List(out.chosen.clone()))
                .with("cost", out.cost);
            report.entries = pareto_rows(out.best.as_slice());
            infeasible_if_empty(report);
        }
        Command::Aggregate { m, versions } => {
            let (_, model) = load(text)?;
            let scope = scope_of(&model, m);
            let versions = versions
                .iter()
                .map(|v| {
                    let ids: Vec<&str> = v.split(',').map(str::trim).collect();
                    CompositeSystem::from_ids(&model, &scope, &ids)
                })
                .collect::<Result<Vec<_>>>()?;
            let vs = VersionSet::new(&model, versions)?;
            let frozen: Vec<String> = crate::redesign::substructure(&vs)
                .into_iter()
                .filter_map(|(c, d)| d.map(|d| format!("{c}={d}")))
                .collect();
            report.summary = Record::new()
                .with("scope", scope)
                .with("frozen", Cell::List(frozen));
            match aggregate_versions(&model, &vs)? {
                AggregationOutcome::Aggregated(set) => {
                    report.entries = pareto_rows(&set.entries);
                    infeasible_if_empty(report);
                }
                AggregationOutcome::Blocked { pair } => {
                    report.summary = std::mem::take(&mut report.summary)
                        .with("blocking_pair", Cell::List(vec![pair.0, pair.1]));
                    report.status = Status::Infeasible;
                }
            }
        }
        Command::Trajectory { m, change_cost } => {
            let (doc, model) = load(text)?;
            let scope = scope_of(&model, m);
            if doc.stages.is_empty() {
                return Err(Error::Argument("document has no stages".into()));
            }
            let plan = doc.stage_plan(*change_cost)?;
            report.summary = Record::new()
                .with("scope", scope.as_str())
                .with("stages", plan.stages().len())
                .with("change_cost", *change_cost);
            match design_trajectory(&plan, &scope)? {
                TrajectoryOutcome::Planned(t) => {
                    report.summary = std::mem::take(&mut report.summary)
                        .with("total_layer", t.total_layer)
                        .with("total_change_cost", t.total_change_cost);
                    report.entries = t
                        .solutions
                        .iter()
                        .zip(&t.layers)
                        .enumerate()
                        .map(|(i, (s, layer))| {
                            Record::new()
                                .with("stage", i + 1)
                                .with("selection", selection_cell(s))
                                .with("layer", *layer)
                        })
                        .collect();
                }
                TrajectoryOutcome::BrokenHorizon { stage } => {
                    report.summary = std::mem::take(&mut report.summary).with("broken_stage", stage);
                    report.status = Status::Infeasible;
                }
            }
        }
        Command::Forecast { model_out, .. } => {
            let (doc, _) = load(text)?;
            let history = doc.generation_models()?;
            let forecast = forecast_model(&history)?;
            let newest = history.last().expect("forecast checked the history length");
            let delta = generation_delta(newest, &forecast)?;
            report.summary = Record::new().with("generations", history.len());
            for pc in &delta.priority_changes {
                report.entries.push(
                    Record::new()
                        .with("change", "priority")
                        .with("target", pc.da.as_str())
                        .with("from", pc.from)
                        .with("to", pc.to),
                );
            }
            for cc in &delta.compatibility_changes {
                report.entries.push(
                    Record::new()
                        .with("change", "compatibility")
                        .with("target", format!("{}~{}", cc.a, cc.b))
                        .with("from", cc.from.unwrap_or_else(|| newest.compat_or_default(&cc.a, &cc.b)))
                        .with("to", cc.to),
                );
            }
            if let Some(path) = model_out {
                std::fs::write(path, serialize_model(&forecast))?;
            }
        }
        Command::DesignTree { clusters, layers, .. } => {
            let gdoc = parse_graph(text)?;
            let g = gdoc.to_graph()?;
            if let Some(k) = clusters {
                let c = agglomerative_clustering(&g, *k)?;
                report.summary = Record::new().with("mode", "clustering").with("clusters", *k);
                report.entries = c
                    .clusters
                    .into_iter()
                    .enumerate()
                    .map(|(i, members)| {
                        Record::new()
                            .with("cluster", i + 1)
                            .with("members", Cell::List(members))
                    })
                    .collect();
            } else if let Some(n) = layers {
                let scores = gdoc
                    .scores
                    .as_ref()
                    .ok_or_else(|| Error::Argument("layered design needs node `scores`".into()))?;
                let t = design_multilayer(&g, scores, *n)?;
                report.summary = Record::new().with("mode", "multilayer").with("layers", *n);
                for (i, edges) in t.intra_edges.iter().enumerate() {
                    report.entries.extend(edges.iter().map(|e| {
                        Record::new()
                            .with("kind", "intra")
                            .with("layer", i + 1)
                            .with("a", e.a.as_str())
                            .with("b", e.b.as_str())
                            .with("weight", e.weight)
                    }));
                }
                for (i, edges) in t.inter_edges.iter().enumerate() {
                    report.entries.extend(edges.iter().map(|e| {
                        Record::new()
                            .with("kind", "inter")
                            .with("layer", i + 1)
                            .with("a", e.lower.as_str())
                            .with("b", e.upper.as_str())
                            .with("weight", e.weight)
                    }));
                }
            } else {
                let f = minimum_spanning_tree(&g);
                report.summary = Record::new()
                    .with("mode", "spanning-tree")
                    .with("total_weight", f.total_weight);
                report.entries = f
                    .edges
                    .iter()
                    .map(|e| {
                        Record::new()
                            .with("a", e.a.as_str())
                            .with("b", e.b.as_str())
                            .with("weight", e.weight)
                    })
                    .collect();
            }
        }
    }
    Ok(())
}
