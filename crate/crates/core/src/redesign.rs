//! Redesign of existing systems: budgeted improvement ("1-1") and
//! aggregation of several system versions into one ("n-1").

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CompositeSystem, MorphModel};
use crate::synthesis::{synthesize_scope, ParetoEntry, ParetoSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    /// Improve the priority of a DA by one step toward 1.
    UpgradePriority(String),
    /// Raise the compatibility of a DA pair by one step toward the scale top.
    UpgradeCompatibility(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprovementAction {
    pub id: String,
    pub kind: ActionKind,
    pub cost: u64,
}

impl ImprovementAction {
    pub fn new(id: impl Into<String>, kind: ActionKind, cost: u64) -> Self {
        Self {
            id: id.into(),
            kind,
            cost,
        }
    }

    fn check(&self, model: &MorphModel) -> Result<()> {
        let known = |id: &str| {
            model
                .alternative(id)
                .map(|_| ())
                .ok_or_else(|| Error::Argument(format!("action `{}` targets unknown alternative `{id}`", self.id)))
        };
        match &self.kind {
            ActionKind::UpgradePriority(da) => known(da),
            ActionKind::UpgradeCompatibility(a, b) => {
                known(a)?;
                known(b)?;
                if model.alternative(a).map(|d| &d.component) == model.alternative(b).map(|d| &d.component) {
                    return Err(Error::Argument(format!(
                        "action `{}` pairs two alternatives of one component",
                        self.id
                    )));
                }
                Ok(())
            }
        }
    }

    /// Applies the action in place, clamping to the scales.
    pub fn apply(&self, model: &mut MorphModel) -> Result<()> {
        self.check(model)?;
        match &self.kind {
            ActionKind::UpgradePriority(da) => {
                let p = model.alternative(da).map(|d| d.priority).unwrap_or(1);
                model.set_priority(da, p.saturating_sub(1).max(1))
            }
            ActionKind::UpgradeCompatibility(a, b) => {
                let w = model.compat_or_default(a, b);
                model.set_compat(a, b, (w + 1).min(model.scale().compat_max));
                Ok(())
            }
        }
    }
}

/// Largest action list accepted by the exhaustive subset search.
pub const MAX_ACTIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementOutcome {
    /// Chosen action ids, in input order.
    pub chosen: Vec<String>,
    pub cost: u64,
    /// Best entry of the improved model; None when it has no feasible system.
    pub best: Option<ParetoEntry>,
}

struct Candidate {
    mask: u32,
    cost: u64,
    best: Option<ParetoEntry>,
}

/// Larger is better: feasible over infeasible, then (w, cumulative counts)
/// lexicographically, then lower cost, then the smaller id list.
fn cmp_candidates(a: &Candidate, b: &Candidate, actions: &[ImprovementAction]) -> Ordering {
    let quality = match (&a.best, &b.best) {
        (Some(x), Some(y)) => y.quality.cmp_best_first(&x.quality),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    };
    let ids = |m: u32| -> Vec<&str> {
        actions
            .iter()
            .enumerate()
            .filter(|(i, _)| m & (1 << i) != 0)
            .map(|(_, a)| a.id.as_str())
            .collect()
    };
    quality
        .then_with(|| b.cost.cmp(&a.cost))
        .then_with(|| ids(b.mask).cmp(&ids(a.mask)))
}

/// Exhaustive search over affordable action subsets. Every subset is applied
/// to a copy of the model and synthesized; the subset whose best entry ranks
/// highest (max w, then cumulative priority counts, then lower cost, then
/// action ids) wins. The ranking extends dominance, so the winner's best
/// entry is never dominated by another affordable subset's.
pub fn improve_under_budget(
    model: &MorphModel,
    scope: &str,
    actions: &[ImprovementAction],
    budget: u64,
) -> Result<ImprovementOutcome> {
    if actions.len() > MAX_ACTIONS {
        return Err(Error::Argument(format!(
            "{} actions exceed the exhaustive limit of {MAX_ACTIONS}",
            actions.len()
        )));
    }
    for (i, a) in actions.iter().enumerate() {
        a.check(model)?;
        if actions[..i].iter().any(|b| b.id == a.id) {
            return Err(Error::Argument(format!("duplicate action id `{}`", a.id)));
        }
    }
    model.leaf_scope(scope)?;

    let winner = (0u32..1 << actions.len())
        .into_par_iter()
        .filter_map(|mask| {
            let cost: u64 = actions
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.cost)
                .sum();
            (cost <= budget).then_some((mask, cost))
        })
        .map(|(mask, cost)| -> Result<Candidate> {
            let mut m = model.clone();
            for (i, a) in actions.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.apply(&mut m)?;
                }
            }
            let best = synthesize_scope(&m, scope, None)?.best().cloned();
            Ok(Candidate { mask, cost, best })
        })
        .try_reduce_with(|a, b| {
            Ok(if cmp_candidates(&a, &b, actions).is_ge() { a } else { b })
        })
        .expect("the empty subset is always affordable")?;

    Ok(ImprovementOutcome {
        chosen: actions
            .iter()
            .enumerate()
            .filter(|(i, _)| winner.mask & (1 << i) != 0)
            .map(|(_, a)| a.id.clone())
            .collect(),
        cost: winner.cost,
        best: winner.best,
    })
}

/// Several composite systems over one scope.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionSet {
    versions: Vec<CompositeSystem>,
}

impl VersionSet {
    pub fn new(model: &MorphModel, versions: Vec<CompositeSystem>) -> Result<Self> {
        if versions.len() < 2 {
            return Err(Error::Argument("a version set needs at least two versions".into()));
        }
        let scope = &versions[0].scope;
        for v in &versions {
            if &v.scope != scope {
                return Err(Error::Argument(format!(
                    "versions span scopes `{scope}` and `{}`",
                    v.scope
                )));
            }
            crate::model::quality_vector(model, v)?;
        }
        Ok(Self { versions })
    }

    pub fn scope(&self) -> &str {
        &self.versions[0].scope
    }

    pub fn versions(&self) -> &[CompositeSystem] {
        &self.versions
    }

    fn components(&self) -> Vec<String> {
        self.versions[0]
            .selection
            .iter()
            .map(|(c, _)| c.clone())
            .collect()
    }
}

/// Per component, the DA shared by every version, or None where they disagree.
pub fn substructure(vs: &VersionSet) -> Vec<(String, Option<String>)> {
    vs.components()
        .into_iter()
        .map(|c| {
            let first = vs.versions[0].get(&c).map(str::to_string);
            let agreed = first.filter(|d| vs.versions.iter().all(|v| v.get(&c) == Some(d.as_str())));
            (c, agreed)
        })
        .collect()
}

/// The model restricted, per component of the scope, to the DAs used by at
/// least one version. Compatibility entries among kept DAs are inherited.
pub fn superstructure(model: &MorphModel, vs: &VersionSet) -> MorphModel {
    let mut m = model.clone();
    for c in vs.components() {
        let used: Vec<String> = vs
            .versions
            .iter()
            .filter_map(|v| v.get(&c).map(str::to_string))
            .collect();
        m.retain_alternatives(&c, |id| used.iter().any(|u| u == id));
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationOutcome {
    Aggregated(ParetoSet),
    /// Two agreed (frozen) DAs are incompatible.
    Blocked { pair: (String, String) },
}

/// Synthesis over the superstructure with every agreed component frozen to
/// its agreed DA.
pub fn aggregate_versions(model: &MorphModel, vs: &VersionSet) -> Result<AggregationOutcome> {
    let frozen: Vec<String> = substructure(vs).into_iter().filter_map(|(_, d)| d).collect();
    for (i, a) in frozen.iter().enumerate() {
        for b in &frozen[i + 1..] {
            if model.compat_or_default(a, b) == 0 {
                return Ok(AggregationOutcome::Blocked {
                    pair: (a.clone(), b.clone()),
                });
            }
        }
    }
    let sup = superstructure(model, vs);
    Ok(AggregationOutcome::Aggregated(synthesize_scope(
        &sup,
        vs.scope(),
        None,
    )?))
}
