//! System lifecycle: multistage trajectories over a planning horizon,
//! generation-to-generation deltas, and one-step forecasting.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CompositeSystem, DesignAlternative, MorphModel, OrdinalScale};
use crate::synthesis::{feasible_composites, reprioritize_composites};

fn component_set(m: &MorphModel) -> BTreeSet<String> {
    m.component_ids().into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    stages: Vec<MorphModel>,
    change_cost: u64,
}

impl StagePlan {
    pub fn new(stages: Vec<MorphModel>, change_cost: u64) -> Result<Self> {
        let first = stages
            .first()
            .ok_or_else(|| Error::Argument("a stage plan needs at least one stage".into()))?;
        let components = component_set(first);
        if let Some(i) = stages.iter().position(|s| component_set(s) != components) {
            return Err(Error::Argument(format!(
                "stage {} has a different component set",
                i + 1
            )));
        }
        Ok(Self {
            stages,
            change_cost,
        })
    }

    pub fn stages(&self) -> &[MorphModel] {
        &self.stages
    }

    pub fn change_cost(&self) -> u64 {
        self.change_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub solutions: Vec<CompositeSystem>,
    /// 1-based dominance layer of each stage's solution within that stage.
    pub layers: Vec<usize>,
    pub total_layer: usize,
    pub total_change_cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryOutcome {
    Planned(Trajectory),
    /// 1-based index of the first stage without a feasible composite.
    BrokenHorizon { stage: usize },
}

/// Components whose DA differs between two composites of the same scope.
pub fn changed_components(a: &CompositeSystem, b: &CompositeSystem) -> u64 {
    a.selection
        .iter()
        .filter(|(c, d)| b.get(c) != Some(d.as_str()))
        .count() as u64
}

struct Label {
    layers: usize,
    change: u64,
    prefix: Vec<usize>,
}

/// Exact dynamic program over per-stage candidate sets. Minimizes the summed
/// dominance layers, then the summed change cost; remaining ties go to the
/// lexicographically smallest sequence of selections.
pub fn design_trajectory(plan: &StagePlan, scope: &str) -> Result<TrajectoryOutcome> {
    let candidates = plan
        .stages
        .par_iter()
        .map(|stage| -> Result<Vec<(CompositeSystem, usize)>> {
            let pool = feasible_composites(stage, scope, None)?;
            Ok(reprioritize_composites(&pool, stage.scale().levels)
                .into_iter()
                .map(|r| (r.entry.system, r.layer))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = candidates.iter().position(Vec::is_empty) {
        return Ok(TrajectoryOutcome::BrokenHorizon { stage: i + 1 });
    }

    let cmp_prefix = |a: &[usize], b: &[usize]| -> Ordering {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(t, (&x, &y))| candidates[t][x].0.cmp_selection(&candidates[t][y].0))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let cmp_label = |a: &Label, b: &Label| -> Ordering {
        a.layers
            .cmp(&b.layers)
            .then(a.change.cmp(&b.change))
            .then_with(|| cmp_prefix(&a.prefix, &b.prefix))
    };

    let mut labels: Vec<Label> = candidates[0]
        .iter()
        .enumerate()
        .map(|(j, (_, layer))| Label {
            layers: *layer,
            change: 0,
            prefix: vec![j],
        })
        .collect();
    for t in 1..candidates.len() {
        labels = candidates[t]
            .iter()
            .enumerate()
            .map(|(j, (sys, layer))| {
                labels
                    .iter()
                    .map(|prev| {
                        let from = &candidates[t - 1][*prev.prefix.last().unwrap()].0;
                        let mut prefix = prev.prefix.clone();
                        prefix.push(j);
                        Label {
                            layers: prev.layers + layer,
                            change: prev.change + changed_components(from, sys) * plan.change_cost,
                            prefix,
                        }
                    })
                    .min_by(|a, b| cmp_label(a, b))
                    .expect("previous stage has candidates")
            })
            .collect();
    }
    let best = labels
        .into_iter()
        .min_by(|a, b| cmp_label(a, b))
        .expect("last stage has candidates");
    let (solutions, layers): (Vec<_>, Vec<_>) = best
        .prefix
        .iter()
        .enumerate()
        .map(|(t, &j)| candidates[t][j].clone())
        .unzip();
    Ok(TrajectoryOutcome::Planned(Trajectory {
        solutions,
        layers,
        total_layer: best.layers,
        total_change_cost: best.change,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityChange {
    pub da: String,
    pub from: u32,
    pub to: u32,
}

/// Change of an explicit compatibility entry; None means "no entry".
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityChange {
    pub a: String,
    pub b: String,
    pub from: Option<u32>,
    pub to: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationDelta {
    pub scale: Option<(OrdinalScale, OrdinalScale)>,
    pub default_compatibility: Option<(u32, u32)>,
    pub added: Vec<DesignAlternative>,
    pub removed: Vec<String>,
    pub priority_changes: Vec<PriorityChange>,
    /// DAs whose cost, profit or estimate changed (new values).
    pub updated: Vec<DesignAlternative>,
    pub compatibility_changes: Vec<CompatibilityChange>,
}

impl GenerationDelta {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Replays the delta on `model`.
    pub fn apply(&self, model: &MorphModel) -> Result<MorphModel> {
        let mut m = model.clone();
        if let Some((_, to)) = self.scale {
            m.set_scale(to);
        }
        if let Some((_, to)) = self.default_compatibility {
            m.set_default_compatibility(to);
        }
        for id in &self.removed {
            m.remove_alternative(id);
        }
        for da in self.added.iter().chain(&self.updated) {
            m.insert_alternative(da.clone());
        }
        for pc in &self.priority_changes {
            m.set_priority(&pc.da, pc.to)?;
        }
        for cc in &self.compatibility_changes {
            match cc.to {
                Some(w) => m.set_compat(&cc.a, &cc.b, w),
                None => m.remove_compat(&cc.a, &cc.b),
            }
        }
        Ok(m)
    }
}

fn check_common(a: &MorphModel, b: &MorphModel) -> Result<()> {
    if a.tree() != b.tree() || component_set(a) != component_set(b) {
        return Err(Error::Argument(
            "generations differ in structure or component set".into(),
        ));
    }
    Ok(())
}

/// Exact differences from generation `a` to generation `b`.
pub fn generation_delta(a: &MorphModel, b: &MorphModel) -> Result<GenerationDelta> {
    check_common(a, b)?;
    let mut delta = GenerationDelta::default();
    if a.scale() != b.scale() {
        delta.scale = Some((a.scale(), b.scale()));
    }
    if a.default_compatibility() != b.default_compatibility() {
        delta.default_compatibility = Some((a.default_compatibility(), b.default_compatibility()));
    }
    let old: BTreeMap<&str, &DesignAlternative> =
        a.all_alternatives().map(|d| (d.id.as_str(), d)).collect();
    let new: BTreeMap<&str, &DesignAlternative> =
        b.all_alternatives().map(|d| (d.id.as_str(), d)).collect();
    for (id, da) in &old {
        match new.get(id) {
            Some(nd) if nd.component == da.component => {
                if nd.priority != da.priority {
                    delta.priority_changes.push(PriorityChange {
                        da: id.to_string(),
                        from: da.priority,
                        to: nd.priority,
                    });
                }
                if nd.cost != da.cost || nd.profit != da.profit || nd.ime != da.ime {
                    let mut updated = (*nd).clone();
                    updated.priority = da.priority;
                    delta.updated.push(updated);
                }
            }
            _ => delta.removed.push(id.to_string()),
        }
    }
    for (id, nd) in &new {
        if old.get(id).is_none_or(|d| d.component != nd.component) {
            delta.added.push((*nd).clone());
        }
    }
    let old_c: BTreeMap<(&str, &str), u32> =
        a.compatibility_entries().map(|(x, y, w)| ((x, y), w)).collect();
    let new_c: BTreeMap<(&str, &str), u32> =
        b.compatibility_entries().map(|(x, y, w)| ((x, y), w)).collect();
    let keys: BTreeSet<(&str, &str)> = old_c.keys().chain(new_c.keys()).copied().collect();
    for key in keys {
        let (from, to) = (old_c.get(&key).copied(), new_c.get(&key).copied());
        if from != to {
            delta.compatibility_changes.push(CompatibilityChange {
                a: key.0.to_string(),
                b: key.1.to_string(),
                from,
                to,
            });
        }
    }
    Ok(delta)
}

/// One-step extrapolation of the last transition: priorities that improved
/// improve again by the same step (clamped at 1), compatibilities that rose
/// rise again by the same step (clamped at the scale top). Removed DAs stay
/// removed because the forecast starts from the newest generation.
pub fn forecast_model(history: &[MorphModel]) -> Result<MorphModel> {
    if history.len() < 2 {
        return Err(Error::Argument(
            "forecasting needs at least two generations".into(),
        ));
    }
    for pair in history.windows(2) {
        check_common(&pair[0], &pair[1])?;
    }
    let prev = &history[history.len() - 2];
    let newest = &history[history.len() - 1];
    let mut out = newest.clone();
    for da in newest.all_alternatives() {
        let Some(old) = prev.alternative(&da.id) else { continue };
        if da.priority < old.priority {
            let step = old.priority - da.priority;
            out.set_priority(&da.id, da.priority.saturating_sub(step).max(1))?;
        }
    }
    let nu = newest.scale().compat_max;
    let pairs: BTreeSet<(String, String)> = prev
        .compatibility_entries()
        .chain(newest.compatibility_entries())
        .map(|(x, y, _)| (x.to_string(), y.to_string()))
        .collect();
    for (x, y) in pairs {
        let present = |m: &MorphModel| m.alternative(&x).is_some() && m.alternative(&y).is_some();
        if !present(prev) || !present(newest) {
            continue;
        }
        let (was, now) = (prev.compat_or_default(&x, &y), newest.compat_or_default(&x, &y));
        if now > was {
            out.set_compat(&x, &y, (now + (now - was)).min(nu));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m0;
    use crate::model::validate_model;
    use crate::synthesis::synthesize_scope;

    #[test]
    fn single_stage_takes_best_layer_one_entry() {
        let m = m0();
        let plan = StagePlan::new(vec![m.clone()], 1).unwrap();
        let TrajectoryOutcome::Planned(t) = design_trajectory(&plan, "X").unwrap() else {
            panic!()
        };
        assert_eq!(t.layers, [1]);
        assert_eq!(t.total_change_cost, 0);
        assert_eq!(
            t.solutions[0],
            synthesize_scope(&m, "X", None).unwrap().entries[0].system
        );
    }

    #[test]
    fn identical_stages_repeat_the_choice() {
        let m = m0();
        let plan = StagePlan::new(vec![m.clone(), m.clone()], 1).unwrap();
        let TrajectoryOutcome::Planned(t) = design_trajectory(&plan, "X").unwrap() else {
            panic!()
        };
        assert_eq!(t.solutions[0], t.solutions[1]);
        assert_eq!(t.total_change_cost, 0);
        assert_eq!(t.total_layer, 2);
    }

    #[test]
    fn infeasible_stage_breaks_the_horizon() {
        let m = m0();
        let mut dead = m.clone();
        for (a, b, _) in m.compatibility_entries() {
            dead.set_compat(a, b, 0);
        }
        let plan = StagePlan::new(vec![m.clone(), dead], 1).unwrap();
        assert_eq!(
            design_trajectory(&plan, "X").unwrap(),
            TrajectoryOutcome::BrokenHorizon { stage: 2 }
        );
    }

    #[test]
    fn mismatched_stage_components_rejected() {
        let m = m0();
        let mut other = m.clone();
        other.remove_alternative("C1");
        other.remove_alternative("C2");
        other.collapse_into_leaf("X", Vec::new());
        assert!(StagePlan::new(vec![m, other], 1).is_err());
        assert!(StagePlan::new(Vec::new(), 1).is_err());
    }

    #[test]
    fn delta_examples() {
        let a = m0();
        assert!(generation_delta(&a, &a).unwrap().is_empty());

        let mut b = a.clone();
        b.insert_alternative(DesignAlternative::new("A3", "A", 2));
        let d = generation_delta(&a, &b).unwrap();
        assert_eq!(d.added.len(), 1);
        assert_eq!(d.added[0].id, "A3");
        assert!(d.removed.is_empty() && d.priority_changes.is_empty());

        let mut c = a.clone();
        c.set_priority("B2", 1).unwrap();
        c.set_compat("A1", "C1", 3);
        let d = generation_delta(&a, &c).unwrap();
        assert_eq!(
            d.priority_changes,
            vec![PriorityChange { da: "B2".into(), from: 2, to: 1 }]
        );
        assert_eq!(
            d.compatibility_changes,
            vec![CompatibilityChange { a: "A1".into(), b: "C1".into(), from: Some(2), to: Some(3) }]
        );
        assert_eq!(d.apply(&a).unwrap(), c);
    }

    #[test]
    fn forecast_examples() {
        let a = m0();
        assert_eq!(forecast_model(&[a.clone(), a.clone()]).unwrap(), a);
        assert!(forecast_model(&[a.clone()]).is_err());

        let mut old = a.clone();
        old.set_priority("B2", 3).unwrap();
        let f = forecast_model(&[old, a.clone()]).unwrap();
        assert_eq!(f.alternative("B2").unwrap().priority, 1);
    }

    #[test]
    fn forecast_mixed_trends() {
        let mut g1 = m0();
        g1.set_priority("C2", 3).unwrap();
        g1.set_compat("A2", "C2", 1);
        let mut g2 = g1.clone();
        g2.set_priority("C2", 2).unwrap();
        g2.set_compat("A2", "C2", 2);
        g2.remove_alternative("B2");
        let f = forecast_model(&[g1, g2.clone()]).unwrap();

        // rule applied by hand
        let mut expected = g2;
        expected.set_priority("C2", 1).unwrap();
        expected.set_compat("A2", "C2", 3);
        assert_eq!(f, expected);
        assert!(!validate_model(&f).has_errors());
        assert!(synthesize_scope(&f, "X", None).is_ok());
    }
}
