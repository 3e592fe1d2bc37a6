//! Multicriteria ranking and bottleneck detection.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    dominates_quality, quality_vector, CompositeSystem, DesignAlternative, Dominance, MorphModel,
    QualityVector,
};
use crate::synthesis::{dominance_layers, feasible_composites, synthesize_scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub name: String,
    pub direction: Direction,
}

impl Criterion {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
        }
    }
}

/// Items × criteria table of values.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaMatrix {
    items: Vec<String>,
    criteria: Vec<Criterion>,
    values: Vec<Vec<f64>>,
}

impl CriteriaMatrix {
    pub fn new(items: Vec<String>, criteria: Vec<Criterion>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != items.len() {
            return Err(Error::Argument(format!(
                "{} value rows for {} items",
                values.len(),
                items.len()
            )));
        }
        for (item, row) in items.iter().zip(&values) {
            if row.len() != criteria.len() {
                return Err(Error::Argument(format!(
                    "item `{item}` has {} values for {} criteria",
                    row.len(),
                    criteria.len()
                )));
            }
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::Argument(format!("item `{item}` has a NaN value")));
            }
        }
        Ok(Self {
            items,
            criteria,
            values,
        })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.values[item]
    }

    fn dominance(&self, a: usize, b: usize) -> Dominance {
        let mut a_ge = true;
        let mut b_ge = true;
        for (c, crit) in self.criteria.iter().enumerate() {
            let (x, y) = match crit.direction {
                Direction::Maximize => (self.values[a][c], self.values[b][c]),
                Direction::Minimize => (-self.values[a][c], -self.values[b][c]),
            };
            a_ge &= x >= y;
            b_ge &= y >= x;
        }
        match (a_ge, b_ge) {
            (true, false) => Dominance::Dominates,
            (_, true) => Dominance::DominatedOrEqual,
            _ => Dominance::Incomparable,
        }
    }
}

/// Pareto layers of the items (layer 0 is non-dominated), each sorted by id.
pub fn rank_pareto_layers(m: &CriteriaMatrix) -> Vec<Vec<String>> {
    let idx: Vec<usize> = (0..m.items.len()).collect();
    dominance_layers(&idx, |&a, &b| m.dominance(a, b))
        .into_iter()
        .map(|layer| {
            let mut ids: Vec<String> = layer.into_iter().map(|i| m.items[i].clone()).collect();
            ids.sort();
            ids
        })
        .collect()
}

/// Criteria table over the feasible composites of a scope: w and the
/// cumulative priority counts (maximized), total cost (minimized) and total
/// profit (maximized). Items are composite ids.
pub fn composite_criteria(model: &MorphModel, scope: &str, min_w: Option<u32>) -> Result<CriteriaMatrix> {
    let pool = feasible_composites(model, scope, min_w)?;
    let levels = model.scale().levels as usize;
    let mut criteria = vec![Criterion::new("w", Direction::Maximize)];
    for t in 1..levels {
        criteria.push(Criterion::new(format!("top{t}"), Direction::Maximize));
    }
    criteria.push(Criterion::new("cost", Direction::Minimize));
    criteria.push(Criterion::new("profit", Direction::Maximize));
    let mut items = Vec::with_capacity(pool.len());
    let mut values = Vec::with_capacity(pool.len());
    for entry in pool {
        let mut row = vec![entry.quality.w as f64];
        row.extend(
            entry.quality.cumulative()[..levels - 1]
                .iter()
                .map(|&c| c as f64),
        );
        let (cost, profit) = entry
            .system
            .da_ids()
            .iter()
            .filter_map(|id| model.alternative(id))
            .fold((0.0, 0.0), |(c, p), d| (c + d.cost, p + d.profit));
        row.push(cost);
        row.push(profit);
        items.push(entry.system.composite_id());
        values.push(row);
    }
    CriteriaMatrix::new(items, criteria, values)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BottleneckTarget {
    Component(String),
    Pair(String, String),
}

impl std::fmt::Display for BottleneckTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Component(c) => write!(f, "{c}"),
            Self::Pair(a, b) => write!(f, "{a}~{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckEntry {
    pub target: BottleneckTarget,
    /// Quality reachable once the target is idealized; None when no feasible
    /// system exists even then.
    pub score: Option<QualityVector>,
    /// 1-based dominance layer of `score`.
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BottleneckReport {
    pub entries: Vec<BottleneckEntry>,
}

impl BottleneckReport {
    fn ranked(scored: Vec<(BottleneckTarget, Option<QualityVector>)>) -> Self {
        let (some, none): (Vec<_>, Vec<_>) = scored.into_iter().partition(|(_, s)| s.is_some());
        let layers = dominance_layers(&some, |a, b| {
            dominates_quality(a.1.as_ref().unwrap(), b.1.as_ref().unwrap())
                .unwrap_or(Dominance::Incomparable)
        });
        let mut entries = Vec::new();
        for (i, layer) in layers.iter().enumerate() {
            let mut members: Vec<&(BottleneckTarget, Option<QualityVector>)> =
                layer.iter().map(|&j| &some[j]).collect();
            members.sort_by(|a, b| a.0.cmp(&b.0));
            entries.extend(members.into_iter().map(|(t, s)| BottleneckEntry {
                target: t.clone(),
                score: s.clone(),
                layer: i + 1,
            }));
        }
        let last = layers.len() + 1;
        let mut none = none;
        none.sort_by(|a, b| a.0.cmp(&b.0));
        entries.extend(none.into_iter().map(|(t, _)| BottleneckEntry {
            target: t,
            score: None,
            layer: last,
        }));
        Self { entries }
    }

    pub fn layer(&self, layer: usize) -> impl Iterator<Item = &BottleneckEntry> {
        self.entries.iter().filter(move |e| e.layer == layer)
    }
}

fn ideal_id(model: &MorphModel, component: &str) -> String {
    let mut id = format!("{component}#ideal");
    while model.alternative(&id).is_some() {
        id.push('#');
    }
    id
}

/// Copy of `model` where `component` gains a priority-1 DA fully compatible
/// with every DA of the other components of `scope`.
pub fn idealize_component(model: &MorphModel, scope: &str, component: &str) -> Result<MorphModel> {
    let children = model.leaf_scope(scope)?;
    if !children.iter().any(|c| c == component) {
        return Err(Error::Argument(format!(
            "`{component}` is not a component of `{scope}`"
        )));
    }
    let nu = model.scale().compat_max;
    let id = ideal_id(model, component);
    let mut m = model.clone();
    m.insert_alternative(DesignAlternative::new(id.clone(), component, 1));
    for other in children.iter().filter(|c| *c != component) {
        for da in model.alternatives(other) {
            m.set_compat(&id, &da.id, nu);
        }
    }
    Ok(m)
}

/// Ranks the components of `scope` by the quality their idealization unlocks
/// (layer 1 = largest improvement).
pub fn detect_element_bottlenecks(model: &MorphModel, scope: &str) -> Result<BottleneckReport> {
    let children = model.leaf_scope(scope)?.to_vec();
    let scored = children
        .par_iter()
        .map(|c| {
            let ideal = idealize_component(model, scope, c)?;
            let best = synthesize_scope(&ideal, scope, None)?
                .best()
                .map(|e| e.quality.clone());
            Ok((BottleneckTarget::Component(c.clone()), best))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BottleneckReport::ranked(scored))
}

/// Pairs of `s` whose compatibility equals w(s), scored by the quality of `s`
/// after raising that pair to the top of the scale.
pub fn detect_compatibility_bottlenecks(
    model: &MorphModel,
    s: &CompositeSystem,
) -> Result<BottleneckReport> {
    let base = quality_vector(model, s)?;
    let ids = s.da_ids();
    let nu = model.scale().compat_max;
    let mut scored = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            if model.compat_or_default(a, b) != base.w {
                continue;
            }
            let mut raised = model.clone();
            raised.set_compat(a, b, nu);
            let q = quality_vector(&raised, s)?;
            scored.push((BottleneckTarget::Pair(a.to_string(), b.to_string()), Some(q)));
        }
    }
    Ok(BottleneckReport::ranked(scored))
}
