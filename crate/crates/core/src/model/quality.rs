use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{CompositeSystem, MorphModel};

/// Outcome of a three-way dominance comparison of `a` against `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dominance {
    Dominates,
    DominatedOrEqual,
    Incomparable,
}

/// N(S) = (w; n1..nl): minimum pairwise compatibility plus the histogram of
/// selected priorities (index 0 holds the count of priority-1 DAs).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QualityVector {
    pub w: u32,
    pub counts: Vec<u32>,
}

impl QualityVector {
    pub fn new(w: u32, counts: Vec<u32>) -> Self {
        Self { w, counts }
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Running sums of `counts` from the best priority level down.
    pub fn cumulative(&self) -> Vec<u32> {
        cumulative(&self.counts)
    }

    /// Presentation order: larger w first, then lexicographically larger
    /// cumulative counts. Any vector that dominates another sorts before it.
    pub fn cmp_best_first(&self, other: &Self) -> Ordering {
        other
            .w
            .cmp(&self.w)
            .then_with(|| other.cumulative().cmp(&self.cumulative()))
    }
}

impl fmt::Display for QualityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self.counts.iter().map(u32::to_string).collect();
        write!(f, "({}; {})", self.w, counts.join(","))
    }
}

pub(crate) fn cumulative(counts: &[u32]) -> Vec<u32> {
    counts
        .iter()
        .scan(0u32, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect()
}

/// Folds per-coordinate "at least as good" checks into a tri-state.
pub(crate) fn fold_dominance(pairs: impl IntoIterator<Item = (u32, u32)>) -> Dominance {
    let mut a_ge = true;
    let mut b_ge = true;
    for (x, y) in pairs {
        a_ge &= x >= y;
        b_ge &= y >= x;
    }
    match (a_ge, b_ge) {
        (true, false) => Dominance::Dominates,
        (_, true) => Dominance::DominatedOrEqual,
        (false, false) => Dominance::Incomparable,
    }
}

pub fn dominates_quality(a: &QualityVector, b: &QualityVector) -> Result<Dominance> {
    if a.counts.len() != b.counts.len() {
        return Err(Error::ComparisonDomain(format!(
            "priority scales differ ({} vs {} levels)",
            a.counts.len(),
            b.counts.len()
        )));
    }
    if a.total() != b.total() {
        return Err(Error::ComparisonDomain(format!(
            "component counts differ ({} vs {})",
            a.total(),
            b.total()
        )));
    }
    let ca = a.cumulative();
    let cb = b.cumulative();
    Ok(fold_dominance(
        std::iter::once((a.w, b.w)).chain(ca.into_iter().zip(cb)),
    ))
}

/// Checks that `s` selects exactly one DA of each child of its scope.
pub(crate) fn check_composite(model: &MorphModel, s: &CompositeSystem) -> Result<()> {
    let children = model
        .tree()
        .node(&s.scope)
        .map(|n| n.children.as_slice())
        .ok_or_else(|| Error::ModelReference(format!("scope `{}`", s.scope)))?;
    if children.len() != s.selection.len() {
        return Err(Error::ModelReference(format!(
            "composite over `{}` selects {} DAs for {} components",
            s.scope,
            s.selection.len(),
            children.len()
        )));
    }
    for (component, da) in &s.selection {
        if !children.contains(component) {
            return Err(Error::ModelReference(format!(
                "component `{component}` is not a child of `{}`",
                s.scope
            )));
        }
        let alt = model
            .alternative(da)
            .ok_or_else(|| Error::ModelReference(format!("alternative `{da}`")))?;
        if &alt.component != component {
            return Err(Error::ModelReference(format!(
                "alternative `{da}` belongs to `{}`, not `{component}`",
                alt.component
            )));
        }
    }
    for (i, (c, _)) in s.selection.iter().enumerate() {
        if s.selection[..i].iter().any(|(p, _)| p == c) {
            return Err(Error::ModelReference(format!(
                "component `{c}` selected twice"
            )));
        }
    }
    Ok(())
}

/// Minimum pairwise compatibility of the selection; ν when there are no pairs.
pub(crate) fn min_compat(model: &MorphModel, ids: &[&str]) -> u32 {
    let mut w = model.scale().compat_max;
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            w = w.min(model.compat_or_default(a, b));
        }
    }
    w
}

pub fn quality_vector(model: &MorphModel, s: &CompositeSystem) -> Result<QualityVector> {
    check_composite(model, s)?;
    let ids = s.da_ids();
    let mut counts = vec![0u32; model.scale().levels as usize];
    for id in &ids {
        let p = model
            .alternative(id)
            .map(|d| d.priority)
            .ok_or_else(|| Error::ModelReference(format!("alternative `{id}`")))?;
        let slot = counts.get_mut(p as usize - 1).ok_or_else(|| {
            Error::Model(format!("alternative `{id}` has priority {p} outside scale"))
        })?;
        *slot += 1;
    }
    Ok(QualityVector::new(min_compat(model, &ids), counts))
}
