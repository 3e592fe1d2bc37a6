//! Combinatorial synthesis of composite systems.
//!
//! A composite system picks one DA per child of a scope. Its quality is the
//! vector `(w; n1..nl)`; synthesis returns the composites that no other
//! feasible composite dominates. The search is a branch-and-bound over partial
//! selections whose result is, by contract, the same set as filtering the full
//! enumeration.

mod mckp;
mod scope;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{
    aggregate_ime, cumulative, fold_dominance, dominates_quality, CompositeSystem, DesignAlternative, Dominance,
    IntervalMultisetEstimate, MorphModel, QualityVector,
};

pub use mckp::{solve_mckp, MckpGroup, MckpInstance, MckpItem, MckpOutcome, MckpSolution};
pub(crate) use scope::ScopeView;
use scope::RawQuality;

/// Quality measures that can be ranked inside a ParetoSet.
pub trait Quality: Clone + PartialEq + std::fmt::Debug {
    fn w(&self) -> u32;
    fn dominance(&self, other: &Self) -> Dominance;
    fn cmp_best_first(&self, other: &Self) -> Ordering;
}

impl Quality for QualityVector {
    fn w(&self) -> u32 {
        self.w
    }

    fn dominance(&self, other: &Self) -> Dominance {
        dominates_quality(self, other).unwrap_or(Dominance::Incomparable)
    }

    fn cmp_best_first(&self, other: &Self) -> Ordering {
        QualityVector::cmp_best_first(self, other)
    }
}

/// Quality of a composite under interval multiset estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImeQuality {
    pub w: u32,
    pub estimate: IntervalMultisetEstimate,
}

impl Quality for ImeQuality {
    fn w(&self) -> u32 {
        self.w
    }

    fn dominance(&self, other: &Self) -> Dominance {
        let (a, b) = (self.estimate.counts(), other.estimate.counts());
        if a.len() != b.len() || self.estimate.total() != other.estimate.total() {
            return Dominance::Incomparable;
        }
        fold_dominance(std::iter::once((self.w, other.w)).chain(cumulative(a).into_iter().zip(cumulative(b))))
    }

    fn cmp_best_first(&self, other: &Self) -> Ordering {
        other.w.cmp(&self.w).then_with(|| {
            cumulative(other.estimate.counts()).cmp(&cumulative(self.estimate.counts()))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoEntry<Q = QualityVector> {
    pub system: CompositeSystem,
    pub quality: Q,
}

impl<Q: Quality> ParetoEntry<Q> {
    /// Best quality first, ties by lexicographic selection.
    pub fn cmp_rank(&self, other: &Self) -> Ordering {
        self.quality
            .cmp_best_first(&other.quality)
            .then_with(|| self.system.cmp_selection(&other.system))
    }
}

/// Mutually non-dominated composites of one scope, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSet<Q = QualityVector> {
    pub scope: String,
    pub entries: Vec<ParetoEntry<Q>>,
}

impl<Q: Quality> ParetoSet<Q> {
    fn sorted(scope: &str, mut entries: Vec<ParetoEntry<Q>>) -> Self {
        entries.sort_by(ParetoEntry::cmp_rank);
        Self {
            scope: scope.to_string(),
            entries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Max-w entry (the first one under the ranking order).
    pub fn best(&self) -> Option<&ParetoEntry<Q>> {
        self.entries.first()
    }
}

/// Every composite of `scope` in lexicographic (odometer) order.
pub fn enumerate_scope(model: &MorphModel, scope: &str) -> Result<Vec<CompositeSystem>> {
    let view = ordinal_view(model, scope)?;
    Ok(view.all_picks().iter().map(|p| view.composite(p)).collect())
}

fn ordinal_view(model: &MorphModel, scope: &str) -> Result<ScopeView> {
    let children = model.leaf_scope(scope)?;
    let levels = model.scale().levels as usize;
    Ok(ScopeView::new(model, scope, children, |da| {
        let mut v = vec![0u32; levels];
        if let Some(slot) = v.get_mut(da.priority.saturating_sub(1) as usize) {
            *slot = 1;
        }
        v
    }))
}

fn check_min_w(model: &MorphModel, min_w: Option<u32>) -> Result<u32> {
    let min_w = min_w.unwrap_or(1);
    if min_w > model.scale().compat_max {
        return Err(Error::Argument(format!(
            "min_w {min_w} exceeds compatibility scale {}",
            model.scale().compat_max
        )));
    }
    Ok(min_w)
}

fn to_quality_vector(q: RawQuality) -> QualityVector {
    QualityVector::new(q.w, q.counts)
}

/// Non-dominated composites of `scope` with w >= `min_w` (default 1).
pub fn synthesize_scope(model: &MorphModel, scope: &str, min_w: Option<u32>) -> Result<ParetoSet> {
    let min_w = check_min_w(model, min_w)?;
    let view = ordinal_view(model, scope)?;
    let entries = view
        .pareto_search(min_w)
        .into_iter()
        .map(|(picks, q)| ParetoEntry {
            system: view.composite(&picks),
            quality: to_quality_vector(q),
        })
        .collect();
    Ok(ParetoSet::sorted(scope, entries))
}

/// Every composite of `scope` with w >= `min_w`, each with its quality, in
/// enumeration order.
pub fn feasible_composites(
    model: &MorphModel,
    scope: &str,
    min_w: Option<u32>,
) -> Result<Vec<ParetoEntry>> {
    let min_w = check_min_w(model, min_w)?;
    let view = ordinal_view(model, scope)?;
    Ok(view
        .all_picks()
        .into_iter()
        .filter_map(|p| {
            let q = view.raw_quality(&p);
            (q.w >= min_w).then(|| ParetoEntry {
                system: view.composite(&p),
                quality: to_quality_vector(q),
            })
        })
        .collect())
}

pub fn synthesize_scope_ime(
    model: &MorphModel,
    scope: &str,
    min_w: Option<u32>,
) -> Result<ParetoSet<ImeQuality>> {
    let min_w = check_min_w(model, min_w)?;
    let children = model.leaf_scope(scope)?;
    let levels = model.scale().levels as usize;
    let mut total = None;
    for c in children {
        for da in model.alternatives(c) {
            let ime = da.ime.as_ref().ok_or_else(|| {
                Error::Argument(format!("alternative `{}` has no interval estimate", da.id))
            })?;
            if ime.levels() != levels {
                return Err(Error::Argument(format!(
                    "estimate of `{}` has {} levels, scale has {levels}",
                    da.id,
                    ime.levels()
                )));
            }
            match total {
                None => total = Some(ime.total()),
                Some(k) if k != ime.total() => {
                    return Err(Error::Argument(format!(
                        "estimate of `{}` has {} points, expected {k}",
                        da.id,
                        ime.total()
                    )))
                }
                _ => {}
            }
        }
    }
    let view = ScopeView::new(model, scope, children, |da| {
        da.ime
            .as_ref()
            .map(|e| e.counts().to_vec())
            .unwrap_or_default()
    });
    let mut entries = Vec::new();
    for (picks, q) in view.pareto_search(min_w) {
        let system = view.composite(&picks);
        let parts: Vec<IntervalMultisetEstimate> = system
            .da_ids()
            .iter()
            .filter_map(|id| model.alternative(id).and_then(|d| d.ime.clone()))
            .collect();
        entries.push(ParetoEntry {
            system,
            quality: ImeQuality {
                w: q.w,
                estimate: aggregate_ime(&parts)?,
            },
        });
    }
    Ok(ParetoSet::sorted(scope, entries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reprioritized<Q = QualityVector> {
    pub entry: ParetoEntry<Q>,
    /// 1-based dominance layer (1 = non-dominated).
    pub layer: usize,
    /// Layer clamped to the priority scale.
    pub priority: u32,
}

/// Peels dominance layers off `pool` and turns layer indices into priorities.
/// Output is ordered by layer, then rank order inside the layer.
pub fn reprioritize_composites<Q: Quality>(
    pool: &[ParetoEntry<Q>],
    levels: u32,
) -> Vec<Reprioritized<Q>> {
    let layers = dominance_layers(pool, |a, b| a.quality.dominance(&b.quality));
    let mut out = Vec::with_capacity(pool.len());
    for (idx, layer) in layers.into_iter().enumerate() {
        let mut members: Vec<&ParetoEntry<Q>> = layer.into_iter().map(|i| &pool[i]).collect();
        members.sort_by(|a, b| a.cmp_rank(b));
        for entry in members {
            out.push(Reprioritized {
                entry: entry.clone(),
                layer: idx + 1,
                priority: (idx as u32 + 1).min(levels.max(1)),
            });
        }
    }
    out
}

/// Iterated non-dominated peeling; returns indices into `items` per layer.
pub(crate) fn dominance_layers<T>(
    items: &[T],
    dominance: impl Fn(&T, &T) -> Dominance,
) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..items.len()).collect();
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let (front, rest): (Vec<usize>, Vec<usize>) = remaining.iter().partition(|&&i| {
            !remaining
                .iter()
                .any(|&j| j != i && dominance(&items[j], &items[i]) == Dominance::Dominates)
        });
        layers.push(front);
        remaining = rest;
    }
    layers
}

/// Bottom-up synthesis over the whole tree.
pub fn synthesize_bottom_up(model: &MorphModel, top_k: Option<usize>) -> Result<ParetoSet> {
    synthesize_subtree(model, model.tree().root(), top_k, None)
}

/// Bottom-up synthesis of the subtree at `scope`: every internal descendant is
/// synthesized, its best `top_k` composites (by dominance layer, then rank)
/// become DAs of that node with layer-derived priorities, and the scope itself
/// is finally synthesized into a ParetoSet.
///
/// Compatibility between composite DAs is never defaulted: every pair needed
/// at a scope with composite children must be present in the model.
pub fn synthesize_subtree(
    model: &MorphModel,
    scope: &str,
    top_k: Option<usize>,
    min_w: Option<u32>,
) -> Result<ParetoSet> {
    if top_k == Some(0) {
        return Err(Error::Argument("top_k must be at least 1".into()));
    }
    if !model.tree().contains(scope) {
        return Err(Error::Argument(format!("scope `{scope}` not found")));
    }
    let levels = model.scale().levels;
    let mut work = model.clone();
    let order = model.tree().internal_post_order(scope);
    for node in &order {
        require_composite_compat(model, &work, node)?;
        if node == scope {
            break;
        }
        let pool = feasible_composites(&work, node, min_w)?;
        let mut ranked = reprioritize_composites(&pool, levels);
        if let Some(k) = top_k {
            ranked.truncate(k);
        }
        let das = ranked
            .into_iter()
            .map(|r| composite_alternative(&work, node, &r.entry.system, r.priority))
            .collect();
        work.collapse_into_leaf(node, das);
    }
    synthesize_scope(&work, scope, min_w)
}

fn composite_alternative(
    model: &MorphModel,
    node: &str,
    system: &CompositeSystem,
    priority: u32,
) -> DesignAlternative {
    let (cost, profit) = system
        .da_ids()
        .iter()
        .filter_map(|id| model.alternative(id))
        .fold((0.0, 0.0), |(c, p), d| (c + d.cost, p + d.profit));
    DesignAlternative::new(system.composite_id(), node, priority)
        .with_cost(cost)
        .with_profit(profit)
}

fn require_composite_compat(original: &MorphModel, work: &MorphModel, node: &str) -> Result<()> {
    let children = work.tree().children(node);
    for (i, ca) in children.iter().enumerate() {
        for cb in &children[i + 1..] {
            if original.tree().is_leaf(ca) && original.tree().is_leaf(cb) {
                continue;
            }
            for da in work.alternatives(ca) {
                for db in work.alternatives(cb) {
                    if work.compat(&da.id, &db.id).is_none() {
                        return Err(Error::Model(format!(
                            "missing composite-level compatibility between `{}` and `{}` in scope `{node}`",
                            da.id, db.id
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m0;
    use crate::model::{quality_vector, OrdinalScale, Tree, TreeNode};

    /// Exhaustive reference: enumerate, evaluate, keep what nothing dominates.
    fn oracle(model: &MorphModel, scope: &str, min_w: u32) -> Vec<(Vec<String>, QualityVector)> {
        let all: Vec<_> = enumerate_scope(model, scope)
            .unwrap()
            .into_iter()
            .map(|s| {
                let q = quality_vector(model, &s).unwrap();
                (s, q)
            })
            .filter(|(_, q)| q.w >= min_w)
            .collect();
        let mut out: Vec<_> = all
            .iter()
            .filter(|(_, q)| {
                !all.iter()
                    .any(|(_, o)| dominates_quality(o, q).unwrap() == Dominance::Dominates)
            })
            .map(|(s, q)| (s.da_ids().iter().map(|x| x.to_string()).collect::<Vec<_>>(), q.clone()))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn as_sorted(p: &ParetoSet) -> Vec<(Vec<String>, QualityVector)> {
        let mut v: Vec<_> = p
            .entries
            .iter()
            .map(|e| {
                (
                    e.system.da_ids().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    e.quality.clone(),
                )
            })
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    #[test]
    fn enumeration_counts() {
        let m = m0();
        let all = enumerate_scope(&m, "X").unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].da_ids(), ["A1", "B1", "C1"]);
        assert_eq!(all[7].da_ids(), ["A2", "B2", "C2"]);

        let mut reduced = m.clone();
        reduced.remove_alternative("A2");
        assert_eq!(enumerate_scope(&reduced, "X").unwrap().len(), 4);

        let single = MorphModel::builder(OrdinalScale::new(3, 3).unwrap(), Tree::flat("R", &["A"]))
            .alternative("A", "A1", 1)
            .alternative("A", "A2", 2)
            .alternative("A", "A3", 3)
            .build()
            .unwrap();
        assert_eq!(enumerate_scope(&single, "R").unwrap().len(), 3);
        assert!(enumerate_scope(&m, "A").is_err());
    }

    #[test]
    fn reference_pareto_set() {
        let m = m0();
        let p = synthesize_scope(&m, "X", Some(1)).unwrap();
        assert_eq!(as_sorted(&p), oracle(&m, "X", 1));
        let best = p.best().unwrap();
        assert_eq!(best.system.da_ids(), ["A1", "B1", "C1"]);
        assert_eq!(best.quality, QualityVector::new(2, vec![3, 0, 0]));
        // (A1,B1,C1) is the only non-dominated composite
        assert_eq!(p.len(), 1);

        assert!(synthesize_scope(&m, "X", Some(3)).unwrap().is_empty());
        assert!(oracle(&m, "X", 3).is_empty());
        assert!(synthesize_scope(&m, "X", Some(4)).is_err());
    }

    #[test]
    fn fully_incompatible_leaf_yields_nothing() {
        let m = MorphModel::builder(OrdinalScale::new(2, 3).unwrap(), Tree::flat("R", &["A", "B", "C"]))
            .alternative("A", "A1", 1)
            .alternative("B", "B1", 1)
            .alternative("B", "B2", 2)
            .alternative("C", "C1", 1)
            .compat("A1", "B1", 0)
            .compat("A1", "B2", 0)
            .default_compatibility(3)
            .build()
            .unwrap();
        assert!(synthesize_scope(&m, "R", None).unwrap().is_empty());
    }

    fn ime(c: &[u32]) -> IntervalMultisetEstimate {
        IntervalMultisetEstimate::new(c.to_vec()).unwrap()
    }

    #[test]
    fn ime_single_composite() {
        let m = MorphModel::builder(OrdinalScale::new(3, 3).unwrap(), Tree::flat("R", &["A", "B"]))
            .push_alternative(DesignAlternative::new("A1", "A", 1).with_ime(ime(&[1, 0, 0])))
            .push_alternative(DesignAlternative::new("B1", "B", 2).with_ime(ime(&[0, 1, 0])))
            .compat("A1", "B1", 2)
            .build()
            .unwrap();
        let p = synthesize_scope_ime(&m, "R", None).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.entries[0].quality.estimate.counts(), [1, 1, 0]);
        assert_eq!(p.entries[0].quality.w, 2);
    }

    fn m0_with_imes() -> MorphModel {
        let base = m0();
        let mut b = MorphModel::builder(base.scale(), base.tree().clone());
        for da in base.all_alternatives() {
            let e = if ["A1", "B1", "C1"].contains(&da.id.as_str()) {
                ime(&[1, 0, 0])
            } else {
                ime(&[0, 0, 1])
            };
            b = b.push_alternative(da.clone().with_ime(e));
        }
        for (x, y, w) in base.compatibility_entries() {
            b = b.compat(x, y, w);
        }
        b.build().unwrap()
    }

    #[test]
    fn ime_reference_contains_best_clique() {
        let m = m0_with_imes();
        let p = synthesize_scope_ime(&m, "X", Some(1)).unwrap();
        // exhaustive filter over the 8 composites
        let all: Vec<(CompositeSystem, ImeQuality)> = enumerate_scope(&m, "X")
            .unwrap()
            .into_iter()
            .map(|s| {
                let w = quality_vector(&m, &s).unwrap().w;
                let parts: Vec<_> = s
                    .da_ids()
                    .iter()
                    .map(|id| m.alternative(id).unwrap().ime.clone().unwrap())
                    .collect();
                let q = ImeQuality { w, estimate: aggregate_ime(&parts).unwrap() };
                (s, q)
            })
            .filter(|(_, q)| q.w >= 1)
            .collect();
        let mut expected: Vec<_> = all
            .iter()
            .filter(|(_, q)| !all.iter().any(|(_, o)| o.dominance(q) == Dominance::Dominates))
            .map(|(s, _)| s.clone())
            .collect();
        expected.sort();
        let mut got: Vec<_> = p.entries.iter().map(|e| e.system.clone()).collect();
        got.sort();
        assert_eq!(got, expected);
        assert!(got.iter().any(|s| s.da_ids() == ["A1", "B1", "C1"]));
    }

    #[test]
    fn ime_identical_estimates_reduce_to_w() {
        let base = m0();
        let mut b = MorphModel::builder(base.scale(), base.tree().clone());
        for da in base.all_alternatives() {
            b = b.push_alternative(da.clone().with_ime(ime(&[0, 2, 0])));
        }
        for (x, y, w) in base.compatibility_entries() {
            b = b.compat(x, y, w);
        }
        let m = b.build().unwrap();
        let p = synthesize_scope_ime(&m, "X", None).unwrap();
        let max_w = enumerate_scope(&m, "X")
            .unwrap()
            .iter()
            .map(|s| quality_vector(&m, s).unwrap().w)
            .max()
            .unwrap();
        assert!(p.entries.iter().all(|e| e.quality.w == max_w));
        let at_max = enumerate_scope(&m, "X")
            .unwrap()
            .iter()
            .filter(|s| quality_vector(&m, s).unwrap().w == max_w)
            .count();
        assert_eq!(p.len(), at_max);
    }

    #[test]
    fn ime_errors() {
        assert!(matches!(
            synthesize_scope_ime(&m0(), "X", None),
            Err(Error::Argument(_))
        ));
        let m = MorphModel::builder(OrdinalScale::new(3, 3).unwrap(), Tree::flat("R", &["A", "B"]))
            .push_alternative(DesignAlternative::new("A1", "A", 1).with_ime(ime(&[1, 0, 0])))
            .push_alternative(DesignAlternative::new("B1", "B", 2).with_ime(ime(&[0, 2, 0])))
            .build()
            .unwrap();
        assert!(matches!(
            synthesize_scope_ime(&m, "R", None),
            Err(Error::Argument(_))
        ));
    }

    fn entry(m: &MorphModel, ids: &[&str]) -> ParetoEntry {
        let s = CompositeSystem::from_ids(m, "X", ids).unwrap();
        let q = quality_vector(m, &s).unwrap();
        ParetoEntry { system: s, quality: q }
    }

    #[test]
    fn reprioritize_small_pools() {
        let m = m0();
        let one = reprioritize_composites(&[entry(&m, &["A1", "B1", "C1"])], 3);
        assert_eq!(one[0].priority, 1);

        let two = reprioritize_composites(
            &[entry(&m, &["A2", "B1", "C2"]), entry(&m, &["A1", "B1", "C1"])],
            3,
        );
        assert_eq!(two[0].entry.system.da_ids(), ["A1", "B1", "C1"]);
        assert_eq!((two[0].layer, two[1].layer), (1, 2));
        assert_eq!((two[0].priority, two[1].priority), (1, 2));
    }

    #[test]
    fn reprioritize_reference_pool_matches_peeling() {
        let m = m0();
        let pool: Vec<ParetoEntry> = enumerate_scope(&m, "X")
            .unwrap()
            .into_iter()
            .map(|s| {
                let q = quality_vector(&m, &s).unwrap();
                ParetoEntry { system: s, quality: q }
            })
            .collect();
        // brute-force peeling written against dominates_quality
        let mut remaining: Vec<usize> = (0..pool.len()).collect();
        let mut expected = vec![0usize; pool.len()];
        let mut layer = 0;
        while !remaining.is_empty() {
            layer += 1;
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    remaining.iter().all(|&j| {
                        dominates_quality(&pool[j].quality, &pool[i].quality).unwrap()
                            != Dominance::Dominates
                    })
                })
                .collect();
            for &i in &front {
                expected[i] = layer;
            }
            remaining.retain(|i| !front.contains(i));
        }
        let got = reprioritize_composites(&pool, 3);
        assert_eq!(got.len(), 8);
        for r in got {
            let i = pool.iter().position(|e| e.system == r.entry.system).unwrap();
            assert_eq!(r.layer, expected[i]);
            assert_eq!(r.priority, expected[i].min(3) as u32);
        }
    }

    #[test]
    fn bottom_up_on_flat_tree_is_scope_synthesis() {
        let m = m0();
        assert_eq!(
            synthesize_bottom_up(&m, None).unwrap(),
            synthesize_scope(&m, "X", None).unwrap()
        );
    }

    /// R over P(A,B) and Q(C,D).
    pub(crate) fn three_level() -> MorphModel {
        let tree = Tree::new(
            "R",
            vec![
                TreeNode::internal("R", &["P", "Q"]),
                TreeNode::internal("P", &["A", "B"]),
                TreeNode::internal("Q", &["C", "D"]),
                TreeNode::leaf("A"),
                TreeNode::leaf("B"),
                TreeNode::leaf("C"),
                TreeNode::leaf("D"),
            ],
        );
        let mut b = MorphModel::builder(OrdinalScale::new(3, 3).unwrap(), tree)
            .alternative("A", "A1", 1)
            .alternative("A", "A2", 2)
            .alternative("B", "B1", 2)
            .alternative("B", "B2", 1)
            .alternative("C", "C1", 1)
            .alternative("C", "C2", 3)
            .alternative("D", "D1", 2)
            .alternative("D", "D2", 1)
            .compat("A1", "B1", 3)
            .compat("A1", "B2", 1)
            .compat("A2", "B1", 2)
            .compat("A2", "B2", 3)
            .compat("C1", "D1", 2)
            .compat("C1", "D2", 1)
            .compat("C2", "D1", 3)
            .compat("C2", "D2", 3);
        let ps = ["A1*B1", "A1*B2", "A2*B1", "A2*B2"];
        let qs = ["C1*D1", "C1*D2", "C2*D1", "C2*D2"];
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in qs.iter().enumerate() {
                b = b.compat(p, q, ((i * 3 + j * 5) % 4) as u32);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn bottom_up_matches_cross_product_oracle() {
        let m = three_level();
        let got = synthesize_bottom_up(&m, None).unwrap();

        // mid-level priorities by brute-force peeling of each mid pool
        let mid = |leaves: [&str; 2]| -> Vec<(String, u32)> {
            let mut pool = Vec::new();
            for a in m.alternatives(leaves[0]) {
                for b in m.alternatives(leaves[1]) {
                    let w = m.compat(&a.id, &b.id).unwrap();
                    if w >= 1 {
                        let mut counts = vec![0u32; 3];
                        counts[a.priority as usize - 1] += 1;
                        counts[b.priority as usize - 1] += 1;
                        pool.push((format!("{}*{}", a.id, b.id), QualityVector::new(w, counts)));
                    }
                }
            }
            let mut layer_of = vec![0u32; pool.len()];
            let mut remaining: Vec<usize> = (0..pool.len()).collect();
            let mut layer = 0;
            while !remaining.is_empty() {
                layer += 1;
                let front: Vec<usize> = remaining
                    .iter()
                    .copied()
                    .filter(|&i| {
                        !remaining.iter().any(|&j| {
                            dominates_quality(&pool[j].1, &pool[i].1).unwrap() == Dominance::Dominates
                        })
                    })
                    .collect();
                for &i in &front {
                    layer_of[i] = layer.min(3);
                }
                remaining.retain(|i| !front.contains(i));
            }
            pool.into_iter().map(|(id, _)| id).zip(layer_of).collect()
        };
        let p_das = mid(["A", "B"]);
        let q_das = mid(["C", "D"]);
        let mut root = Vec::new();
        for (p, pp) in &p_das {
            for (q, qp) in &q_das {
                let w = m.compat(p, q).unwrap();
                if w >= 1 {
                    let mut counts = vec![0u32; 3];
                    counts[*pp as usize - 1] += 1;
                    counts[*qp as usize - 1] += 1;
                    root.push((vec![p.clone(), q.clone()], QualityVector::new(w, counts)));
                }
            }
        }
        let mut expected: Vec<_> = root
            .iter()
            .filter(|(_, q)| {
                !root
                    .iter()
                    .any(|(_, o)| dominates_quality(o, q).unwrap() == Dominance::Dominates)
            })
            .cloned()
            .collect();
        expected.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(as_sorted(&got), expected);
        assert!(!expected.is_empty());
    }

    #[test]
    fn bottom_up_reports_missing_composite_pairs() {
        let mut m = three_level();
        m.remove_compat("A2*B2", "C2*D2");
        let err = synthesize_bottom_up(&m, None).unwrap_err();
        assert!(err.to_string().contains("A2*B2"), "{err}");
        // top_k = 1 keeps A1*B1 and C2*D2 (or better), so the removed pair is never needed
        assert!(synthesize_bottom_up(&m, Some(1)).is_ok());
    }

    #[test]
    fn bottom_up_with_forced_mid_levels() {
        // each mid node has exactly one feasible composite
        let mut m = three_level();
        for (a, b) in [("A1", "B2"), ("A2", "B1"), ("A2", "B2")] {
            m.set_compat(a, b, 0);
        }
        for (a, b) in [("C1", "D2"), ("C2", "D1"), ("C2", "D2")] {
            m.set_compat(a, b, 0);
        }
        m.set_compat("A1*B1", "C1*D1", 2);
        let got = synthesize_bottom_up(&m, None).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got.entries[0].system.da_ids(), ["A1*B1", "C1*D1"]);
        // both forced composites sit alone in layer 1
        assert_eq!(got.entries[0].quality, QualityVector::new(2, vec![2, 0, 0]));
    }
}
