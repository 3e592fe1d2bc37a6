//! Index-based view of one synthesis scope and the branch-and-bound search
//! shared by the ordinal and interval-multiset regimes.

use rayon::prelude::*;

use crate::model::{CompositeSystem, MorphModel};

pub(crate) struct ScopeAlt {
    pub id: String,
    /// Contribution to the summed count vector (one-hot priority or estimate counts).
    pub profile: Vec<u32>,
}

pub(crate) struct ScopeView {
    pub scope: String,
    pub components: Vec<String>,
    pub alts: Vec<Vec<ScopeAlt>>,
    pub compat_max: u32,
    levels: usize,
    /// `pairs[i * n + j]` (i < j) holds the row-major compatibility matrix
    /// between alternatives of components i and j.
    pairs: Vec<Vec<u32>>,
}

/// Raw quality of a (partial) selection: minimum compatibility and summed
/// count vector, compared by w and cumulative counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawQuality {
    pub w: u32,
    pub counts: Vec<u32>,
}

impl RawQuality {
    /// True when `self` is at least as good everywhere and better somewhere.
    pub fn strictly_dominates(&self, other: &Self) -> bool {
        if self.w < other.w {
            return false;
        }
        let mut strict = self.w > other.w;
        let (mut a, mut b) = (0u32, 0u32);
        for (x, y) in self.counts.iter().zip(&other.counts) {
            a += x;
            b += y;
            if a < b {
                return false;
            }
            strict |= a > b;
        }
        strict
    }
}

impl ScopeView {
    pub fn new(
        model: &MorphModel,
        scope: &str,
        components: &[String],
        profile: impl Fn(&crate::model::DesignAlternative) -> Vec<u32>,
    ) -> Self {
        let alts: Vec<Vec<ScopeAlt>> = components
            .iter()
            .map(|c| {
                model
                    .alternatives(c)
                    .iter()
                    .map(|da| ScopeAlt {
                        id: da.id.clone(),
                        profile: profile(da),
                    })
                    .collect()
            })
            .collect();
        let n = components.len();
        let mut pairs = vec![Vec::new(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let mut m = Vec::with_capacity(alts[i].len() * alts[j].len());
                for a in &alts[i] {
                    for b in &alts[j] {
                        m.push(model.compat_or_default(&a.id, &b.id));
                    }
                }
                pairs[i * n + j] = m;
            }
        }
        Self {
            scope: scope.to_string(),
            components: components.to_vec(),
            alts,
            compat_max: model.scale().compat_max,
            levels: model.scale().levels as usize,
            pairs,
        }
    }

    fn compat(&self, i: usize, ai: usize, j: usize, aj: usize) -> u32 {
        let n = self.components.len();
        let (i, ai, j, aj) = if i < j { (i, ai, j, aj) } else { (j, aj, i, ai) };
        self.pairs[i * n + j][ai * self.alts[j].len() + aj]
    }

    pub fn composite(&self, picks: &[usize]) -> CompositeSystem {
        CompositeSystem::new(
            self.scope.clone(),
            picks
                .iter()
                .enumerate()
                .map(|(c, &a)| (self.components[c].clone(), self.alts[c][a].id.clone()))
                .collect(),
        )
    }

    pub fn raw_quality(&self, picks: &[usize]) -> RawQuality {
        let mut w = self.compat_max;
        let mut counts = vec![0u32; self.levels];
        for (i, &ai) in picks.iter().enumerate() {
            for (j, &aj) in picks.iter().enumerate().skip(i + 1) {
                w = w.min(self.compat(i, ai, j, aj));
            }
            for (acc, x) in counts.iter_mut().zip(&self.alts[i][ai].profile) {
                *acc += x;
            }
        }
        RawQuality { w, counts }
    }

    /// Every selection in odometer order (last component varies fastest).
    pub fn all_picks(&self) -> Vec<Vec<usize>> {
        if self.alts.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut picks = vec![0usize; self.alts.len()];
        loop {
            out.push(picks.clone());
            let mut k = picks.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                picks[k] += 1;
                if picks[k] < self.alts[k].len() {
                    break;
                }
                picks[k] = 0;
            }
        }
    }

    /// Non-dominated selections with w >= `min_w`. Branches on the first
    /// component run in parallel with private archives; the union is
    /// filtered again, so the result does not depend on scheduling.
    pub fn pareto_search(&self, min_w: u32) -> Vec<(Vec<usize>, RawQuality)> {
        let n = self.components.len();
        if n == 0 || self.alts.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        // optimistic weight still to be placed after depth d
        let mut rest = vec![0u32; n + 1];
        for d in (0..n).rev() {
            let heaviest = self.alts[d]
                .iter()
                .map(|a| a.profile.iter().sum::<u32>())
                .max()
                .unwrap_or(0);
            rest[d] = rest[d + 1] + heaviest;
        }
        let candidates: Vec<(Vec<usize>, RawQuality)> = (0..self.alts[0].len())
            .into_par_iter()
            .map(|first| {
                let mut search = Search {
                    view: self,
                    min_w,
                    rest: &rest,
                    picks: vec![first],
                    archive: Vec::new(),
                };
                let counts = self.alts[0][first].profile.clone();
                search.descend(self.compat_max, counts);
                search.archive
            })
            .flatten()
            .collect();
        filter_nondominated(candidates)
    }
}

pub(crate) fn filter_nondominated(
    candidates: Vec<(Vec<usize>, RawQuality)>,
) -> Vec<(Vec<usize>, RawQuality)> {
    let keep: Vec<bool> = candidates
        .iter()
        .map(|(_, q)| !candidates.iter().any(|(_, o)| o.strictly_dominates(q)))
        .collect();
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

struct Search<'a> {
    view: &'a ScopeView,
    min_w: u32,
    rest: &'a [u32],
    picks: Vec<usize>,
    archive: Vec<(Vec<usize>, RawQuality)>,
}

impl Search<'_> {
    /// `w` and `counts` describe the current partial selection `picks`.
    fn descend(&mut self, w: u32, counts: Vec<u32>) {
        let d = self.picks.len();
        let n = self.view.components.len();
        if w < self.min_w {
            return;
        }
        if d == n {
            self.offer(RawQuality { w, counts });
            return;
        }
        for a in 0..self.view.alts[d].len() {
            let mut nw = w;
            for (i, &ai) in self.picks.iter().enumerate() {
                nw = nw.min(self.view.compat(i, ai, d, a));
            }
            if nw < self.min_w {
                continue;
            }
            let mut next = counts.clone();
            for (acc, x) in next.iter_mut().zip(&self.view.alts[d][a].profile) {
                *acc += x;
            }
            let mut optimistic = next.clone();
            if let Some(best) = optimistic.first_mut() {
                *best += self.rest[d + 1];
            }
            let bound = RawQuality {
                w: nw,
                counts: optimistic,
            };
            if self.archive.iter().any(|(_, q)| q.strictly_dominates(&bound)) {
                continue;
            }
            self.picks.push(a);
            self.descend(nw, next);
            self.picks.pop();
        }
    }

    fn offer(&mut self, q: RawQuality) {
        if self.archive.iter().any(|(_, o)| o.strictly_dominates(&q)) {
            return;
        }
        self.archive.retain(|(_, o)| !q.strictly_dominates(o));
        self.archive.push((self.picks.clone(), q));
    }
}
