//! Random instance generators and brute-force oracles written without the
//! library's search code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use morphkit_core::{MorphModel, OrdinalScale, Tree};
use rand::Rng;

pub const LEVELS: u32 = 3;
pub const NU: u32 = 3;

/// Plain description of a flat random instance, kept alongside the model so
/// the oracles never read back through the library.
#[derive(Debug, Clone)]
pub struct Flat {
    pub components: Vec<String>,
    /// per component: (da id, priority)
    pub das: Vec<Vec<(String, u32)>>,
    pub compat: BTreeMap<(String, String), u32>,
}

impl Flat {
    pub fn random(rng: &mut impl Rng, max_leaves: usize, max_das: usize) -> Self {
        let n = rng.gen_range(1..=max_leaves);
        let components: Vec<String> = (0..n).map(|i| format!("K{i}")).collect();
        let das: Vec<Vec<(String, u32)>> = components
            .iter()
            .map(|c| {
                (0..rng.gen_range(1..=max_das))
                    .map(|j| (format!("{c}a{j}"), rng.gen_range(1..=LEVELS)))
                    .collect()
            })
            .collect();
        let mut compat = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                for (a, _) in &das[i] {
                    for (b, _) in &das[j] {
                        // skewed toward feasible values
                        let w = if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..=NU) };
                        compat.insert(key(a, b), w);
                    }
                }
            }
        }
        Self { components, das, compat }
    }

    pub fn model(&self) -> MorphModel {
        let leaves: Vec<&str> = self.components.iter().map(String::as_str).collect();
        let mut b = MorphModel::builder(OrdinalScale::new(LEVELS, NU).unwrap(), Tree::flat("X", &leaves));
        for (c, das) in self.components.iter().zip(&self.das) {
            for (id, p) in das {
                b = b.alternative(c, id, *p);
            }
        }
        for ((a, x), w) in &self.compat {
            b = b.compat(a, x, *w);
        }
        b.build().unwrap()
    }

    pub fn compat(&self, a: &str, b: &str) -> u32 {
        self.compat.get(&key(a, b)).copied().unwrap_or(0)
    }

    /// All selections as index vectors, odometer order.
    pub fn selections(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for das in &self.das {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..das.len()).map(move |i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn ids(&self, sel: &[usize]) -> Vec<String> {
        sel.iter().enumerate().map(|(c, &i)| self.das[c][i].0.clone()).collect()
    }

    pub fn quality(&self, sel: &[usize]) -> (u32, Vec<u32>) {
        let ids = self.ids(sel);
        let mut w = NU;
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                w = w.min(self.compat(&ids[i], &ids[j]));
            }
        }
        let mut counts = vec![0; LEVELS as usize];
        for (c, &i) in sel.iter().enumerate() {
            counts[self.das[c][i].1 as usize - 1] += 1;
        }
        (w, counts)
    }
}

pub fn key(a: &str, b: &str) -> (String, String) {
    if a < b {
        (a.into(), b.into())
    } else {
        (b.into(), a.into())
    }
}

fn prefix_sums(v: &[u32]) -> Vec<u32> {
    v.iter()
        .scan(0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// a weakly better than b in every coordinate and strictly in one.
pub fn strictly_dominates(a: &(u32, Vec<u32>), b: &(u32, Vec<u32>)) -> bool {
    let (ca, cb) = (prefix_sums(&a.1), prefix_sums(&b.1));
    let ge = a.0 >= b.0 && ca.iter().zip(&cb).all(|(x, y)| x >= y);
    ge && (a.0 > b.0 || ca != cb)
}

/// Non-dominated feasible selections (w ≥ min_w), as sorted DA-id lists.
pub fn oracle_pareto(f: &Flat, min_w: u32) -> Vec<(Vec<String>, (u32, Vec<u32>))> {
    let feasible: Vec<(Vec<String>, (u32, Vec<u32>))> = f
        .selections()
        .into_iter()
        .map(|s| (f.ids(&s), f.quality(&s)))
        .filter(|(_, q)| q.0 >= min_w)
        .collect();
    let mut out: Vec<_> = feasible
        .iter()
        .filter(|(_, q)| !feasible.iter().any(|(_, r)| strictly_dominates(r, q)))
        .cloned()
        .collect();
    out.sort();
    out
}

/// Dominance layers over indexed qualities (layer 1 first), by peeling.
pub fn oracle_layers(qs: &[(u32, Vec<u32>)]) -> Vec<usize> {
    let mut layer = vec![0; qs.len()];
    let mut current = 0;
    while layer.contains(&0) {
        current += 1;
        let open: Vec<usize> = (0..qs.len()).filter(|&i| layer[i] == 0).collect();
        let front: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&i| !open.iter().any(|&j| strictly_dominates(&qs[j], &qs[i])))
            .collect();
        for i in front {
            layer[i] = current;
        }
    }
    layer
}
