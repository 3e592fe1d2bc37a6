//! Multiple-choice knapsack: pick one item per group, maximize profit under
//! a budget. Solved exactly by dynamic programming over the integer cost grid.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::MorphModel;

#[derive(Debug, Clone, PartialEq)]
pub struct MckpItem {
    pub id: String,
    pub cost: u64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MckpGroup {
    pub id: String,
    pub items: Vec<MckpItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MckpInstance {
    pub groups: Vec<MckpGroup>,
    pub budget: u64,
}

impl MckpInstance {
    /// One group per leaf under `scope`, items taken from the DAs' cost and
    /// profit. Costs must already be integral.
    pub fn from_model(model: &MorphModel, scope: &str, budget: u64) -> Result<Self> {
        if !model.tree().contains(scope) {
            return Err(Error::Argument(format!("scope `{scope}` not found")));
        }
        let groups = model
            .tree()
            .leaves_under(scope)
            .into_iter()
            .map(|leaf| {
                let items = model
                    .alternatives(&leaf)
                    .iter()
                    .map(|da| {
                        if da.cost.fract() != 0.0 || da.cost < 0.0 {
                            return Err(Error::Argument(format!(
                                "cost {} of `{}` is not a nonnegative integer",
                                da.cost, da.id
                            )));
                        }
                        Ok(MckpItem {
                            id: da.id.clone(),
                            cost: da.cost as u64,
                            profit: da.profit,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MckpGroup { id: leaf, items })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups, budget })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MckpSolution {
    /// (group id, item id) per group, in group order.
    pub selection: Vec<(String, String)>,
    pub profit: f64,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MckpOutcome {
    Optimal(MckpSolution),
    /// Even the cheapest item of every group exceeds the budget.
    Infeasible { min_cost: u64 },
}

#[derive(Clone)]
struct State {
    profit: f64,
    picks: Vec<usize>,
}

fn cmp_ids(inst: &MckpInstance, a: &[usize], b: &[usize]) -> Ordering {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(g, (&x, &y))| inst.groups[g].items[x].id.cmp(&inst.groups[g].items[y].id))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// True when `a` should replace `b` at the same total cost.
fn better(inst: &MckpInstance, a: &State, b: &State) -> bool {
    a.profit > b.profit || (a.profit == b.profit && cmp_ids(inst, &a.picks, &b.picks).is_lt())
}

/// Maximizes total profit; ties go to lower total cost, then to the
/// lexicographically smaller item ids in group order.
pub fn solve_mckp(instance: &MckpInstance) -> Result<MckpOutcome> {
    if let Some(g) = instance.groups.iter().find(|g| g.items.is_empty()) {
        return Err(Error::Argument(format!("group `{}` has no items", g.id)));
    }
    if let Some(item) = instance
        .groups
        .iter()
        .flat_map(|g| &g.items)
        .find(|i| !(i.profit.is_finite() && i.profit >= 0.0))
    {
        return Err(Error::Argument(format!(
            "profit {} of `{}` must be nonnegative",
            item.profit, item.id
        )));
    }
    let min_cost: u64 = instance
        .groups
        .iter()
        .map(|g| g.items.iter().map(|i| i.cost).min().unwrap_or(0))
        .sum();
    if min_cost > instance.budget {
        return Ok(MckpOutcome::Infeasible { min_cost });
    }
    let max_cost: u64 = instance
        .groups
        .iter()
        .map(|g| g.items.iter().map(|i| i.cost).max().unwrap_or(0))
        .sum();
    let cap = instance.budget.min(max_cost) as usize;

    // table[c]: best selection of the groups seen so far with total cost exactly c
    let mut table: Vec<Option<State>> = vec![None; cap + 1];
    table[0] = Some(State {
        profit: 0.0,
        picks: Vec::new(),
    });
    for group in &instance.groups {
        let mut next: Vec<Option<State>> = vec![None; cap + 1];
        for (c, state) in table.iter().enumerate() {
            let Some(state) = state else { continue };
            for (i, item) in group.items.iter().enumerate() {
                let nc = c + item.cost as usize;
                if nc > cap {
                    continue;
                }
                let mut picks = state.picks.clone();
                picks.push(i);
                let cand = State {
                    profit: state.profit + item.profit,
                    picks,
                };
                match &next[nc] {
                    Some(cur) if !better(instance, &cand, cur) => {}
                    _ => next[nc] = Some(cand),
                }
            }
        }
        table = next;
    }

    let mut best: Option<(usize, &State)> = None;
    for (c, state) in table.iter().enumerate() {
        let Some(state) = state else { continue };
        // ascending c: equal profit keeps the cheaper solution already held
        match best {
            Some((_, cur)) if state.profit <= cur.profit => {}
            _ => best = Some((c, state)),
        }
    }
    let (cost, state) = best.expect("cost of cheapest picks fits the budget");
    Ok(MckpOutcome::Optimal(MckpSolution {
        selection: state
            .picks
            .iter()
            .enumerate()
            .map(|(g, &i)| {
                (
                    instance.groups[g].id.clone(),
                    instance.groups[g].items[i].id.clone(),
                )
            })
            .collect(),
        profit: state.profit,
        cost: cost as u64,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(id: &str, items: &[(&str, u64, f64)]) -> MckpGroup {
        MckpGroup {
            id: id.into(),
            items: items
                .iter()
                .map(|&(i, c, p)| MckpItem {
                    id: i.into(),
                    cost: c,
                    profit: p,
                })
                .collect(),
        }
    }

    fn two_groups(budget: u64) -> MckpInstance {
        MckpInstance {
            groups: vec![
                group("A", &[("A1", 2, 3.0), ("A2", 1, 1.0)]),
                group("B", &[("B1", 2, 4.0), ("B2", 1, 2.0)]),
            ],
            budget,
        }
    }

    /// Exhaustive search with the same tie-break, summing in group order.
    fn brute(inst: &MckpInstance) -> Option<(Vec<String>, f64, u64)> {
        let mut best: Option<(Vec<String>, f64, u64)> = None;
        let mut picks = vec![0usize; inst.groups.len()];
        loop {
            let cost: u64 = picks.iter().enumerate().map(|(g, &i)| inst.groups[g].items[i].cost).sum();
            let mut profit = 0.0;
            for (g, &i) in picks.iter().enumerate() {
                profit += inst.groups[g].items[i].profit;
            }
            let ids: Vec<String> = picks
                .iter()
                .enumerate()
                .map(|(g, &i)| inst.groups[g].items[i].id.clone())
                .collect();
            if cost <= inst.budget {
                let replace = match &best {
                    None => true,
                    Some((bi, bp, bc)) => {
                        profit > *bp || (profit == *bp && (cost < *bc || (cost == *bc && ids < *bi)))
                    }
                };
                if replace {
                    best = Some((ids, profit, cost));
                }
            }
            let mut k = picks.len();
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                picks[k] += 1;
                if picks[k] < inst.groups[k].items.len() {
                    break;
                }
                picks[k] = 0;
            }
        }
    }

    #[test]
    fn small_instance_against_brute_force() {
        let inst = two_groups(3);
        // {A2,B1} and {A1,B2} both reach profit 5 at cost 3; ids break the tie
        let (ids, profit, cost) = brute(&inst).unwrap();
        assert_eq!((ids, profit, cost), (vec!["A1".to_string(), "B2".to_string()], 5.0, 3));
        let MckpOutcome::Optimal(sol) = solve_mckp(&inst).unwrap() else {
            panic!("expected a solution")
        };
        assert_eq!(sol.profit, 5.0);
        assert_eq!(sol.cost, 3);
        assert_eq!(
            sol.selection,
            vec![("A".into(), "A1".into()), ("B".into(), "B2".into())]
        );
    }

    #[test]
    fn slack_budget_takes_max_profit_items() {
        let MckpOutcome::Optimal(sol) = solve_mckp(&two_groups(100)).unwrap() else {
            panic!()
        };
        assert_eq!(sol.profit, 7.0);
        assert_eq!(sol.cost, 4);
    }

    #[test]
    fn zero_budget_is_infeasible() {
        assert_eq!(
            solve_mckp(&two_groups(0)).unwrap(),
            MckpOutcome::Infeasible { min_cost: 2 }
        );
    }

    #[test]
    fn ties_prefer_cheaper_then_smaller_ids() {
        let inst = MckpInstance {
            groups: vec![group("A", &[("A2", 1, 2.0), ("A1", 2, 2.0), ("A0", 1, 2.0)])],
            budget: 5,
        };
        let MckpOutcome::Optimal(sol) = solve_mckp(&inst).unwrap() else {
            panic!()
        };
        assert_eq!(sol.selection[0].1, "A0");
        assert_eq!(sol.cost, 1);
    }

    #[test]
    fn empty_group_is_an_error() {
        let inst = MckpInstance {
            groups: vec![group("A", &[])],
            budget: 5,
        };
        assert!(solve_mckp(&inst).is_err());
    }

    #[test]
    fn random_instances_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let groups = (0..rng.gen_range(1..=4))
                .map(|g| {
                    let items: Vec<(String, u64, f64)> = (0..rng.gen_range(1..=3))
                        .map(|i| (format!("G{g}I{i}"), rng.gen_range(0..6), rng.gen_range(0..8) as f64))
                        .collect();
                    MckpGroup {
                        id: format!("G{g}"),
                        items: items
                            .into_iter()
                            .map(|(id, cost, profit)| MckpItem { id, cost, profit })
                            .collect(),
                    }
                })
                .collect();
            let inst = MckpInstance { groups, budget: rng.gen_range(0..15) };
            match (brute(&inst), solve_mckp(&inst).unwrap()) {
                (None, MckpOutcome::Infeasible { .. }) => {}
                (Some((ids, profit, cost)), MckpOutcome::Optimal(sol)) => {
                    assert_eq!(sol.profit, profit);
                    assert_eq!(sol.cost, cost);
                    let got: Vec<String> = sol.selection.into_iter().map(|(_, i)| i).collect();
                    assert_eq!(got, ids);
                }
                (a, b) => panic!("mismatch {a:?} vs {b:?}"),
            }
        }
    }
}
