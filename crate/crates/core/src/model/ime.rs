use crate::error::{Error, Result};
use crate::model::quality::{cumulative, fold_dominance};
use crate::model::Dominance;

/// Interval multiset estimate: `counts[r]` assessment points at scale position
/// `r + 1`, with the occupied positions forming one contiguous interval.
///
/// Aggregation may produce counts whose support has interior gaps; such
/// estimates keep the counts and carry `gap_filled`, meaning the support is
/// read as the full span from the first to the last occupied position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntervalMultisetEstimate {
    counts: Vec<u32>,
    gap_filled: bool,
}

fn support_is_contiguous(counts: &[u32]) -> bool {
    let occupied: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
    match (occupied.first(), occupied.last()) {
        (Some(&lo), Some(&hi)) => hi - lo + 1 == occupied.len(),
        _ => false,
    }
}

impl IntervalMultisetEstimate {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.iter().sum::<u32>() == 0 {
            return Err(Error::Argument(
                "interval multiset estimate needs at least one point".into(),
            ));
        }
        if !support_is_contiguous(&counts) {
            return Err(Error::Argument(format!(
                "interval multiset estimate {counts:?} has non-contiguous support"
            )));
        }
        Ok(Self {
            counts,
            gap_filled: false,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn gap_filled(&self) -> bool {
        self.gap_filled
    }

    /// Inclusive 1-based support interval.
    pub fn support(&self) -> (usize, usize) {
        let lo = self.counts.iter().position(|&c| c > 0).unwrap_or(0);
        let hi = self.counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        (lo + 1, hi + 1)
    }
}

pub fn aggregate_ime(parts: &[IntervalMultisetEstimate]) -> Result<IntervalMultisetEstimate> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Argument("cannot aggregate an empty list of estimates".into()))?;
    let levels = first.levels();
    if let Some(bad) = parts.iter().find(|p| p.levels() != levels) {
        return Err(Error::Argument(format!(
            "estimates use different scales ({levels} vs {} levels)",
            bad.levels()
        )));
    }
    let mut counts = vec![0u32; levels];
    for part in parts {
        for (acc, c) in counts.iter_mut().zip(&part.counts) {
            *acc += c;
        }
    }
    let gap_filled = !support_is_contiguous(&counts);
    Ok(IntervalMultisetEstimate { counts, gap_filled })
}

pub fn compare_ime(a: &IntervalMultisetEstimate, b: &IntervalMultisetEstimate) -> Result<Dominance> {
    if a.levels() != b.levels() || a.total() != b.total() {
        return Err(Error::ComparisonDomain(format!(
            "estimates differ in scale or size ({}/{} vs {}/{})",
            a.levels(),
            a.total(),
            b.levels(),
            b.total()
        )));
    }
    Ok(fold_dominance(
        cumulative(&a.counts).into_iter().zip(cumulative(&b.counts)),
    ))
}
