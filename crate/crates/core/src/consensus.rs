//! Consensus frontier selection over three expert recommendations, plus the
//! single-expert majority-vote and closest-frontier baselines.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type FrontierSet = BTreeSet<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Every expert endorsed the consensus set.
    Unanimous,
    /// No unanimous frontier, but at least one pair of experts agreed.
    Partial,
    /// No agreement at all; the closest candidate wins.
    Fallback,
}

/// No candidate frontier is left to choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("exploration exhausted: no candidate frontiers")]
pub struct ExplorationExhausted;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusOutcome {
    pub tier: Tier,
    pub consensus_set: FrontierSet,
    pub chosen: usize,
    pub distances_used: BTreeMap<usize, f64>,
}

/// Intersection of all three sets if nonempty, else the union of pairwise
/// intersections if nonempty, else `Fallback` with an empty set.
pub fn find_consensus(s1: &FrontierSet, s2: &FrontierSet, s3: &FrontierSet) -> (Tier, FrontierSet) {
    let s12: FrontierSet = s1.intersection(s2).copied().collect();
    let unanimous: FrontierSet = s12.intersection(s3).copied().collect();
    if !unanimous.is_empty() {
        return (Tier::Unanimous, unanimous);
    }
    let mut partial = s12;
    partial.extend(s1.intersection(s3));
    partial.extend(s2.intersection(s3));
    if !partial.is_empty() {
        return (Tier::Partial, partial);
    }
    (Tier::Fallback, FrontierSet::new())
}

/// Nearest member of `pool` by `distances` (ties: smaller id).
fn nearest(
    pool: impl IntoIterator<Item = usize>,
    distances: &BTreeMap<usize, f64>,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for id in pool {
        let d = distances.get(&id).copied().unwrap_or(f64::INFINITY);
        let better = match best {
            None => true,
            Some((bid, bd)) => d < bd || (d == bd && id < bid),
        };
        if better {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// Nearest frontier inside the consensus set, or over all candidates for the
/// `Fallback` tier.
pub fn select_frontier(
    consensus_set: &FrontierSet,
    tier: Tier,
    candidates: &[usize],
    distances: &BTreeMap<usize, f64>,
) -> Result<usize, ExplorationExhausted> {
    if candidates.is_empty() {
        return Err(ExplorationExhausted);
    }
    let chosen = match tier {
        Tier::Fallback => nearest(candidates.iter().copied(), distances),
        Tier::Unanimous | Tier::Partial => nearest(consensus_set.iter().copied(), distances)
            .or_else(|| nearest(candidates.iter().copied(), distances)),
    };
    chosen.ok_or(ExplorationExhausted)
}

/// Full consensus decision. Expert ids outside `candidates` are ignored.
pub fn decide(
    s1: &FrontierSet,
    s2: &FrontierSet,
    s3: &FrontierSet,
    candidates: &[usize],
    distances: &BTreeMap<usize, f64>,
) -> Result<ConsensusOutcome, ExplorationExhausted> {
    let cand: FrontierSet = candidates.iter().copied().collect();
    let restrict = |s: &FrontierSet| -> FrontierSet { s.intersection(&cand).copied().collect() };
    let (tier, consensus_set) = find_consensus(&restrict(s1), &restrict(s2), &restrict(s3));
    let chosen = select_frontier(&consensus_set, tier, candidates, distances)?;
    let distances_used = candidates
        .iter()
        .filter_map(|id| distances.get(id).map(|d| (*id, *d)))
        .collect();
    Ok(ConsensusOutcome {
        tier,
        consensus_set,
        chosen,
        distances_used,
    })
}

/// Plurality over repeated samples of one expert. Frequency ties go to the
/// nearer frontier, then the smaller id; all-empty samples fall back to the
/// closest candidate.
pub fn majority_from_samples(
    samples: &[FrontierSet],
    candidates: &[usize],
    distances: &BTreeMap<usize, f64>,
) -> Result<usize, ExplorationExhausted> {
    if candidates.is_empty() {
        return Err(ExplorationExhausted);
    }
    let cand: FrontierSet = candidates.iter().copied().collect();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        for id in s.intersection(&cand) {
            *counts.entry(*id).or_insert(0) += 1;
        }
    }
    let Some(&top) = counts.values().max() else {
        return closest_frontier_baseline(candidates, distances);
    };
    let leaders = counts.iter().filter(|(_, &n)| n == top).map(|(id, _)| *id);
    nearest(leaders, distances).ok_or(ExplorationExhausted)
}

/// Draws `k` recommendations via `sample` and takes the plurality.
pub fn majority_vote_baseline(
    mut sample: impl FnMut() -> FrontierSet,
    k: usize,
    candidates: &[usize],
    distances: &BTreeMap<usize, f64>,
) -> Result<(usize, Vec<FrontierSet>), ExplorationExhausted> {
    let samples: Vec<FrontierSet> = (0..k.max(1)).map(|_| sample()).collect();
    let chosen = majority_from_samples(&samples, candidates, distances)?;
    Ok((chosen, samples))
}

pub fn closest_frontier_baseline(
    candidates: &[usize],
    distances: &BTreeMap<usize, f64>,
) -> Result<usize, ExplorationExhausted> {
    nearest(candidates.iter().copied(), distances).ok_or(ExplorationExhausted)
}

/// One global decision, as written to the audit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionAudit {
    pub step: usize,
    pub candidate_ids: Vec<usize>,
    pub s1: Option<FrontierSet>,
    pub s2: Option<FrontierSet>,
    pub s3: Option<FrontierSet>,
    pub tier: Option<Tier>,
    pub consensus_set: Option<FrontierSet>,
    pub distances: BTreeMap<usize, f64>,
    pub chosen: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<FrontierSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expert_failures: Vec<String>,
}
