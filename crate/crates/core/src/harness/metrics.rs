//! Success rate, SPL and the error breakdown over a set of episodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classify::ErrorClass;
use super::episode::EpisodeResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub episodes: usize,
    /// Percent.
    pub sr: f64,
    /// Percent.
    pub spl: f64,
    /// Percent of all episodes per failure class.
    pub errors: BTreeMap<ErrorClass, f64>,
    /// Mean robot-to-chosen-frontier distance over all decisions, meters.
    pub mean_frontier_distance: Option<f64>,
}

/// `S·l / max(p, l)` for one episode; a success with `l = p = 0` counts 1.
pub fn spl_term(success: bool, shortest: f64, taken: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = taken.max(shortest);
    if denom <= 0.0 {
        1.0
    } else {
        shortest / denom
    }
}

/// Returns `None` for an empty result set.
pub fn compute_metrics(results: &[EpisodeResult]) -> Option<RunReport> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let sr = results.iter().filter(|r| r.success).count() as f64 / n * 100.0;
    let spl = results
        .iter()
        .map(|r| spl_term(r.success, r.shortest_path_length, r.path_length))
        .sum::<f64>()
        / n
        * 100.0;
    let mut errors = BTreeMap::new();
    for class in [ErrorClass::Detection, ErrorClass::Planning, ErrorClass::Exploration] {
        let k = results.iter().filter(|r| r.error_class == class).count();
        errors.insert(class, k as f64 / n * 100.0);
    }
    let (sum, count) = results.iter().fold((0.0, 0usize), |(s, c), r| {
        (s + r.frontier_distance_sum, c + r.decisions)
    });
    Some(RunReport {
        episodes: results.len(),
        sr,
        spl,
        errors,
        mean_frontier_distance: (count > 0).then(|| sum / count as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::classify::StopReason;

    fn result(success: bool, l: f64, p: f64) -> EpisodeResult {
        EpisodeResult {
            success,
            steps: 10,
            path_length: p,
            shortest_path_length: l,
            stop_reason: if success {
                StopReason::StoppedNearTarget
            } else {
                StopReason::BudgetExhausted
            },
            error_class: if success {
                ErrorClass::None
            } else {
                ErrorClass::Exploration
            },
            decisions: 0,
            frontier_distance_sum: 0.0,
        }
    }

    #[test]
    fn optimal_path() {
        let r = compute_metrics(&[result(true, 5.0, 5.0)]).unwrap();
        assert_eq!((r.sr, r.spl), (100.0, 100.0));
    }

    #[test]
    fn double_length_path() {
        let r = compute_metrics(&[result(true, 5.0, 10.0)]).unwrap();
        assert_eq!((r.sr, r.spl), (100.0, 50.0));
    }

    #[test]
    fn failure() {
        let r = compute_metrics(&[result(false, 5.0, 3.0)]).unwrap();
        assert_eq!((r.sr, r.spl), (0.0, 0.0));
        assert_eq!(r.errors[&ErrorClass::Exploration], 100.0);
    }

    #[test]
    fn empty() {
        assert!(compute_metrics(&[]).is_none());
    }
}
