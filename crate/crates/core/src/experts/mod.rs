//! Frontier-recommending experts.
//!
//! Three rule-based experts read the semantic context of each frontier: the
//! object expert scores nearby objects, the room expert scores the frontier's
//! room label, and the scene-layout expert blends both with local object
//! density. A noisy oracle with a tunable hit rate and an HTTP adapter for
//! external recommenders implement the same [`FrontierExpert`] trait.

mod affinity;
mod http;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ConfigError};
use crate::mapping::{Frontier, FrontierContext, UNKNOWN_ROOM};

pub use affinity::AffinityTable;
pub use http::{http_expert_recommend, HttpExpert, HttpExpertRequest, HttpFrontier};

/// One expert's (possibly empty) set of endorsed frontier ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertRecommendation {
    pub expert: String,
    pub frontier_ids: BTreeSet<usize>,
    /// Set when the expert failed and the empty set is a stand-in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ExpertRecommendation {
    pub fn new(expert: impl Into<String>, frontier_ids: BTreeSet<usize>) -> Self {
        Self {
            expert: expert.into(),
            frontier_ids,
            failure: None,
        }
    }

    pub fn failed(expert: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            expert: expert.into(),
            frontier_ids: BTreeSet::new(),
            failure: Some(reason.into()),
        }
    }
}

/// Score threshold and cap shared by the rule-based experts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub threshold: f64,
    pub top_k: usize,
}

impl Default for Selection {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            top_k: 3,
        }
    }
}

/// Keeps ids scoring at least `threshold`, best first, at most `top_k`.
/// Equal scores prefer the smaller id.
fn select(scores: &[(usize, f64)], sel: Selection) -> BTreeSet<usize> {
    let mut passing: Vec<(usize, f64)> = scores
        .iter()
        .copied()
        .filter(|&(_, s)| s >= sel.threshold)
        .collect();
    passing.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    passing.into_iter().take(sel.top_k).map(|(id, _)| id).collect()
}

pub fn o2f_score(table: &AffinityTable, target: &str, ctx: &FrontierContext) -> f64 {
    ctx.nearby_objects
        .iter()
        .map(|(obj, _)| table.object_affinity(obj, target))
        .fold(0.0, f64::max)
}

pub fn r2f_score(table: &AffinityTable, target: &str, ctx: &FrontierContext) -> f64 {
    if ctx.room_label == UNKNOWN_ROOM {
        table.default_score()
    } else {
        table.room_affinity(&ctx.room_label, target)
    }
}

pub fn o2f_recommend(
    table: &AffinityTable,
    target: &str,
    contexts: &[FrontierContext],
    sel: Selection,
) -> ExpertRecommendation {
    let scores: Vec<_> = contexts
        .iter()
        .map(|c| (c.frontier_id, o2f_score(table, target, c)))
        .collect();
    ExpertRecommendation::new("o2f", select(&scores, sel))
}

pub fn r2f_recommend(
    table: &AffinityTable,
    target: &str,
    contexts: &[FrontierContext],
    sel: Selection,
) -> ExpertRecommendation {
    let scores: Vec<_> = contexts
        .iter()
        .map(|c| (c.frontier_id, r2f_score(table, target, c)))
        .collect();
    ExpertRecommendation::new("r2f", select(&scores, sel))
}

/// Blend weights for the scene-layout expert. They must sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SleWeights {
    w_obj: f64,
    w_room: f64,
    w_density: f64,
}

impl SleWeights {
    pub fn new(w_obj: f64, w_room: f64, w_density: f64) -> Result<Self, ConfigError> {
        for (name, w) in [("w_obj", w_obj), ("w_room", w_room), ("w_density", w_density)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(ConfigError::new(
                    format!("experts.sle_weights.{name}"),
                    format!("{w} is outside [0, 1]"),
                ));
            }
        }
        let sum = w_obj + w_room + w_density;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::new(
                "experts.sle_weights",
                format!("weights sum to {sum}, expected 1"),
            ));
        }
        Ok(Self {
            w_obj,
            w_room,
            w_density,
        })
    }
}

impl Default for SleWeights {
    fn default() -> Self {
        Self {
            w_obj: 0.4,
            w_room: 0.4,
            w_density: 0.2,
        }
    }
}

impl TryFrom<[f64; 3]> for SleWeights {
    type Error = ConfigError;

    fn try_from([a, b, c]: [f64; 3]) -> Result<Self, ConfigError> {
        Self::new(a, b, c)
    }
}

impl From<SleWeights> for [f64; 3] {
    fn from(w: SleWeights) -> Self {
        [w.w_obj, w.w_room, w.w_density]
    }
}

pub fn sle_score(
    table: &AffinityTable,
    target: &str,
    ctx: &FrontierContext,
    w: SleWeights,
) -> f64 {
    w.w_obj * o2f_score(table, target, ctx)
        + w.w_room * r2f_score(table, target, ctx)
        + w.w_density * ctx.local_density
}

pub fn sle_recommend(
    table: &AffinityTable,
    target: &str,
    contexts: &[FrontierContext],
    weights: SleWeights,
    sel: Selection,
) -> ExpertRecommendation {
    let scores: Vec<_> = contexts
        .iter()
        .map(|c| (c.frontier_id, sle_score(table, target, c, weights)))
        .collect();
    ExpertRecommendation::new("sle", select(&scores, sel))
}

/// The frontier whose true distance to the target is smallest (ties: smaller
/// id). Infinite distances never win.
pub fn best_frontier(true_distances: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&id, &d) in true_distances {
        if d.is_finite() && best.map_or(true, |(_, b)| d < b) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// With probability `p` endorses the truly best frontier, otherwise one of
/// the others uniformly at random. `true_distances` is keyed by frontier id.
pub fn noisy_oracle_recommend<R: Rng + ?Sized>(
    true_distances: &BTreeMap<usize, f64>,
    p: f64,
    rng: &mut R,
) -> ExpertRecommendation {
    let Some(best) = best_frontier(true_distances).or_else(|| true_distances.keys().next().copied())
    else {
        return ExpertRecommendation::new("oracle", BTreeSet::new());
    };
    let hit = rng.gen::<f64>() < p;
    let others: Vec<usize> = true_distances.keys().copied().filter(|&id| id != best).collect();
    let pick = if hit || others.is_empty() {
        best
    } else {
        others[rng.gen_range(0..others.len())]
    };
    ExpertRecommendation::new("oracle", BTreeSet::from([pick]))
}

/// Everything an expert may look at when ranking frontiers.
#[derive(Clone, Copy, Debug)]
pub struct ExpertQuery<'a> {
    pub target: &'a str,
    pub frontiers: &'a [Frontier],
    pub contexts: &'a [FrontierContext],
    /// Ground-truth frontier-to-target distances; only the oracle reads them.
    pub true_distances: Option<&'a BTreeMap<usize, f64>>,
    pub explored_fraction: f64,
}

pub trait FrontierExpert: Send + Sync {
    fn name(&self) -> &str;

    fn recommend(&self, query: &ExpertQuery<'_>, rng: &mut dyn RngCore) -> ExpertRecommendation;
}

/// Object-to-frontier expert.
#[derive(Clone, Debug)]
pub struct ObjectExpert {
    pub table: std::sync::Arc<AffinityTable>,
    pub selection: Selection,
}

impl FrontierExpert for ObjectExpert {
    fn name(&self) -> &str {
        "o2f"
    }

    fn recommend(&self, q: &ExpertQuery<'_>, _rng: &mut dyn RngCore) -> ExpertRecommendation {
        o2f_recommend(&self.table, q.target, q.contexts, self.selection)
    }
}

/// Room-to-frontier expert.
#[derive(Clone, Debug)]
pub struct RoomExpert {
    pub table: std::sync::Arc<AffinityTable>,
    pub selection: Selection,
}

impl FrontierExpert for RoomExpert {
    fn name(&self) -> &str {
        "r2f"
    }

    fn recommend(&self, q: &ExpertQuery<'_>, _rng: &mut dyn RngCore) -> ExpertRecommendation {
        r2f_recommend(&self.table, q.target, q.contexts, self.selection)
    }
}

/// Scene-layout expert.
#[derive(Clone, Debug)]
pub struct LayoutExpert {
    pub table: std::sync::Arc<AffinityTable>,
    pub weights: SleWeights,
    pub selection: Selection,
}

impl FrontierExpert for LayoutExpert {
    fn name(&self) -> &str {
        "sle"
    }

    fn recommend(&self, q: &ExpertQuery<'_>, _rng: &mut dyn RngCore) -> ExpertRecommendation {
        sle_recommend(&self.table, q.target, q.contexts, self.weights, self.selection)
    }
}

#[derive(Clone, Debug)]
pub struct NoisyOracleExpert {
    name: String,
    p: f64,
}

impl NoisyOracleExpert {
    pub fn new(name: impl Into<String>, p: f64) -> Result<Self, ConfigError> {
        check_probability("experts.oracle_p", p)?;
        Ok(Self {
            name: name.into(),
            p,
        })
    }
}

impl FrontierExpert for NoisyOracleExpert {
    fn name(&self) -> &str {
        &self.name
    }

    fn recommend(&self, q: &ExpertQuery<'_>, rng: &mut dyn RngCore) -> ExpertRecommendation {
        let Some(truth) = q.true_distances else {
            return ExpertRecommendation::failed(&self.name, "no ground-truth distances");
        };
        let mut rec = noisy_oracle_recommend(truth, self.p, rng);
        rec.expert = self.name.clone();
        rec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(id: usize, objects: &[&str], room: &str, density: f64) -> FrontierContext {
        FrontierContext {
            frontier_id: id,
            nearby_objects: objects.iter().map(|o| (o.to_string(), 1)).collect(),
            room_label: room.into(),
            local_density: density,
        }
    }

    fn table() -> AffinityTable {
        AffinityTable::from_json_str(
            r#"{"default_score": 0.1,
                "objects": {"desk": {"chair": 0.8, "book": 0.7, "toilet": 0.05}},
                "rooms": {"desk": {"study": 0.9, "bathroom": 0.05}}}"#,
        )
        .unwrap()
    }

    fn ids(r: &ExpertRecommendation) -> Vec<usize> {
        r.frontier_ids.iter().copied().collect()
    }

    #[test]
    fn o2f_cases() {
        let t = table();
        let sel = Selection::default();
        let cs = [ctx(0, &["chair", "book"], "x", 0.0), ctx(1, &["toilet"], "x", 0.0)];
        assert_eq!(ids(&o2f_recommend(&t, "desk", &cs, sel)), vec![0]);

        let empty = [ctx(0, &[], "x", 0.0), ctx(1, &[], "x", 0.0)];
        assert!(o2f_recommend(&t, "desk", &empty, sel).frontier_ids.is_empty());

        let tied = [ctx(4, &["chair"], "x", 0.0), ctx(2, &["chair"], "x", 0.0), ctx(7, &["chair"], "x", 0.0)];
        let sel2 = Selection { threshold: 0.5, top_k: 2 };
        assert_eq!(ids(&o2f_recommend(&t, "desk", &tied, sel2)), vec![2, 4]);
    }

    #[test]
    fn r2f_cases() {
        let t = table();
        let sel = Selection::default();
        let cs = [ctx(0, &[], "study", 0.0), ctx(1, &[], "bathroom", 0.0)];
        assert_eq!(ids(&r2f_recommend(&t, "desk", &cs, sel)), vec![0]);

        let unk = [ctx(0, &[], UNKNOWN_ROOM, 0.0), ctx(1, &[], UNKNOWN_ROOM, 0.0)];
        assert!(r2f_recommend(&t, "desk", &unk, sel).frontier_ids.is_empty());

        let all = Selection { threshold: 0.0, top_k: 3 };
        let four: Vec<_> = (0..4).map(|i| ctx(i, &[], "bathroom", 0.0)).collect();
        assert_eq!(ids(&r2f_recommend(&t, "desk", &four, all)), vec![0, 1, 2]);
    }

    #[test]
    fn sle_degenerate_weights_match_single_experts() {
        let t = table();
        let sel = Selection::default();
        let cs = [
            ctx(0, &["chair"], "bathroom", 0.3),
            ctx(1, &["toilet"], "study", 0.9),
            ctx(2, &["book"], UNKNOWN_ROOM, 0.1),
        ];
        let obj = SleWeights::new(1.0, 0.0, 0.0).unwrap();
        let room = SleWeights::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(
            sle_recommend(&t, "desk", &cs, obj, sel).frontier_ids,
            o2f_recommend(&t, "desk", &cs, sel).frontier_ids
        );
        assert_eq!(
            sle_recommend(&t, "desk", &cs, room, sel).frontier_ids,
            r2f_recommend(&t, "desk", &cs, sel).frontier_ids
        );
    }

    #[test]
    fn sle_blended_score() {
        let t = table();
        let c = ctx(0, &["chair"], "study", 0.5);
        let w = SleWeights::new(0.4, 0.4, 0.2).unwrap();
        assert!((sle_score(&t, "desk", &c, w) - 0.78).abs() < 1e-12);
    }

    #[test]
    fn sle_weights_must_sum_to_one() {
        assert!(SleWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(serde_json::from_str::<SleWeights>("[0.2, 0.2, 0.2]").is_err());
        assert!(serde_json::from_str::<SleWeights>("[0.2, 0.3, 0.5]").is_ok());
    }

    #[test]
    fn oracle_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = BTreeMap::from([(0, 5.0), (1, 2.0)]);
        for _ in 0..100 {
            assert_eq!(ids(&noisy_oracle_recommend(&d, 1.0, &mut rng)), vec![1]);
            assert_eq!(ids(&noisy_oracle_recommend(&d, 0.0, &mut rng)), vec![0]);
        }
    }
}
