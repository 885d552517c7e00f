//! Episode execution, scenario generation and batch evaluation.

mod classify;
mod config;
mod episode;
mod eval;
mod metrics;
pub mod scenegen;

pub use classify::{classify_error, ErrorClass, FailureEvidence, StopReason};
pub use config::{
    CdmConfig, Config, ExpertBackend, ExpertConfig, ExpertPanel, ExpertSlot, HarnessConfig, Policy,
};
pub use episode::{
    panel_sets, trace_to_jsonl, EpisodeOutput, EpisodeResult, EpisodeSpec, GoalRecord,
    HarnessError, Runner, TraceRecord,
};
pub use eval::{episode_seed, evaluate, EpisodeRecord, EvalOptions, EvalOutput};
pub use metrics::{compute_metrics, spl_term, RunReport};

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
