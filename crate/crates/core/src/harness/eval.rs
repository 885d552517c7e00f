//! Batch evaluation over scenarios and policies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::Policy;
use super::episode::{EpisodeResult, EpisodeSpec, HarnessError, Runner};
use super::metrics::{compute_metrics, RunReport};
use crate::consensus::DecisionAudit;
use crate::world::Scenario;

/// Seed shared by every policy for one `(scenario, episode)` pair.
pub fn episode_seed(base: u64, scenario: usize, episode: usize) -> u64 {
    let a = super::splitmix64(base ^ 0x9e37_79b9_7f4a_7c15);
    let b = super::splitmix64(a ^ scenario as u64);
    super::splitmix64(b ^ (episode as u64).rotate_left(32))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    pub parallel: bool,
    pub keep_traces: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpisodeRecord {
    pub scenario: String,
    pub policy: Policy,
    pub episode: usize,
    pub seed: u64,
    pub result: EpisodeResult,
    #[serde(skip)]
    pub audits: Vec<DecisionAudit>,
    #[serde(skip)]
    pub trace_jsonl: Option<String>,
}

#[derive(Clone, Debug)]
pub struct EvalOutput {
    /// In job order: scenario, then policy, then episode.
    pub records: Vec<EpisodeRecord>,
    pub reports: Vec<(Policy, RunReport)>,
}

#[derive(Serialize)]
struct AuditLine<'a> {
    scenario: &'a str,
    policy: &'a Policy,
    episode: usize,
    seed: u64,
    #[serde(flatten)]
    audit: &'a DecisionAudit,
}

impl EvalOutput {
    pub fn report_for(&self, policy: &Policy) -> Option<&RunReport> {
        self.reports.iter().find(|(p, _)| p == policy).map(|(_, r)| r)
    }

    /// One summary row per policy.
    pub fn report_csv(&self) -> String {
        let mut s = String::from(
            "policy,episodes,sr,spl,detection,planning,exploration,mean_frontier_distance\n",
        );
        for (p, r) in &self.reports {
            let e = |c| r.errors.get(&c).copied().unwrap_or(0.0);
            use super::classify::ErrorClass::*;
            let _ = writeln!(
                s,
                "{p},{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
                r.episodes,
                r.sr,
                r.spl,
                e(Detection),
                e(Planning),
                e(Exploration),
                r.mean_frontier_distance
                    .map(|d| format!("{d:.4}"))
                    .unwrap_or_default()
            );
        }
        s
    }

    /// One row per episode.
    pub fn episodes_csv(&self) -> String {
        let mut s = String::from(
            "scenario,policy,episode,seed,success,steps,path_length,shortest_path_length,stop_reason,error_class,decisions\n",
        );
        for r in &self.records {
            let x = &r.result;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.4},{:.4},{},{},{}",
                r.scenario,
                r.policy,
                r.episode,
                r.seed,
                x.success,
                x.steps,
                x.path_length,
                x.shortest_path_length,
                serde_json::to_value(x.stop_reason).unwrap().as_str().unwrap(),
                serde_json::to_value(x.error_class).unwrap().as_str().unwrap(),
                x.decisions
            );
        }
        s
    }

    pub fn audit_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            for a in &r.audits {
                let line = AuditLine {
                    scenario: &r.scenario,
                    policy: &r.policy,
                    episode: r.episode,
                    seed: r.seed,
                    audit: a,
                };
                s.push_str(&serde_json::to_string(&line).expect("audit serializes"));
                s.push('\n');
            }
        }
        s
    }
}

pub fn evaluate(
    runner: &Runner,
    scenarios: &[(String, Scenario)],
    policies: &[Policy],
    episodes_per_scenario: usize,
    base_seed: u64,
    opts: EvalOptions,
) -> Result<EvalOutput, HarnessError> {
    let mut jobs = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for &p in policies {
            for e in 0..episodes_per_scenario {
                jobs.push((si, p, e));
            }
        }
    }
    let run = |&(si, policy, e): &(usize, Policy, usize)| -> Result<EpisodeRecord, HarnessError> {
        let (name, sc) = &scenarios[si];
        let seed = episode_seed(base_seed, si, e);
        let spec = EpisodeSpec::for_scenario(sc, runner.config(), seed);
        let out = runner.run_episode(sc, &spec, policy)?;
        log::debug!("{name} {policy} #{e}: {:?}", out.result.stop_reason);
        Ok(EpisodeRecord {
            scenario: name.clone(),
            policy,
            episode: e,
            seed,
            audits: out.audits().cloned().collect(),
            trace_jsonl: opts.keep_traces.then(|| out.trace_jsonl()),
            result: out.result,
        })
    };
    let records: Vec<EpisodeRecord> = if opts.parallel {
        jobs.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_, _>>()?
    };

    let mut by_policy: BTreeMap<usize, Vec<EpisodeResult>> = BTreeMap::new();
    for r in &records {
        let idx = policies.iter().position(|p| *p == r.policy).expect("known policy");
        by_policy.entry(idx).or_default().push(r.result.clone());
    }
    let reports = by_policy
        .into_iter()
        .filter_map(|(i, rs)| compute_metrics(&rs).map(|r| (policies[i], r)))
        .collect();
    Ok(EvalOutput { records, reports })
}
