//! One navigation episode: sense, map, choose a goal, act, repeat.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::{classify_error, ErrorClass, FailureEvidence, StopReason};
use super::config::{Config, ExpertPanel, Policy};
use crate::consensus::{self, DecisionAudit, FrontierSet};
use crate::error::ConfigError;
use crate::experts::{ExpertQuery, ExpertRecommendation, FrontierExpert, NoisyOracleExpert};
use crate::grid::{cell_center, Cell};
use crate::mapping::{extract_frontiers, frontier_context, BeliefMap, Frontier, MapError};
use crate::planner::{
    extract_path, fmm_field, geodesic_distance, next_action, DistanceField, MaskOptions, PlanError,
    TraversalMask,
};
use crate::world::{observe, step, Action, Pose, Scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episode spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// One episode: target, start pose, step budget, success radius and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub target: String,
    pub start: Pose,
    pub max_steps: usize,
    pub success_radius: f64,
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn for_scenario(scenario: &Scenario, cfg: &Config, seed: u64) -> Self {
        Self {
            target: scenario.target.clone(),
            start: scenario.start,
            max_steps: cfg.harness.max_steps,
            success_radius: cfg.harness.success_radius,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    /// Meters actually driven.
    pub path_length: f64,
    /// Ground-truth geodesic meters from the start to the success region.
    pub shortest_path_length: f64,
    pub stop_reason: StopReason,
    pub error_class: ErrorClass,
    /// Number of global frontier decisions.
    pub decisions: usize,
    /// Sum over decisions of the robot-to-chosen-frontier distance.
    pub frontier_distance_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalRecord {
    None,
    Frontier { centroid: (f64, f64), size: usize },
    Target { cells: Vec<Cell> },
}

/// One line of the step trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub pose: Pose,
    pub action: Action,
    pub moved: bool,
    pub goal: GoalRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_audit: Option<DecisionAudit>,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub trace: Vec<TraceRecord>,
}

impl EpisodeOutput {
    pub fn trace_jsonl(&self) -> String {
        trace_to_jsonl(&self.trace)
    }

    pub fn audits(&self) -> impl Iterator<Item = &DecisionAudit> {
        self.trace.iter().filter_map(|r| r.decision_audit.as_ref())
    }
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
enum Goal {
    Frontier(Frontier),
    Target(Vec<Cell>),
}

impl Goal {
    fn record(goal: &Option<Goal>) -> GoalRecord {
        match goal {
            None => GoalRecord::None,
            Some(Goal::Frontier(f)) => GoalRecord::Frontier {
                centroid: f.centroid,
                size: f.size(),
            },
            Some(Goal::Target(cells)) => GoalRecord::Target {
                cells: cells.clone(),
            },
        }
    }
}

enum Decision {
    Chosen(Frontier, DecisionAudit, f64),
    Exhausted,
    Unreachable,
}

/// Runs episodes for one configuration.
#[derive(Clone)]
pub struct Runner {
    cfg: Config,
    panel: ExpertPanel,
}

impl Runner {
    pub fn new(cfg: Config) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let panel = ExpertPanel::from_config(&cfg)?;
        Ok(Self { cfg, panel })
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn run_episode(
        &self,
        scenario: &Scenario,
        spec: &EpisodeSpec,
        policy: Policy,
    ) -> Result<EpisodeOutput, HarnessError> {
        if scenario.env.target_cells(&spec.target).is_empty() {
            return Err(HarnessError::Spec(format!(
                "target {:?} is not in the scenario",
                spec.target
            )));
        }
        if !scenario.env.pose_is_valid(&spec.start) {
            return Err(HarnessError::Spec("start pose is not in free space".into()));
        }
        let oracle = match policy {
            Policy::Oracle { p } => Some(NoisyOracleExpert::new("oracle", p)?),
            _ => None,
        };
        Episode::new(self, scenario, spec, policy, oracle).run()
    }
}

struct Episode<'a> {
    runner: &'a Runner,
    scenario: &'a Scenario,
    spec: &'a EpisodeSpec,
    policy: Policy,
    oracle: Option<NoisyOracleExpert>,
    h: f64,
    true_targets: BTreeSet<Cell>,
    /// Ground-truth distance to the nearest target cell.
    truth_field: DistanceField,
    belief: BeliefMap,
    pose: Pose,
    sensor_rng: ChaCha8Rng,
    expert_rng: ChaCha8Rng,
    /// Frontier cells given up on after a full scan turn.
    scanned: BTreeSet<Cell>,
    /// Frontier cells the planner could not reach.
    unreachable: BTreeSet<Cell>,
    evidence: FailureEvidence,
}

impl<'a> Episode<'a> {
    fn new(
        runner: &'a Runner,
        scenario: &'a Scenario,
        spec: &'a EpisodeSpec,
        policy: Policy,
        oracle: Option<NoisyOracleExpert>,
    ) -> Self {
        let env = &scenario.env;
        let targets = env.target_cells(&spec.target).to_vec();
        let truth_mask = TraversalMask::from_environment(env, false);
        let truth_field = fmm_field(&truth_mask, &targets).expect("targets lie in free space");
        let mut sensor_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        sensor_rng.set_stream(0);
        let mut expert_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        expert_rng.set_stream(1);
        Self {
            runner,
            scenario,
            spec,
            policy,
            oracle,
            h: env.cell_size(),
            true_targets: targets.into_iter().collect(),
            truth_field,
            belief: BeliefMap::new(env.width(), env.height(), env.cell_size()),
            pose: spec.start,
            sensor_rng,
            expert_rng,
            scanned: BTreeSet::new(),
            unreachable: BTreeSet::new(),
            evidence: FailureEvidence::default(),
        }
    }

    fn cfg(&self) -> &Config {
        &self.runner.cfg
    }

    /// Geodesic meters from the start cell to the set of cells within the
    /// success radius of a target.
    fn shortest_path_length(&self) -> f64 {
        let env = &self.scenario.env;
        let r = self.spec.success_radius;
        let region: Vec<Cell> = env
            .terrain()
            .cells()
            .filter(|&c| self.truth_field.value(c) <= r)
            .collect();
        let start = self.spec.start.cell(self.h);
        if region.contains(&start) {
            return 0.0;
        }
        let mask = TraversalMask::from_environment(env, false);
        geodesic_distance(&mask, start, &region).unwrap_or(f64::INFINITY)
    }

    fn agent_cell(&self) -> Cell {
        self.pose.cell(self.h)
    }

    fn mask(&self, unknown_traversable: bool, allow: &[Cell]) -> TraversalMask {
        let mut m = TraversalMask::from_belief(
            &self.belief,
            MaskOptions {
                unknown_traversable,
                inflate: self.cfg().harness.inflate_obstacles,
            },
        );
        m.allow([self.agent_cell()]);
        m.allow(allow.iter().copied());
        m
    }

    fn current_frontiers(&self) -> Vec<Frontier> {
        extract_frontiers(&self.belief, self.cfg().harness.min_frontier_size)
            .into_iter()
            .filter_map(|mut f| {
                f.cells
                    .retain(|c| !self.scanned.contains(c) && !self.unreachable.contains(c));
                (!f.cells.is_empty()).then_some(f)
            })
            .collect()
    }

    /// Whether some current frontier was dropped only because the planner
    /// could not reach it.
    fn frontier_left_unreached(&self) -> bool {
        extract_frontiers(&self.belief, self.cfg().harness.min_frontier_size)
            .iter()
            .flat_map(|f| &f.cells)
            .any(|c| self.unreachable.contains(c))
    }

    fn decide(&mut self, step_idx: usize, frontiers: &[Frontier]) -> Decision {
        if frontiers.is_empty() {
            return Decision::Exhausted;
        }
        let agent = self.agent_cell();
        let mut candidates: Vec<&Frontier> = Vec::new();
        let mut distances = BTreeMap::new();
        for f in frontiers {
            let mask = self.mask(false, &f.cells);
            if let Some(d) = geodesic_distance(&mask, agent, &f.cells) {
                distances.insert(f.id, d);
                candidates.push(f);
            }
        }
        if candidates.is_empty() {
            return Decision::Unreachable;
        }
        let ids: Vec<usize> = candidates.iter().map(|f| f.id).collect();
        let owned: Vec<Frontier> = candidates.iter().map(|f| (*f).clone()).collect();
        let contexts: Vec<_> = owned
            .iter()
            .map(|f| frontier_context(&self.belief, f, self.cfg().harness.context_radius))
            .collect();
        let truth: BTreeMap<usize, f64> = owned
            .iter()
            .map(|f| (f.id, self.truth_field.value(f.anchor_cell(self.h))))
            .collect();
        let query = ExpertQuery {
            target: &self.spec.target,
            frontiers: &owned,
            contexts: &contexts,
            true_distances: Some(&truth),
            explored_fraction: self.belief.known_fraction(),
        };

        let mut audit = DecisionAudit {
            step: step_idx,
            candidate_ids: ids.clone(),
            s1: None,
            s2: None,
            s3: None,
            tier: None,
            consensus_set: None,
            distances: distances.clone(),
            chosen: 0,
            samples: Vec::new(),
            expert_failures: Vec::new(),
        };

        let chosen = match self.policy {
            Policy::Consensus => {
                let recs = query_panel(&self.runner.panel, &query, &mut self.expert_rng);
                audit.expert_failures = recs.iter().filter_map(|r| r.failure.clone()).collect();
                let [s1, s2, s3] = recs.map(|r| r.frontier_ids);
                let out = consensus::decide(&s1, &s2, &s3, &ids, &distances)
                    .expect("candidates are nonempty");
                audit.s1 = Some(s1);
                audit.s2 = Some(s2);
                audit.s3 = Some(s3);
                audit.tier = Some(out.tier);
                audit.consensus_set = Some(out.consensus_set);
                out.chosen
            }
            Policy::Majority { k } => {
                let expert = self.runner.panel.majority_expert().clone();
                let mut seeds = sample_seeds(&mut self.expert_rng, k).into_iter();
                let (chosen, samples) = consensus::majority_vote_baseline(
                    || {
                        let mut r = ChaCha8Rng::seed_from_u64(seeds.next().expect("k seeds"));
                        expert.recommend(&query, &mut r).frontier_ids
                    },
                    k,
                    &ids,
                    &distances,
                )
                .expect("candidates are nonempty");
                audit.samples = samples;
                chosen
            }
            Policy::Oracle { .. } => {
                let expert = self.oracle.as_ref().expect("oracle policy has an oracle");
                let seed = sample_seeds(&mut self.expert_rng, 1)[0];
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let sample = expert.recommend(&query, &mut r).frontier_ids;
                let chosen = consensus::majority_from_samples(
                    std::slice::from_ref(&sample),
                    &ids,
                    &distances,
                )
                .expect("candidates are nonempty");
                audit.samples = vec![sample];
                chosen
            }
            Policy::Closest => consensus::closest_frontier_baseline(&ids, &distances)
                .expect("candidates are nonempty"),
        };
        audit.chosen = chosen;
        let d = distances[&chosen];
        let frontier = owned.into_iter().find(|f| f.id == chosen).expect("chosen is a candidate");
        Decision::Chosen(frontier, audit, d)
    }

    fn run(mut self) -> Result<EpisodeOutput, HarnessError> {
        let cfg = self.cfg().clone();
        let hc = &cfg.harness;
        let target = self.spec.target.clone();
        let env = &self.scenario.env;
        let full_turn = (std::f64::consts::TAU / cfg.action.turn_angle).ceil() as usize;

        let mut trace = Vec::new();
        let mut goal: Option<Goal> = None;
        let mut last_decision = 0usize;
        let mut path_length = 0.0;
        let mut decisions = 0usize;
        let mut frontier_distance_sum = 0.0;
        let mut blocked_streak = 0usize;
        let mut scan_turns = 0usize;
        let mut stop_reason = StopReason::BudgetExhausted;
        let mut stopped_on: Option<Vec<Cell>> = None;

        let mut steps = 0;
        'episode: while steps < self.spec.max_steps {
            let t = steps;
            let obs = observe(env, &self.pose, &cfg.sensor, &mut self.sensor_rng);
            if obs.visible_cells.iter().any(|(c, _)| self.true_targets.contains(c)) {
                self.evidence.target_ever_visible = true;
            }
            if obs
                .object_reports
                .iter()
                .any(|(l, c)| *l == target && self.true_targets.contains(c))
            {
                self.evidence.target_ever_reported = true;
            }
            self.belief.integrate(&obs)?;

            let detected = self.belief.cells_labelled(&target);
            let mut audit = None;
            if !detected.is_empty() {
                goal = Some(Goal::Target(detected.clone()));
            } else {
                if matches!(goal, Some(Goal::Target(_))) {
                    goal = None;
                }
                let frontiers = self.current_frontiers();
                let mut need = goal.is_none() || t - last_decision >= hc.replan_interval;
                if let Some(Goal::Frontier(f)) = &goal {
                    match track_frontier(f, &frontiers) {
                        Some(next) => goal = Some(Goal::Frontier(next)),
                        None => need = true,
                    }
                }
                if need {
                    match self.decide(t, &frontiers) {
                        Decision::Chosen(f, a, d) => {
                            if !matches!(&goal, Some(Goal::Frontier(g)) if g.cells == f.cells) {
                                scan_turns = 0;
                            }
                            goal = Some(Goal::Frontier(f));
                            audit = Some(a);
                            decisions += 1;
                            frontier_distance_sum += d;
                            last_decision = t;
                        }
                        Decision::Exhausted if self.frontier_left_unreached() => {
                            self.evidence.stuck_signaled = true;
                            stop_reason = StopReason::Stuck;
                            break 'episode;
                        }
                        Decision::Exhausted => {
                            stop_reason = StopReason::FrontiersExhausted;
                            break 'episode;
                        }
                        Decision::Unreachable => {
                            self.evidence.stuck_signaled = true;
                            stop_reason = StopReason::Stuck;
                            break 'episode;
                        }
                    }
                }
            }

            let agent = self.agent_cell();
            let action = match goal.as_ref().expect("goal set above") {
                Goal::Target(cells) => {
                    let known = TraversalMask::from_belief(
                        &self.belief,
                        MaskOptions {
                            unknown_traversable: false,
                            inflate: false,
                        },
                    );
                    let d = geodesic_distance(&known, agent, cells);
                    if d.is_some_and(|d| d <= self.spec.success_radius) {
                        Action::Stop
                    } else {
                        let mask = self.mask(hc.unknown_traversable, cells);
                        match self.plan(&mask, cells, blocked_streak) {
                            Ok(a) => a,
                            Err(_) => {
                                self.evidence.stuck_signaled = true;
                                stop_reason = StopReason::Stuck;
                                break 'episode;
                            }
                        }
                    }
                }
                Goal::Frontier(f) => {
                    if f.cells.contains(&agent) {
                        scan_turns += 1;
                        if scan_turns > full_turn {
                            // A full turn left this cell on the frontier.
                            self.scanned.insert(agent);
                            goal = None;
                            scan_turns = 0;
                        }
                        Action::TurnLeft
                    } else {
                        let mask = self.mask(hc.unknown_traversable, &f.cells);
                        match self.plan(&mask, &f.cells, blocked_streak) {
                            Ok(a) => a,
                            Err(_) => {
                                // Re-decide next step without this frontier.
                                self.unreachable.extend(f.cells.iter().copied());
                                goal = None;
                                Action::TurnLeft
                            }
                        }
                    }
                }
            };

            let (next, moved) = step(env, self.pose, action, &cfg.action);
            trace.push(TraceRecord {
                step: t,
                pose: self.pose,
                action,
                moved,
                goal: Goal::record(&goal),
                decision_audit: audit,
            });
            self.pose = next;
            steps += 1;
            if moved {
                path_length += cfg.action.forward_step;
                blocked_streak = 0;
            } else if action == Action::MoveForward {
                blocked_streak += 1;
                if blocked_streak >= hc.stuck_limit {
                    self.evidence.stuck_signaled = true;
                    stop_reason = StopReason::Stuck;
                    break;
                }
            }
            if action == Action::Stop {
                if let Some(Goal::Target(cells)) = &goal {
                    stopped_on = Some(cells.clone());
                }
                break;
            }
        }

        let final_dist = self.truth_field.value(self.agent_cell());
        let success = stopped_on.is_some() && final_dist <= self.spec.success_radius;
        if let Some(cells) = &stopped_on {
            stop_reason = if success {
                StopReason::StoppedNearTarget
            } else {
                StopReason::StoppedFar
            };
            // The belief target the agent stopped next to.
            let agent = self.agent_cell();
            if let Some(nearest) = cells.iter().min_by_key(|c| c.chebyshev(agent)) {
                self.evidence.false_target_at_stop = !self.true_targets.contains(nearest);
            }
        }
        self.evidence.target_mapped = self
            .belief
            .cells_labelled(&target)
            .iter()
            .any(|c| self.true_targets.contains(c));
        let error_class = if success {
            ErrorClass::None
        } else {
            classify_error(stop_reason, &self.evidence)
        };

        let result = EpisodeResult {
            success,
            steps,
            path_length,
            shortest_path_length: self.shortest_path_length(),
            stop_reason,
            error_class,
            decisions,
            frontier_distance_sum,
        };
        Ok(EpisodeOutput { result, trace })
    }

    /// Field toward `goals`, path from the agent, then one controller action.
    /// After a blocked move the agent first re-centers in its cell.
    fn plan(
        &self,
        mask: &TraversalMask,
        goals: &[Cell],
        blocked_streak: usize,
    ) -> Result<Action, PlanError> {
        let agent = self.agent_cell();
        let field = fmm_field(mask, goals)?;
        let path = extract_path(&field, agent)?;
        let cfg = self.cfg();
        if blocked_streak > 0 {
            let (cx, cy) = cell_center(agent, self.h);
            if (cx - self.pose.x).hypot(cy - self.pose.y) > 1e-9 {
                return Ok(next_action(&self.pose, &[agent], &cfg.action, self.h));
            }
        }
        Ok(next_action(&self.pose, &path, &cfg.action, self.h))
    }
}

/// The current frontier sharing the most cells with the goal frontier.
fn track_frontier(goal: &Frontier, current: &[Frontier]) -> Option<Frontier> {
    let mine: BTreeSet<Cell> = goal.cells.iter().copied().collect();
    current
        .iter()
        .map(|f| (f.cells.iter().filter(|c| mine.contains(c)).count(), f))
        .filter(|(n, _)| *n > 0)
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.id.cmp(&a.1.id)))
        .map(|(_, f)| f.clone())
}

/// Seeds for `n` expert queries. Sample `i` of every policy draws from the
/// same seed, so policies facing the same decision see the same answers.
fn sample_seeds(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    (0..n).map(|_| rng.gen()).collect()
}

/// Queries the three experts, each with its own RNG stream derived from
/// `rng` so the result does not depend on scheduling.
fn query_panel(
    panel: &ExpertPanel,
    query: &ExpertQuery<'_>,
    rng: &mut ChaCha8Rng,
) -> [ExpertRecommendation; 3] {
    let seeds = sample_seeds(rng, 3);
    let run = |i: usize| {
        let mut r = ChaCha8Rng::seed_from_u64(seeds[i]);
        panel.experts[i].recommend(query, &mut r as &mut dyn RngCore)
    };
    if panel.concurrent {
        std::thread::scope(|s| {
            let handles = [0, 1, 2].map(|i| s.spawn(move || run(i)));
            handles.map(|h| h.join().expect("expert thread panicked"))
        })
    } else {
        [run(0), run(1), run(2)]
    }
}

/// Sets of frontier ids endorsed by the panel, for callers outside episodes.
pub fn panel_sets(
    panel: &ExpertPanel,
    query: &ExpertQuery<'_>,
    rng: &mut ChaCha8Rng,
) -> [FrontierSet; 3] {
    query_panel(panel, query, rng).map(|r| r.frontier_ids)
}
