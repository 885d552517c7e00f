use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ConfigError};
use crate::experts::{
    AffinityTable, FrontierExpert, HttpExpert, LayoutExpert, NoisyOracleExpert, ObjectExpert,
    RoomExpert, Selection, SleWeights,
};
use crate::world::{ActionSpec, SensorConfig};

/// Everything tunable about a run, as one JSON document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sensor: SensorConfig,
    pub action: ActionSpec,
    pub experts: ExpertConfig,
    pub cdm: CdmConfig,
    pub harness: HarnessConfig,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            ConfigError::new(
                "config",
                format!("line {}, column {}: {e}", e.line(), e.column()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sensor.validate()?;
        self.action.validate()?;
        self.experts.validate()?;
        self.harness.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertBackend {
    /// Rule-based object, room and scene-layout experts.
    Rules,
    /// Three independent noisy oracles.
    NoisyOracle { p: f64 },
    Http {
        o2f: String,
        r2f: String,
        sle: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    5000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    pub threshold: f64,
    pub top_k: usize,
    pub sle_weights: SleWeights,
    /// Custom affinity table; the bundled one is used when absent.
    pub affinity_table: Option<PathBuf>,
    pub backend: ExpertBackend,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        let sel = Selection::default();
        Self {
            threshold: sel.threshold,
            top_k: sel.top_k,
            sle_weights: SleWeights::default(),
            affinity_table: None,
            backend: ExpertBackend::Rules,
        }
    }
}

impl ExpertConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_probability("experts.threshold", self.threshold)?;
        if self.top_k == 0 {
            return Err(ConfigError::new("experts.top_k", "must be >= 1"));
        }
        if let ExpertBackend::NoisyOracle { p } = self.backend {
            check_probability("experts.backend.p", p)?;
        }
        Ok(())
    }

    pub fn selection(&self) -> Selection {
        Selection {
            threshold: self.threshold,
            top_k: self.top_k,
        }
    }

    pub fn load_table(&self) -> Result<AffinityTable, ConfigError> {
        match &self.affinity_table {
            Some(p) => AffinityTable::load(p),
            None => Ok(AffinityTable::default()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertSlot {
    O2f,
    R2f,
    Sle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdmConfig {
    /// Which expert the majority-vote baseline samples.
    pub majority_expert: ExpertSlot,
}

impl Default for CdmConfig {
    fn default() -> Self {
        Self {
            majority_expert: ExpertSlot::O2f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub max_steps: usize,
    /// Meters.
    pub success_radius: f64,
    pub replan_interval: usize,
    pub min_frontier_size: usize,
    /// Meters.
    pub context_radius: f64,
    pub inflate_obstacles: bool,
    /// Whether frontier-reaching paths may cross unknown cells.
    pub unknown_traversable: bool,
    /// Consecutive blocked forward moves before the episode ends as stuck.
    pub stuck_limit: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            success_radius: 1.0,
            replan_interval: 10,
            min_frontier_size: 2,
            context_radius: 1.5,
            inflate_obstacles: true,
            unknown_traversable: true,
            stuck_limit: 10,
        }
    }
}

impl HarnessConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.max_steps == 0 {
            return Err(ConfigError::new("harness.max_steps", "must be >= 1"));
        }
        if !(self.success_radius >= 0.0 && self.success_radius.is_finite()) {
            return Err(ConfigError::new("harness.success_radius", "must be >= 0"));
        }
        if self.replan_interval == 0 {
            return Err(ConfigError::new("harness.replan_interval", "must be >= 1"));
        }
        if !(self.context_radius > 0.0) {
            return Err(ConfigError::new("harness.context_radius", "must be > 0"));
        }
        if self.stuck_limit == 0 {
            return Err(ConfigError::new("harness.stuck_limit", "must be >= 1"));
        }
        Ok(())
    }
}

/// Global frontier-selection policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Policy {
    /// Consensus over the three experts.
    Consensus,
    /// Plurality over `k` samples of one expert.
    Majority { k: usize },
    /// Nearest reachable frontier.
    Closest,
    /// A single noisy oracle with hit rate `p`.
    Oracle { p: f64 },
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::Consensus => write!(f, "consensus"),
            Policy::Majority { k } => write!(f, "majority:{k}"),
            Policy::Closest => write!(f, "closest"),
            Policy::Oracle { p } => write!(f, "oracle:{p}"),
        }
    }
}

impl FromStr for Policy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = |why: &str| ConfigError::new("policy", format!("{s:?}: {why}"));
        match s.split_once(':') {
            None if s == "consensus" => Ok(Policy::Consensus),
            None if s == "closest" => Ok(Policy::Closest),
            Some(("majority", k)) => {
                let k: usize = k.parse().map_err(|_| bad("k must be a positive integer"))?;
                if k == 0 {
                    return Err(bad("k must be >= 1"));
                }
                Ok(Policy::Majority { k })
            }
            Some(("oracle", p)) => {
                let p: f64 = p.parse().map_err(|_| bad("p must be a number"))?;
                check_probability("policy", p)?;
                Ok(Policy::Oracle { p })
            }
            _ => Err(bad("expected consensus, majority:K, closest or oracle:P")),
        }
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Policy {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, ConfigError> {
        s.parse()
    }
}

/// The three experts for one run, built once and shared across episodes.
#[derive(Clone)]
pub struct ExpertPanel {
    pub experts: [Arc<dyn FrontierExpert>; 3],
    pub majority: ExpertSlot,
    /// Query the three experts on separate threads.
    pub concurrent: bool,
}

impl ExpertPanel {
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let sel = cfg.experts.selection();
        let (experts, concurrent): ([Arc<dyn FrontierExpert>; 3], bool) = match &cfg.experts.backend {
            ExpertBackend::Rules => {
                let table = Arc::new(cfg.experts.load_table()?);
                (
                    [
                        Arc::new(ObjectExpert {
                            table: table.clone(),
                            selection: sel,
                        }),
                        Arc::new(RoomExpert {
                            table: table.clone(),
                            selection: sel,
                        }),
                        Arc::new(LayoutExpert {
                            table,
                            weights: cfg.experts.sle_weights,
                            selection: sel,
                        }),
                    ],
                    false,
                )
            }
            ExpertBackend::NoisyOracle { p } => (
                [
                    Arc::new(NoisyOracleExpert::new("oracle_o2f", *p)?),
                    Arc::new(NoisyOracleExpert::new("oracle_r2f", *p)?),
                    Arc::new(NoisyOracleExpert::new("oracle_sle", *p)?),
                ],
                false,
            ),
            ExpertBackend::Http {
                o2f,
                r2f,
                sle,
                timeout_ms,
            } => {
                let t = Duration::from_millis(*timeout_ms);
                (
                    [
                        Arc::new(HttpExpert::new("o2f", o2f, t)),
                        Arc::new(HttpExpert::new("r2f", r2f, t)),
                        Arc::new(HttpExpert::new("sle", sle, t)),
                    ],
                    true,
                )
            }
        };
        Ok(Self {
            experts,
            majority: cfg.cdm.majority_expert,
            concurrent,
        })
    }

    pub fn majority_expert(&self) -> &Arc<dyn FrontierExpert> {
        match self.majority {
            ExpertSlot::O2f => &self.experts[0],
            ExpertSlot::R2f => &self.experts[1],
            ExpertSlot::Sle => &self.experts[2],
        }
    }
}
