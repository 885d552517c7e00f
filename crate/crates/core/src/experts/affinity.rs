use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

const DEFAULT_TABLE: &str = include_str!("../../data/affinity_default.json");

/// Commonsense co-occurrence scores in `[0, 1]`, keyed target → context label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinityTable {
    default_score: f64,
    #[serde(default)]
    objects: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    rooms: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for AffinityTable {
    /// The shipped table for the twelve household target categories.
    fn default() -> Self {
        Self::from_json_str(DEFAULT_TABLE).expect("bundled affinity table is valid")
    }
}

impl AffinityTable {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let t: Self = serde_json::from_str(text)
            .map_err(|e| ConfigError::new("experts.affinity_table", e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("experts.affinity_table", format!("{}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let check = |field: String, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("score {v} is outside [0, 1]")))
            }
        };
        check("affinity.default_score".into(), self.default_score)?;
        for (kind, layer) in [("objects", &self.objects), ("rooms", &self.rooms)] {
            for (target, row) in layer {
                for (label, &v) in row {
                    check(format!("affinity.{kind}.{target}.{label}"), v)?;
                }
            }
        }
        Ok(())
    }

    pub fn default_score(&self) -> f64 {
        self.default_score
    }

    pub fn object_affinity(&self, object: &str, target: &str) -> f64 {
        self.objects
            .get(target)
            .and_then(|row| row.get(object))
            .copied()
            .unwrap_or(self.default_score)
    }

    pub fn room_affinity(&self, room: &str, target: &str) -> f64 {
        self.rooms
            .get(target)
            .and_then(|row| row.get(room))
            .copied()
            .unwrap_or(self.default_score)
    }

    /// Sets one object score, for experiments and tests.
    pub fn set_object_affinity(&mut self, object: &str, target: &str, score: f64) {
        self.objects
            .entry(target.to_string())
            .or_default()
            .insert(object.to_string(), score.clamp(0.0, 1.0));
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }
}
