//! Simulated range sensor plus a fallible object/room detector.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ray::traverse, Environment, Pose, Terrain};
use crate::error::{check_probability, ConfigError};
use crate::grid::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Meters.
    pub max_range: f64,
    pub n_rays: usize,
    /// Probability that a visible ground-truth object is reported.
    pub det_tp: f64,
    /// Per-observation probability of one spurious object report.
    pub det_fp: f64,
    /// Probability that a visible cell's room label is reported correctly.
    pub room_acc: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov: FRAC_PI_2,
            max_range: 5.0,
            n_rays: 60,
            det_tp: 0.95,
            det_fp: 0.02,
            room_acc: 0.95,
        }
    }
}

impl SensorConfig {
    /// Perfect detector with default geometry.
    pub fn noiseless() -> Self {
        Self {
            det_tp: 1.0,
            det_fp: 0.0,
            room_acc: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("sensor.det_tp", self.det_tp)?;
        check_probability("sensor.det_fp", self.det_fp)?;
        check_probability("sensor.room_acc", self.room_acc)?;
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(ConfigError::new("sensor.max_range", "must be > 0"));
        }
        if self.n_rays < 3 {
            return Err(ConfigError::new("sensor.n_rays", "must be >= 3"));
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::TAU) {
            return Err(ConfigError::new("sensor.fov", "must lie in (0, 2π]"));
        }
        Ok(())
    }

    /// Ray headings, evenly spaced across the field of view and including
    /// both edges.
    pub fn ray_angles(&self, theta: f64) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_rays;
        (0..n).map(move |i| theta - self.fov / 2.0 + self.fov * i as f64 / (n - 1) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeenState {
    Free,
    Obstacle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub pose: Pose,
    /// Per-ray hit distance in meters, capped at `max_range`.
    pub depth: Vec<f64>,
    /// Row-major, deduplicated.
    pub visible_cells: Vec<(Cell, SeenState)>,
    pub object_reports: Vec<(String, Cell)>,
    pub room_reports: Vec<(String, Cell)>,
}

/// Casts the sensor rays from `pose` and samples detector reports.
///
/// Deterministic in `(env, pose, sensor, rng state)`.
pub fn observe<R: Rng + ?Sized>(
    env: &Environment,
    pose: &Pose,
    sensor: &SensorConfig,
    rng: &mut R,
) -> Observation {
    let h = env.cell_size();
    let origin = (pose.x, pose.y);
    let mut seen: BTreeMap<Cell, SeenState> = BTreeMap::new();
    let mut depth = Vec::with_capacity(sensor.n_rays);

    for angle in sensor.ray_angles(pose.theta) {
        let dir = (angle.cos(), angle.sin());
        let mut hit = sensor.max_range;
        traverse(origin, dir, sensor.max_range, h, |c, t| {
            if env.is_free(c) {
                seen.insert(c, SeenState::Free);
                true
            } else {
                if env.terrain().contains(c) {
                    seen.entry(c).or_insert(SeenState::Obstacle);
                }
                hit = t;
                false
            }
        });
        depth.push(hit);
    }

    let visible_cells: Vec<(Cell, SeenState)> = seen.into_iter().collect();

    let mut object_reports = Vec::new();
    let mut room_reports = Vec::new();
    let n_rooms = env.room_labels().len();
    for &(c, state) in &visible_cells {
        if state != SeenState::Free {
            continue;
        }
        let Terrain::Free { room, object } = env.terrain()[c] else {
            continue;
        };
        if let Some(o) = object {
            if rng.gen::<f64>() < sensor.det_tp {
                object_reports.push((env.object_labels()[o as usize].clone(), c));
            }
        }
        let reported_room = if rng.gen::<f64>() < sensor.room_acc || n_rooms < 2 {
            room as usize
        } else {
            // Uniform over the other labels.
            let k = rng.gen_range(0..n_rooms - 1);
            if k >= room as usize {
                k + 1
            } else {
                k
            }
        };
        room_reports.push((env.room_labels()[reported_room].clone(), c));
    }

    let free: Vec<Cell> = visible_cells
        .iter()
        .filter(|(_, s)| *s == SeenState::Free)
        .map(|(c, _)| *c)
        .collect();
    if !free.is_empty() && !env.object_labels().is_empty() && rng.gen::<f64>() < sensor.det_fp {
        let c = free[rng.gen_range(0..free.len())];
        let label = &env.object_labels()[rng.gen_range(0..env.object_labels().len())];
        object_reports.push((label.clone(), c));
    }

    Observation {
        pose: *pose,
        depth,
        visible_cells,
        object_reports,
        room_reports,
    }
}
