//! Ground-truth environment, agent kinematics and the simulated sensor.

mod ray;
mod scenario;
mod sensor;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::grid::{cell_of, Cell, Grid};

pub use ray::traverse;
pub use scenario::{ObjectSpec, RoomSpec, Scenario, ScenarioDoc, ScenarioError, StartSpec};
pub use sensor::{observe, Observation, SeenState, SensorConfig};

/// What occupies one ground-truth cell. Labels index the environment's
/// vocabularies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terrain {
    Obstacle,
    Free { room: u16, object: Option<u16> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("boundary cell {0} is not an obstacle")]
    OpenBoundary(Cell),
    #[error("cell {cell} references unknown {kind} label index {index}")]
    BadLabel {
        cell: Cell,
        kind: &'static str,
        index: u16,
    },
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error("grid must be at least 3x3")]
    TooSmall,
}

/// Immutable ground truth: occupancy plus room and object labels.
#[derive(Clone, Debug)]
pub struct Environment {
    cell_size: f64,
    cells: Grid<Terrain>,
    room_labels: Vec<String>,
    object_labels: Vec<String>,
    targets: BTreeMap<String, Vec<Cell>>,
}

impl Environment {
    pub fn new(
        cell_size: f64,
        cells: Grid<Terrain>,
        room_labels: Vec<String>,
        object_labels: Vec<String>,
    ) -> Result<Self, WorldError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(WorldError::BadCellSize(cell_size));
        }
        if cells.width() < 3 || cells.height() < 3 {
            return Err(WorldError::TooSmall);
        }
        let mut targets: BTreeMap<String, Vec<Cell>> = BTreeMap::new();
        for (c, t) in cells.iter() {
            let on_edge = c.x == 0
                || c.y == 0
                || c.x as usize == cells.width() - 1
                || c.y as usize == cells.height() - 1;
            match *t {
                Terrain::Obstacle => {}
                Terrain::Free { .. } if on_edge => return Err(WorldError::OpenBoundary(c)),
                Terrain::Free { room, object } => {
                    if room as usize >= room_labels.len() {
                        return Err(WorldError::BadLabel {
                            cell: c,
                            kind: "room",
                            index: room,
                        });
                    }
                    if let Some(o) = object {
                        let label = object_labels.get(o as usize).ok_or(WorldError::BadLabel {
                            cell: c,
                            kind: "object",
                            index: o,
                        })?;
                        targets.entry(label.clone()).or_default().push(c);
                    }
                }
            }
        }
        Ok(Self {
            cell_size,
            cells,
            room_labels,
            object_labels,
            targets,
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn terrain(&self) -> &Grid<Terrain> {
        &self.cells
    }

    pub fn room_labels(&self) -> &[String] {
        &self.room_labels
    }

    pub fn object_labels(&self) -> &[String] {
        &self.object_labels
    }

    /// Out-of-bounds cells count as obstacles.
    pub fn is_free(&self, c: Cell) -> bool {
        matches!(self.cells.get(c), Some(Terrain::Free { .. }))
    }

    pub fn room_at(&self, c: Cell) -> Option<&str> {
        match self.cells.get(c) {
            Some(Terrain::Free { room, .. }) => Some(&self.room_labels[*room as usize]),
            _ => None,
        }
    }

    pub fn object_at(&self, c: Cell) -> Option<&str> {
        match self.cells.get(c) {
            Some(Terrain::Free {
                object: Some(o), ..
            }) => Some(&self.object_labels[*o as usize]),
            _ => None,
        }
    }

    /// Cells holding `label`, row-major. Empty when the label is absent.
    pub fn target_cells(&self, label: &str) -> &[Cell] {
        self.targets.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn target_positions(&self) -> &BTreeMap<String, Vec<Cell>> {
        &self.targets
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        cell_of(x, y, self.cell_size)
    }

    pub fn pose_is_valid(&self, pose: &Pose) -> bool {
        pose.x.is_finite() && pose.y.is_finite() && self.is_free(self.cell_of(pose.x, pose.y))
    }

    /// True when the segment between two metric points crosses no obstacle.
    pub fn segment_clear(&self, from: (f64, f64), to: (f64, f64)) -> bool {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len = dx.hypot(dy);
        if len == 0.0 {
            return self.is_free(self.cell_of(from.0, from.1));
        }
        let mut clear = true;
        traverse(from, (dx / len, dy / len), len, self.cell_size, |c, _| {
            clear = self.is_free(c);
            clear
        });
        clear && self.is_free(self.cell_of(to.0, to.1))
    }
}

/// Agent pose in meters; `theta` is kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn cell(&self, h: f64) -> Cell {
        cell_of(self.x, self.y, h)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(theta: f64) -> f64 {
    let t = normalize_angle(theta);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSpec {
    /// Meters per forward action.
    pub forward_step: f64,
    /// Radians per turn action.
    pub turn_angle: f64,
}

impl Default for ActionSpec {
    fn default() -> Self {
        Self {
            forward_step: 0.25,
            turn_angle: PI / 6.0,
        }
    }
}

impl ActionSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.forward_step > 0.0 && self.forward_step.is_finite()) {
            return Err(ConfigError::new("action.forward_step", "must be > 0"));
        }
        if !(self.turn_angle > 0.0 && self.turn_angle <= PI) {
            return Err(ConfigError::new("action.turn_angle", "must lie in (0, π]"));
        }
        Ok(())
    }
}

/// Applies one action. A blocked forward move leaves the pose untouched and
/// reports `moved = false`; `moved` is only true for a completed forward move.
pub fn step(env: &Environment, pose: Pose, action: Action, spec: &ActionSpec) -> (Pose, bool) {
    match action {
        Action::TurnLeft => (Pose::new(pose.x, pose.y, pose.theta + spec.turn_angle), false),
        Action::TurnRight => (Pose::new(pose.x, pose.y, pose.theta - spec.turn_angle), false),
        Action::Stop => (pose, false),
        Action::MoveForward => {
            let nx = pose.x + spec.forward_step * pose.theta.cos();
            let ny = pose.y + spec.forward_step * pose.theta.sin();
            if env.segment_clear((pose.x, pose.y), (nx, ny)) {
                (Pose { x: nx, y: ny, ..pose }, true)
            } else {
                (pose, false)
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Open `w × h` room with a one-cell wall border, single room "room".
    pub(crate) fn open_room(w: usize, h: usize, cell_size: f64) -> Environment {
        let mut g = Grid::filled(w, h, Terrain::Free { room: 0, object: None });
        for c in g.cells().collect::<Vec<_>>() {
            if c.x == 0 || c.y == 0 || c.x as usize == w - 1 || c.y as usize == h - 1 {
                g[c] = Terrain::Obstacle;
            }
        }
        Environment::new(cell_size, g, vec!["room".into()], vec![]).unwrap()
    }

    #[test]
    fn turn_left_rotates_by_turn_angle() {
        let env = open_room(10, 10, 0.25);
        let spec = ActionSpec::default();
        let p = Pose::new(1.0, 1.0, 0.0);
        let (q, moved) = step(&env, p, Action::TurnLeft, &spec);
        assert!(!moved);
        assert!((q.theta - PI / 6.0).abs() < 1e-15);
        assert_eq!((q.x, q.y), (p.x, p.y));
        let (r, _) = step(&env, p, Action::TurnRight, &spec);
        assert!((r.theta - (TAU - PI / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn forward_blocked_by_wall() {
        let env = open_room(10, 10, 0.25);
        // Right wall starts at x = 2.25; stand 0.1 m in front of it.
        let p = Pose::new(2.15, 1.0, 0.0);
        let (q, moved) = step(&env, p, Action::MoveForward, &ActionSpec::default());
        assert!(!moved);
        assert_eq!(q, p);
    }

    #[test]
    fn four_forward_steps_cover_one_meter() {
        let env = open_room(10, 10, 0.25);
        let spec = ActionSpec::default();
        let mut p = Pose::new(0.375, 1.0, 0.0);
        for _ in 0..4 {
            let (q, moved) = step(&env, p, Action::MoveForward, &spec);
            assert!(moved);
            p = q;
        }
        assert!((p.x - 1.375).abs() < 1e-12);
        assert_eq!(p.y, 1.0);
    }

    #[test]
    fn stop_is_identity() {
        let env = open_room(5, 5, 0.25);
        let p = Pose::new(0.6, 0.6, 1.0);
        assert_eq!(step(&env, p, Action::Stop, &ActionSpec::default()), (p, false));
    }

    #[test]
    fn diagonal_move_cannot_slip_between_corner_obstacles() {
        // Obstacles at (2,1) and (1,2); moving from (1,1) toward (2,2) exactly
        // through the shared corner must be blocked.
        let mut g = Grid::filled(5, 5, Terrain::Free { room: 0, object: None });
        for c in g.cells().collect::<Vec<_>>() {
            if c.x == 0 || c.y == 0 || c.x == 4 || c.y == 4 {
                g[c] = Terrain::Obstacle;
            }
        }
        g[Cell::new(2, 1)] = Terrain::Obstacle;
        g[Cell::new(1, 2)] = Terrain::Obstacle;
        let env = Environment::new(1.0, g, vec!["r".into()], vec![]).unwrap();
        let p = Pose::new(1.5, 1.5, PI / 4.0);
        let spec = ActionSpec {
            forward_step: 1.0,
            turn_angle: PI / 4.0,
        };
        let (_, moved) = step(&env, p, Action::MoveForward, &spec);
        assert!(!moved);
    }

    #[test]
    fn open_boundary_rejected() {
        let g = Grid::filled(4, 4, Terrain::Free { room: 0, object: None });
        let err = Environment::new(1.0, g, vec!["r".into()], vec![]).unwrap_err();
        assert!(matches!(err, WorldError::OpenBoundary(_)));
    }

    #[test]
    fn action_spec_validation() {
        assert!(ActionSpec::default().validate().is_ok());
        let bad = ActionSpec {
            forward_step: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ActionSpec {
            turn_angle: 4.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wrap_pi_keeps_half_turn_positive() {
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
        assert!((wrap_pi(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }
}
