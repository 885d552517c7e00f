//! Fast Marching distance fields, path extraction and the local controller.
//!
//! The solver uses two upwind stencils: the axis-aligned one with spacing `h`
//! and the diagonal one with spacing `h·√2`, keeping the smaller update. A
//! diagonal neighbor only contributes when both orthogonal cells it cuts past
//! are traversable, the same rule path extraction uses.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{cell_center, Cell, Grid};
use crate::mapping::{BeliefMap, CellState};
use crate::world::{wrap_pi, Action, ActionSpec, Environment, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("distance field needs at least one goal cell")]
    EmptyGoalSet,
    #[error("goal cell {0} is not traversable")]
    GoalNotTraversable(Cell),
    #[error("start cell {0} cannot reach any goal")]
    Unreachable(Cell),
    #[error("path descent stuck at {0}")]
    Stuck(Cell),
}

/// Which cells a field may propagate through.
#[derive(Clone, Debug, PartialEq)]
pub struct TraversalMask {
    cell_size: f64,
    open: Grid<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskOptions {
    pub unknown_traversable: bool,
    /// Block every cell 8-adjacent to a known obstacle.
    pub inflate: bool,
}

impl TraversalMask {
    pub fn from_grid(open: Grid<bool>, cell_size: f64) -> Self {
        Self { cell_size, open }
    }

    pub fn from_belief(map: &BeliefMap, opts: MaskOptions) -> Self {
        let states = map.states();
        let mut open = Grid::filled(states.width(), states.height(), false);
        for (c, s) in states.iter() {
            open[c] = match s {
                CellState::Free => true,
                CellState::Unknown => opts.unknown_traversable,
                CellState::Obstacle => false,
            };
        }
        if opts.inflate {
            for (c, s) in states.iter() {
                if *s == CellState::Obstacle {
                    for n in c.neighbors8() {
                        if let Some(v) = open.get_mut(n) {
                            *v = false;
                        }
                    }
                }
            }
        }
        Self::from_grid(open, map.cell_size())
    }

    /// Ground-truth free space, optionally inflated.
    pub fn from_environment(env: &Environment, inflate: bool) -> Self {
        let t = env.terrain();
        let mut open = Grid::filled(t.width(), t.height(), false);
        for c in t.cells() {
            open[c] = env.is_free(c);
        }
        if inflate {
            for c in t.cells() {
                if !env.is_free(c) {
                    for n in c.neighbors8() {
                        if let Some(v) = open.get_mut(n) {
                            *v = false;
                        }
                    }
                }
            }
        }
        Self::from_grid(open, env.cell_size())
    }

    /// Marks in-bounds cells traversable regardless of inflation.
    pub fn allow(&mut self, cells: impl IntoIterator<Item = Cell>) {
        for c in cells {
            if let Some(v) = self.open.get_mut(c) {
                *v = true;
            }
        }
    }

    pub fn is_open(&self, c: Cell) -> bool {
        self.open.get(c).copied().unwrap_or(false)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.open.width()
    }

    pub fn height(&self) -> usize {
        self.open.height()
    }
}

/// Arrival distances in meters; `INFINITY` where no goal is reachable.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    cell_size: f64,
    values: Grid<f64>,
    goals: Vec<Cell>,
}

impl DistanceField {
    pub fn value(&self, c: Cell) -> f64 {
        self.values.get(c).copied().unwrap_or(f64::INFINITY)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// CSV matrix, one grid row per line; unreached cells are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for y in 0..self.values.height() {
            for x in 0..self.values.width() {
                if x > 0 {
                    out.push(',');
                }
                let v = self.values[Cell::new(x as i32, y as i32)];
                if v.is_finite() {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    value: f64,
    idx: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    // Reversed for a min-heap; index breaks ties so pops are deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Two-sided first-order upwind update with spacing `h`.
fn eikonal_update(a: f64, b: f64, h: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if hi - lo >= h {
        return lo + h;
    }
    let diff = a - b;
    (a + b + (2.0 * h * h - diff * diff).sqrt()) / 2.0
}

pub fn fmm_field(mask: &TraversalMask, goals: &[Cell]) -> Result<DistanceField, PlanError> {
    fmm_solve(mask, goals, |_| {})
}

pub(crate) fn fmm_solve(
    mask: &TraversalMask,
    goals: &[Cell],
    mut on_accept: impl FnMut(f64),
) -> Result<DistanceField, PlanError> {
    if goals.is_empty() {
        return Err(PlanError::EmptyGoalSet);
    }
    if let Some(&g) = goals.iter().find(|&&g| !mask.is_open(g)) {
        return Err(PlanError::GoalNotTraversable(g));
    }
    let h = mask.cell_size;
    let hd = h * SQRT_2;
    let (w, ht) = (mask.width(), mask.height());
    let mut values = Grid::filled(w, ht, f64::INFINITY);
    let mut accepted = Grid::filled(w, ht, false);
    let mut heap = BinaryHeap::new();

    for &g in goals {
        values[g] = 0.0;
        heap.push(Trial {
            value: 0.0,
            idx: values.index(g).unwrap(),
        });
    }

    let known = |values: &Grid<f64>, accepted: &Grid<bool>, c: Cell| -> f64 {
        match accepted.get(c) {
            Some(true) => values[c],
            _ => f64::INFINITY,
        }
    };

    while let Some(Trial { value, idx }) = heap.pop() {
        let c = values.cell_at(idx);
        if accepted[c] || value > values[c] {
            continue;
        }
        accepted[c] = true;
        on_accept(value);

        for n in c.neighbors8() {
            if !mask.is_open(n) || accepted[n] {
                continue;
            }
            let k = |dx, dy| known(&values, &accepted, n.offset(dx, dy));
            let axis = eikonal_update(k(-1, 0).min(k(1, 0)), k(0, -1).min(k(0, 1)), h);
            // A diagonal neighbor counts only if the corner is passable.
            let diag = |dx: i32, dy: i32| {
                if mask.is_open(n.offset(dx, 0)) && mask.is_open(n.offset(0, dy)) {
                    k(dx, dy)
                } else {
                    f64::INFINITY
                }
            };
            let d1 = diag(1, -1).min(diag(-1, 1));
            let d2 = diag(1, 1).min(diag(-1, -1));
            let cand = axis.min(eikonal_update(d1, d2, hd));
            if cand < values[n] {
                values[n] = cand;
                heap.push(Trial {
                    value: cand,
                    idx: values.index(n).unwrap(),
                });
            }
        }
    }

    Ok(DistanceField {
        cell_size: h,
        values,
        goals: goals.to_vec(),
    })
}

/// Greedy steepest descent from `start` to a goal over the 8-neighborhood.
/// Diagonal steps need both orthogonal cells reached by the field.
pub fn extract_path(field: &DistanceField, start: Cell) -> Result<Vec<Cell>, PlanError> {
    let v0 = field.value(start);
    if !v0.is_finite() {
        return Err(PlanError::Unreachable(start));
    }
    let cap = field.values.width() * field.values.height();
    let mut path = vec![start];
    let mut cur = start;
    while field.value(cur) > 0.0 {
        if path.len() > cap {
            return Err(PlanError::Stuck(cur));
        }
        let here = field.value(cur);
        let mut best: Option<(f64, Cell)> = None;
        for n in cur.neighbors8() {
            let (dx, dy) = (n.x - cur.x, n.y - cur.y);
            if dx != 0
                && dy != 0
                && !(field.value(cur.offset(dx, 0)).is_finite()
                    && field.value(cur.offset(0, dy)).is_finite())
            {
                continue;
            }
            let v = field.value(n);
            if v < here && best.map_or(true, |(b, _)| v < b) {
                best = Some((v, n));
            }
        }
        match best {
            Some((_, n)) => {
                path.push(n);
                cur = n;
            }
            None => return Err(PlanError::Stuck(cur)),
        }
    }
    Ok(path)
}

/// Metric length of a cell path (`h` per orthogonal step, `h·√2` diagonal).
pub fn path_length(path: &[Cell], h: f64) -> f64 {
    path.windows(2)
        .map(|w| if w[0].x != w[1].x && w[0].y != w[1].y { h * SQRT_2 } else { h })
        .sum()
}

/// One discrete action toward the path. Never returns `Stop`.
pub fn next_action(pose: &Pose, path: &[Cell], spec: &ActionSpec, cell_size: f64) -> Action {
    let dist = |c: Cell| {
        let (x, y) = cell_center(c, cell_size);
        ((x - pose.x).hypot(y - pose.y), x, y)
    };
    let mut target = *path.last().expect("path is nonempty");
    for &c in path {
        if dist(c).0 >= spec.forward_step {
            target = c;
            break;
        }
    }
    let (d, tx, ty) = dist(target);
    if d == 0.0 {
        return Action::TurnLeft;
    }
    let err = wrap_pi((ty - pose.y).atan2(tx - pose.x) - pose.theta);
    if err.abs() > spec.turn_angle / 2.0 {
        if err > 0.0 {
            Action::TurnLeft
        } else {
            Action::TurnRight
        }
    } else {
        Action::MoveForward
    }
}

/// Geodesic meters from `from` to the nearest of `to_cells`, or `None` when
/// unreachable. Goal cells that are not traversable are ignored.
pub fn geodesic_distance(mask: &TraversalMask, from: Cell, to_cells: &[Cell]) -> Option<f64> {
    let goals: Vec<Cell> = to_cells.iter().copied().filter(|&c| mask.is_open(c)).collect();
    if goals.contains(&from) {
        return Some(0.0);
    }
    if goals.is_empty() || !mask.is_open(from) {
        return None;
    }
    let v = fmm_field(mask, &goals).ok()?.value(from);
    v.is_finite().then_some(v)
}
