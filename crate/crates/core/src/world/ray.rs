//! Grid traversal along a ray (Amanatides & Woo), supercover at exact corners.

use crate::grid::{cell_of, Cell};

const CORNER_EPS: f64 = 1e-12;

/// Walks the cells pierced by the ray `origin + t * dir` for `t ∈ [0, max_t]`.
///
/// `dir` must be a unit vector. `visit(cell, t_enter)` is called for every
/// cell in traversal order and returns `false` to stop the walk. When the ray
/// passes exactly through a cell corner both side cells are visited before
/// the diagonal one.
pub fn traverse(
    origin: (f64, f64),
    dir: (f64, f64),
    max_t: f64,
    h: f64,
    mut visit: impl FnMut(Cell, f64) -> bool,
) {
    let (ox, oy) = origin;
    let (dx, dy) = dir;
    let mut cell = cell_of(ox, oy, h);
    if !visit(cell, 0.0) {
        return;
    }

    let (step_x, mut t_max_x, t_delta_x) = axis_setup(ox, dx, cell.x, h);
    let (step_y, mut t_max_y, t_delta_y) = axis_setup(oy, dy, cell.y, h);

    loop {
        let t = t_max_x.min(t_max_y);
        if !t.is_finite() || t > max_t {
            return;
        }
        if (t_max_x - t_max_y).abs() <= CORNER_EPS {
            if !visit(cell.offset(step_x, 0), t) || !visit(cell.offset(0, step_y), t) {
                return;
            }
            cell = cell.offset(step_x, step_y);
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            cell = cell.offset(step_x, 0);
            t_max_x += t_delta_x;
        } else {
            cell = cell.offset(0, step_y);
            t_max_y += t_delta_y;
        }
        if !visit(cell, t) {
            return;
        }
    }
}

fn axis_setup(o: f64, d: f64, c: i32, h: f64) -> (i32, f64, f64) {
    if d > 0.0 {
        (1, ((c + 1) as f64 * h - o) / d, h / d)
    } else if d < 0.0 {
        (-1, (c as f64 * h - o) / d, -h / d)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}
