#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use objnav::grid::{Cell, Grid};
use objnav::mapping::{BeliefMap, CellState};
use objnav::world::{Environment, Terrain};
use rand::Rng;

pub const H: f64 = 0.25;

/// Free-room environment: obstacle border, one room label.
pub fn open_env(w: usize, h: usize) -> Environment {
    let mut g = Grid::filled(w, h, Terrain::Obstacle);
    for y in 1..h as i32 - 1 {
        for x in 1..w as i32 - 1 {
            g[Cell::new(x, y)] = Terrain::Free { room: 0, object: None };
        }
    }
    Environment::new(H, g, vec!["hall".into()], vec![]).unwrap()
}

pub fn random_belief(rng: &mut impl Rng, w: usize, h: usize) -> BeliefMap {
    let mut g = Grid::filled(w, h, CellState::Unknown);
    let (pf, po) = (rng.gen_range(0.1..0.8), rng.gen_range(0.0..0.3));
    for c in g.cells().collect::<Vec<_>>() {
        let r: f64 = rng.gen();
        g[c] = if r < pf {
            CellState::Free
        } else if r < pf + po {
            CellState::Obstacle
        } else {
            CellState::Unknown
        };
    }
    BeliefMap::from_states(g, H)
}

/// Frontier clusters straight from the definition: Free cells with an
/// Unknown 8-neighbor, grouped by 8-connectivity with a naive union-find,
/// small clusters dropped, ordered by their first row-major cell.
pub fn brute_frontiers(map: &BeliefMap, min_size: usize) -> Vec<Vec<Cell>> {
    let (w, h) = (map.width() as i32, map.height() as i32);
    let mut fc = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let c = Cell::new(x, y);
            if map.state(c) != CellState::Free {
                continue;
            }
            let mut touches = false;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) != (0, 0)
                        && nx >= 0
                        && ny >= 0
                        && nx < w
                        && ny < h
                        && map.state(Cell::new(nx, ny)) == CellState::Unknown
                    {
                        touches = true;
                    }
                }
            }
            if touches {
                fc.push(c);
            }
        }
    }
    let mut parent: Vec<usize> = (0..fc.len()).collect();
    fn root(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    for i in 0..fc.len() {
        for j in 0..i {
            if (fc[i].x - fc[j].x).abs() <= 1 && (fc[i].y - fc[j].y).abs() <= 1 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
    for i in 0..fc.len() {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(fc[i]);
    }
    let mut out: Vec<Vec<Cell>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .filter(|g| g.len() >= min_size)
        .collect();
    out.sort_by_key(|g| g[0]);
    out
}

#[derive(PartialEq)]
struct Item(f64, Cell);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// 8-connected Dijkstra; diagonal steps need both orthogonal cells open.
pub fn dijkstra8(open: &Grid<bool>, goals: &[Cell], h: f64) -> Grid<f64> {
    let mut d = Grid::filled(open.width(), open.height(), f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for &g in goals {
        d[g] = 0.0;
        heap.push(Item(0.0, g));
    }
    let is_open = |c: Cell| open.get(c).copied().unwrap_or(false);
    while let Some(Item(v, c)) = heap.pop() {
        if v > d[c] {
            continue;
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let n = Cell::new(c.x + dx, c.y + dy);
                if !is_open(n) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 {
                    if !is_open(Cell::new(c.x + dx, c.y)) || !is_open(Cell::new(c.x, c.y + dy)) {
                        continue;
                    }
                    h * std::f64::consts::SQRT_2
                } else {
                    h
                };
                if v + step < d[n] {
                    d[n] = v + step;
                    heap.push(Item(v + step, n));
                }
            }
        }
    }
    d
}

pub fn random_open_grid(rng: &mut impl Rng, w: usize, h: usize, p_block: f64) -> Grid<bool> {
    let mut g = Grid::filled(w, h, true);
    for c in g.cells().collect::<Vec<_>>() {
        g[c] = !rng.gen_bool(p_block);
    }
    g
}

/// Entry and exit parameters of the ray `o + t·d` through the closed box of
/// cell `c`, if it intersects.
pub fn ray_box(o: (f64, f64), d: (f64, f64), c: Cell, h: f64) -> Option<(f64, f64)> {
    let lo = (c.x as f64 * h, c.y as f64 * h);
    let hi = (lo.0 + h, lo.1 + h);
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for (oi, di, l, u) in [(o.0, d.0, lo.0, hi.0), (o.1, d.1, lo.1, hi.1)] {
        if di.abs() < 1e-15 {
            if oi < l || oi > u {
                return None;
            }
        } else {
            let (a, b) = ((l - oi) / di, (u - oi) / di);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// True if some ray at one of `angles` reaches cell `c` within `range`
/// without first passing through the interior of an obstacle cell.
pub fn seen_by_some_ray(
    env: &Environment,
    origin: (f64, f64),
    angles: &[f64],
    range: f64,
    c: Cell,
) -> bool {
    let h = env.cell_size();
    let obstacles: Vec<Cell> = env.terrain().cells().filter(|&o| !env.is_free(o)).collect();
    angles.iter().any(|&a| {
        let d = (a.cos(), a.sin());
        let Some((enter, _)) = ray_box(origin, d, c, h) else {
            return false;
        };
        if enter > range + 1e-9 {
            return false;
        }
        obstacles.iter().all(|&o| {
            if o == c {
                return true;
            }
            match ray_box(origin, d, o, h) {
                // Blocking means crossing the interior before reaching `c`.
                Some((t0, t1)) => t1 - t0 <= 1e-9 || t0 >= enter - 1e-9,
                None => true,
            }
        })
    })
}

pub fn set_of(ids: &[usize]) -> BTreeSet<usize> {
    ids.iter().copied().collect()
}
