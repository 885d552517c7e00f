//! Procedural floorplans: rectangular room partitions with door gaps, and
//! width-1 corridor mazes.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{cell_center, Cell, Grid, NEIGHBORS8};
use crate::planner::{fmm_field, TraversalMask};
use crate::world::{ObjectSpec, RoomSpec, Scenario, ScenarioDoc, StartSpec};

pub const ROOM_TYPES: [&str; 7] = [
    "living_room",
    "kitchen",
    "bedroom",
    "bathroom",
    "study",
    "dining_room",
    "hallway",
];

/// Objects each room type may hold, with relative placement weights.
const PLACEMENT: [(&str, &[(&str, u32)]); 7] = [
    (
        "living_room",
        &[
            ("sofa", 4),
            ("armchair", 3),
            ("coffee_table", 3),
            ("bookshelf", 2),
            ("television", 3),
            ("house_plant", 2),
            ("vase", 2),
            ("basketball", 1),
            ("laptop", 1),
        ],
    ),
    (
        "kitchen",
        &[
            ("fridge", 4),
            ("stove", 4),
            ("sink", 3),
            ("chair", 2),
            ("apple", 3),
            ("bowl", 3),
            ("mug", 3),
            ("garbage_can", 2),
            ("spray_bottle", 1),
        ],
    ),
    (
        "bedroom",
        &[
            ("bed", 4),
            ("nightstand", 3),
            ("dresser", 3),
            ("alarm_clock", 3),
            ("television", 1),
            ("baseball_bat", 2),
            ("basketball", 2),
            ("laptop", 1),
            ("house_plant", 1),
        ],
    ),
    (
        "bathroom",
        &[
            ("toilet", 4),
            ("sink", 3),
            ("bathtub", 3),
            ("towel_rack", 3),
            ("spray_bottle", 3),
            ("garbage_can", 2),
        ],
    ),
    (
        "study",
        &[
            ("desk", 4),
            ("chair", 3),
            ("bookshelf", 3),
            ("laptop", 3),
            ("mug", 2),
            ("alarm_clock", 1),
            ("vase", 1),
            ("garbage_can", 1),
        ],
    ),
    (
        "dining_room",
        &[
            ("dining_table", 4),
            ("chair", 4),
            ("bowl", 3),
            ("apple", 2),
            ("mug", 2),
            ("vase", 2),
        ],
    ),
    (
        "hallway",
        &[
            ("shoe_rack", 4),
            ("house_plant", 3),
            ("vase", 2),
            ("baseball_bat", 2),
            ("basketball", 2),
        ],
    ),
];

pub const TARGET_LABELS: [&str; 12] = [
    "alarm_clock",
    "apple",
    "baseball_bat",
    "basketball",
    "bowl",
    "garbage_can",
    "house_plant",
    "laptop",
    "mug",
    "spray_bottle",
    "television",
    "vase",
];

const MIN_ROOM_SIDE: i32 = 4;
const DOOR_WIDTH: i32 = 3;
const MAX_RETRIES: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid parameter {0}: {1}")]
    Param(&'static str, String),
    #[error("no reachable target/start placement after {0} attempts")]
    Unreachable(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    pub rooms: usize,
    /// Objects per interior free cell.
    pub object_density: f64,
    pub cell_size: f64,
    /// Minimum ground-truth geodesic from start to target, meters.
    pub min_start_distance: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            width: 40,
            height: 40,
            rooms: 4,
            object_density: 0.03,
            cell_size: 0.25,
            min_start_distance: 2.0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let min = (MIN_ROOM_SIDE + 2) as usize;
        if self.width < min || self.height < min {
            return Err(GenError::Param(
                "size",
                format!("grid must be at least {min}x{min}"),
            ));
        }
        if self.rooms == 0 {
            return Err(GenError::Param("rooms", "must be at least 1".into()));
        }
        if !(self.object_density > 0.0 && self.object_density <= 1.0) {
            return Err(GenError::Param("object_density", "must be in (0, 1]".into()));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(GenError::Param("cell_size", "must be positive".into()));
        }
        if !(self.min_start_distance >= 0.0) {
            return Err(GenError::Param("min_start_distance", "must be >= 0".into()));
        }
        Ok(())
    }
}

/// Inclusive interior rectangle.
#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
    fn area(&self) -> i32 {
        self.w() * self.h()
    }
}

struct Layout {
    free: Grid<bool>,
    rooms: Vec<Rect>,
    doors: BTreeSet<Cell>,
}

/// Wall positions `k` splitting `r` along x (vertical wall) that keep both
/// sides wide enough and stay clear of doors in the bounding walls.
fn wall_choices(r: &Rect, vertical: bool, doors: &BTreeSet<Cell>) -> Vec<i32> {
    let (lo, hi) = if vertical { (r.x0, r.x1) } else { (r.y0, r.y1) };
    (lo + MIN_ROOM_SIDE..=hi - MIN_ROOM_SIDE)
        .filter(|&k| {
            !doors.iter().any(|d| {
                if vertical {
                    (d.y == r.y0 - 1 || d.y == r.y1 + 1) && (d.x - k).abs() <= 1
                } else {
                    (d.x == r.x0 - 1 || d.x == r.x1 + 1) && (d.y - k).abs() <= 1
                }
            })
        })
        .collect()
}

fn partition(w: usize, h: usize, rooms: usize, rng: &mut impl Rng) -> Layout {
    let mut free = Grid::filled(w, h, false);
    let whole = Rect {
        x0: 1,
        y0: 1,
        x1: w as i32 - 2,
        y1: h as i32 - 2,
    };
    for y in whole.y0..=whole.y1 {
        for x in whole.x0..=whole.x1 {
            free[Cell::new(x, y)] = true;
        }
    }
    let mut out = vec![whole];
    let mut doors = BTreeSet::new();
    let mut stuck = BTreeSet::new();
    while out.len() < rooms {
        let Some(i) = (0..out.len())
            .filter(|i| !stuck.contains(i))
            .max_by_key(|&i| (out[i].area(), std::cmp::Reverse(i)))
        else {
            break;
        };
        let r = out[i];
        let prefer_vertical = r.w() > r.h() || (r.w() == r.h() && rng.gen_bool(0.5));
        let mut split = None;
        for vertical in [prefer_vertical, !prefer_vertical] {
            let ks = wall_choices(&r, vertical, &doors);
            if let Some(&k) = ks.choose(rng) {
                split = Some((vertical, k));
                break;
            }
        }
        let Some((vertical, k)) = split else {
            stuck.insert(i);
            continue;
        };
        let (a, b, span) = if vertical {
            (
                Rect { x1: k - 1, ..r },
                Rect { x0: k + 1, ..r },
                (r.y0, r.y1),
            )
        } else {
            (
                Rect { y1: k - 1, ..r },
                Rect { y0: k + 1, ..r },
                (r.x0, r.x1),
            )
        };
        let door = rng.gen_range(span.0..=span.1 - DOOR_WIDTH + 1);
        for t in span.0..=span.1 {
            let c = if vertical { Cell::new(k, t) } else { Cell::new(t, k) };
            if (door..door + DOOR_WIDTH).contains(&t) {
                doors.insert(c);
            } else {
                free[c] = false;
            }
        }
        out[i] = a;
        out.push(b);
        stuck.clear();
    }
    Layout {
        free,
        rooms: out,
        doors,
    }
}

fn grid_rows(free: &Grid<bool>) -> Vec<String> {
    (0..free.height())
        .map(|y| {
            (0..free.width())
                .map(|x| if free[Cell::new(x as i32, y as i32)] { '.' } else { '#' })
                .collect()
        })
        .collect()
}

/// Free cells with no obstacle among their 8 neighbors.
fn open_cells(free: &Grid<bool>) -> Grid<bool> {
    let mut out = Grid::filled(free.width(), free.height(), false);
    for c in free.cells() {
        out[c] = free[c]
            && NEIGHBORS8
                .iter()
                .all(|&(dx, dy)| free.get(c.offset(dx, dy)).copied().unwrap_or(false));
    }
    out
}

fn weighted<'a>(table: &[(&'a str, u32)], rng: &mut impl Rng) -> &'a str {
    table
        .choose_weighted(rng, |(_, w)| *w)
        .expect("placement tables are nonempty")
        .0
}

fn placement_for(room: &str) -> &'static [(&'static str, u32)] {
    PLACEMENT
        .iter()
        .find(|(r, _)| *r == room)
        .map(|(_, t)| *t)
        .expect("every room type has a placement table")
}

fn room_labels(n: usize, rng: &mut impl Rng) -> Vec<&'static str> {
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let mut round = ROOM_TYPES.to_vec();
        round.shuffle(rng);
        labels.extend(round);
    }
    labels.truncate(n);
    labels
}

/// One scenario from a seeded RNG.
pub fn generate_scenario(params: &GenParams, rng: &mut impl Rng) -> Result<ScenarioDoc, GenError> {
    params.validate()?;
    let layout = partition(params.width, params.height, params.rooms, rng);
    if layout.rooms.len() < params.rooms {
        return Err(GenError::Param(
            "rooms",
            format!(
                "a {}x{} grid fits only {} rooms",
                params.width,
                params.height,
                layout.rooms.len()
            ),
        ));
    }
    let labels = room_labels(layout.rooms.len(), rng);
    let open = open_cells(&layout.free);

    // Door cells take the label of an adjacent room cell.
    let mut room_rects: Vec<Vec<[i32; 4]>> = layout
        .rooms
        .iter()
        .map(|r| vec![[r.x0, r.y0, r.x1, r.y1]])
        .collect();
    let room_of = |c: Cell| {
        layout.rooms.iter().position(|r| {
            (r.x0..=r.x1).contains(&c.x) && (r.y0..=r.y1).contains(&c.y)
        })
    };
    for &d in &layout.doors {
        let owner = [(-1, 0), (0, -1), (1, 0), (0, 1)]
            .iter()
            .find_map(|&(dx, dy)| room_of(d.offset(dx, dy)))
            .expect("door cells border a room");
        room_rects[owner].push([d.x, d.y, d.x, d.y]);
    }
    let rooms: Vec<RoomSpec> = labels
        .iter()
        .zip(room_rects)
        .map(|(l, rects)| RoomSpec {
            label: l.to_string(),
            rects,
        })
        .collect();

    let slots: Vec<Vec<Cell>> = layout
        .rooms
        .iter()
        .map(|r| {
            (r.y0..=r.y1)
                .flat_map(|y| (r.x0..=r.x1).map(move |x| Cell::new(x, y)))
                .filter(|&c| open[c])
                .collect()
        })
        .collect();
    let interior: usize = slots.iter().map(Vec::len).sum();
    let n_objects = ((interior as f64 * params.object_density).round() as usize).max(2);

    for _ in 0..MAX_RETRIES {
        if let Some(doc) = try_place(params, &layout, &rooms, &labels, &slots, n_objects, rng) {
            return Ok(doc);
        }
    }
    Err(GenError::Unreachable(MAX_RETRIES))
}

fn try_place(
    params: &GenParams,
    layout: &Layout,
    rooms: &[RoomSpec],
    labels: &[&str],
    slots: &[Vec<Cell>],
    n_objects: usize,
    rng: &mut impl Rng,
) -> Option<ScenarioDoc> {
    let mut taken = BTreeSet::new();
    let mut objects = Vec::new();
    let weights: Vec<usize> = slots.iter().map(Vec::len).collect();
    if weights.iter().all(|&w| w == 0) {
        return None;
    }
    for _ in 0..n_objects {
        let ri = *(0..slots.len())
            .collect::<Vec<_>>()
            .choose_weighted(rng, |&i| weights[i])
            .ok()?;
        let free: Vec<Cell> = slots[ri].iter().copied().filter(|c| !taken.contains(c)).collect();
        let Some(&c) = free.choose(rng) else { continue };
        taken.insert(c);
        objects.push(ObjectSpec {
            label: weighted(placement_for(labels[ri]), rng).to_string(),
            x: c.x,
            y: c.y,
        });
    }
    let present: BTreeSet<&str> = objects
        .iter()
        .map(|o| o.label.as_str())
        .filter(|l| TARGET_LABELS.contains(l))
        .collect();
    let target = present.iter().copied().collect::<Vec<_>>().choose(rng)?.to_string();

    let target_cells: Vec<Cell> = objects
        .iter()
        .filter(|o| o.label == target)
        .map(|o| Cell::new(o.x, o.y))
        .collect();
    let mask = TraversalMask::from_grid(layout.free.clone(), params.cell_size);
    let truth = fmm_field(&mask, &target_cells).ok()?;
    let open = open_cells(&layout.free);
    let starts: Vec<Cell> = layout
        .free
        .cells()
        .filter(|&c| open[c] && !taken.contains(&c))
        .filter(|&c| {
            let d = truth.value(c);
            d.is_finite() && d >= params.min_start_distance
        })
        .collect();
    let start = *starts.choose(rng)?;
    let (x, y) = cell_center(start, params.cell_size);
    let theta = rng.gen_range(0..12) as f64 * std::f64::consts::PI / 6.0;
    let doc = ScenarioDoc {
        cell_size: params.cell_size,
        grid: grid_rows(&layout.free),
        rooms: rooms.to_vec(),
        objects,
        start: StartSpec { x, y, theta },
        target,
    };
    // Reachability under the inflated mask as well, so the planner can get there.
    let sc = Scenario::from_doc(&doc).ok()?;
    let inflated = TraversalMask::from_environment(&sc.env, true);
    let f = fmm_field(&inflated, &target_cells).ok()?;
    f.value(start).is_finite().then_some(doc)
}

/// Per-scenario seed for index `i` of a batch.
pub fn scenario_seed(seed: u64, i: u64) -> u64 {
    super::splitmix64(seed ^ super::splitmix64(i.wrapping_add(0x5eed)))
}

/// `n` scenarios, each deterministic in `(seed, index)`.
pub fn generate_scenarios(params: &GenParams, seed: u64, n: usize) -> Result<Vec<ScenarioDoc>, GenError> {
    (0..n as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(seed, i));
            generate_scenario(params, &mut rng)
        })
        .collect()
}

/// A perfect maze of width-1 corridors on a `(2m+1) × (2n+1)` grid, one
/// target object at the corridor cell farthest from the start.
pub fn generate_maze(
    cells_x: usize,
    cells_y: usize,
    cell_size: f64,
    target: &str,
    rng: &mut impl Rng,
) -> Result<ScenarioDoc, GenError> {
    if cells_x < 2 || cells_y < 2 {
        return Err(GenError::Param("size", "maze needs at least 2x2 cells".into()));
    }
    let (w, h) = (2 * cells_x + 1, 2 * cells_y + 1);
    let mut free = Grid::filled(w, h, false);
    let node = |i: i32, j: i32| Cell::new(2 * i + 1, 2 * j + 1);
    let mut seen = Grid::filled(cells_x, cells_y, false);
    let mut stack = vec![(0i32, 0i32)];
    seen[Cell::new(0, 0)] = true;
    free[node(0, 0)] = true;
    while let Some(&(i, j)) = stack.last() {
        let mut next: Vec<(i32, i32)> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|&(di, dj)| (i + di, j + dj))
            .filter(|&(a, b)| seen.get(Cell::new(a, b)) == Some(&false))
            .collect();
        next.sort();
        match next.choose(rng) {
            Some(&(a, b)) => {
                seen[Cell::new(a, b)] = true;
                free[node(a, b)] = true;
                free[Cell::new(i + a + 1, j + b + 1)] = true;
                stack.push((a, b));
            }
            None => {
                stack.pop();
            }
        }
    }
    let start = node(0, 0);
    let mask = TraversalMask::from_grid(free.clone(), cell_size);
    let field = fmm_field(&mask, &[start]).expect("start is free");
    let goal = free
        .cells()
        .filter(|&c| free[c])
        .max_by(|&a, &b| field.value(a).total_cmp(&field.value(b)).then(b.cmp(&a)))
        .expect("maze has free cells");
    let (x, y) = cell_center(start, cell_size);
    Ok(ScenarioDoc {
        cell_size,
        grid: grid_rows(&free),
        rooms: vec![RoomSpec {
            label: "hallway".into(),
            rects: vec![[1, 1, w as i32 - 2, h as i32 - 2]],
        }],
        objects: vec![ObjectSpec {
            label: target.into(),
            x: goal.x,
            y: goal.y,
        }],
        start: StartSpec { x, y, theta: 0.0 },
        target: target.into(),
    })
}
