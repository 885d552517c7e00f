//! The agent's belief map and frontier extraction.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::grid::{cell_center, Cell, Grid};
use crate::world::{Observation, SeenState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Unknown,
    Free,
    Obstacle,
}

impl CellState {
    pub fn as_char(self) -> char {
        match self {
            CellState::Unknown => '?',
            CellState::Free => '.',
            CellState::Obstacle => '#',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("observation reports cell {cell} outside the {width}x{height} map ({what})")]
    OutOfBounds {
        cell: Cell,
        width: usize,
        height: usize,
        what: &'static str,
    },
}

/// Accumulated occupancy plus per-cell object and room label counts.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefMap {
    cell_size: f64,
    state: Grid<CellState>,
    objects: BTreeMap<Cell, BTreeMap<String, u32>>,
    rooms: BTreeMap<Cell, BTreeMap<String, u32>>,
}

impl BeliefMap {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Self {
        Self {
            cell_size,
            state: Grid::filled(width, height, CellState::Unknown),
            objects: BTreeMap::new(),
            rooms: BTreeMap::new(),
        }
    }

    /// Builds a map directly from states, with empty semantic layers.
    pub fn from_states(state: Grid<CellState>, cell_size: f64) -> Self {
        Self {
            cell_size,
            state,
            objects: BTreeMap::new(),
            rooms: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.state.width()
    }

    pub fn height(&self) -> usize {
        self.state.height()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn states(&self) -> &Grid<CellState> {
        &self.state
    }

    /// Out-of-bounds cells read as `Obstacle`.
    pub fn state(&self, c: Cell) -> CellState {
        self.state.get(c).copied().unwrap_or(CellState::Obstacle)
    }

    pub fn set_state(&mut self, c: Cell, s: CellState) {
        self.state[c] = s;
    }

    pub fn object_layer(&self) -> &BTreeMap<Cell, BTreeMap<String, u32>> {
        &self.objects
    }

    pub fn room_layer(&self) -> &BTreeMap<Cell, BTreeMap<String, u32>> {
        &self.rooms
    }

    pub fn add_object_report(&mut self, label: &str, c: Cell) {
        *self
            .objects
            .entry(c)
            .or_default()
            .entry(label.to_string())
            .or_insert(0) += 1;
    }

    pub fn add_room_report(&mut self, label: &str, c: Cell) {
        *self
            .rooms
            .entry(c)
            .or_default()
            .entry(label.to_string())
            .or_insert(0) += 1;
    }

    /// Most-reported object label at `c` (ties: lexicographically smallest).
    pub fn object_label(&self, c: Cell) -> Option<&str> {
        self.objects.get(&c).and_then(plurality)
    }

    /// Cells whose plurality object label is `label`, row-major.
    pub fn cells_labelled(&self, label: &str) -> Vec<Cell> {
        self.objects
            .iter()
            .filter(|(_, counts)| plurality(counts) == Some(label))
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn known_fraction(&self) -> f64 {
        let s = self.state.as_slice();
        let known = s.iter().filter(|&&v| v != CellState::Unknown).count();
        known as f64 / s.len() as f64
    }

    /// Merges one observation. The whole observation is rejected if any
    /// reported cell lies outside the map.
    pub fn integrate(&mut self, obs: &Observation) -> Result<(), MapError> {
        let check = |c: Cell, what: &'static str| {
            if self.state.contains(c) {
                Ok(())
            } else {
                Err(MapError::OutOfBounds {
                    cell: c,
                    width: self.width(),
                    height: self.height(),
                    what,
                })
            }
        };
        for (c, _) in &obs.visible_cells {
            check(*c, "visible cell")?;
        }
        for (_, c) in &obs.object_reports {
            check(*c, "object report")?;
        }
        for (_, c) in &obs.room_reports {
            check(*c, "room report")?;
        }

        for &(c, seen) in &obs.visible_cells {
            self.state[c] = match seen {
                SeenState::Free => CellState::Free,
                SeenState::Obstacle => CellState::Obstacle,
            };
        }
        for (label, c) in &obs.object_reports {
            self.add_object_report(label, *c);
        }
        for (label, c) in &obs.room_reports {
            self.add_room_report(label, *c);
        }
        Ok(())
    }

    /// One character per cell (`?`, `.`, `#`), rows separated by newlines.
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.height());
        for y in 0..self.height() {
            for x in 0..self.width() {
                out.push(self.state[Cell::new(x as i32, y as i32)].as_char());
            }
            out.push('\n');
        }
        out
    }

    /// Semantic layers as JSON: `{"objects": [...], "rooms": [...]}`.
    pub fn semantic_layers_json(&self) -> serde_json::Value {
        let layer = |m: &BTreeMap<Cell, BTreeMap<String, u32>>| {
            m.iter()
                .map(|(c, counts)| json!({ "cell": c, "counts": counts }))
                .collect::<Vec<_>>()
        };
        json!({ "objects": layer(&self.objects), "rooms": layer(&self.rooms) })
    }
}

fn plurality(counts: &BTreeMap<String, u32>) -> Option<&str> {
    // BTreeMap iterates in label order, so the first maximum wins ties.
    let mut best: Option<(&str, u32)> = None;
    for (label, &n) in counts {
        if best.map_or(true, |(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: usize,
    /// Row-major.
    pub cells: Vec<Cell>,
    /// Meters.
    pub centroid: (f64, f64),
}

impl Frontier {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// The member cell nearest the centroid (ties: row-major first).
    pub fn anchor_cell(&self, h: f64) -> Cell {
        let mut best = self.cells[0];
        let mut best_d = f64::INFINITY;
        for &c in &self.cells {
            let (x, y) = cell_center(c, h);
            let d = (x - self.centroid.0).powi(2) + (y - self.centroid.1).powi(2);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }
}

/// Free cell with at least one Unknown 8-neighbor.
pub fn is_frontier_cell(map: &BeliefMap, c: Cell) -> bool {
    map.state(c) == CellState::Free
        && c.neighbors8()
            .any(|n| map.states().get(n) == Some(&CellState::Unknown))
}

/// Maximal 8-connected clusters of frontier cells with at least
/// `min_frontier_size` members. Ids follow the row-major order of each
/// cluster's first cell.
pub fn extract_frontiers(map: &BeliefMap, min_frontier_size: usize) -> Vec<Frontier> {
    let states = map.states();
    let mut is_frontier = Grid::filled(states.width(), states.height(), false);
    for c in states.cells() {
        if is_frontier_cell(map, c) {
            is_frontier[c] = true;
        }
    }

    let h = map.cell_size();
    let mut visited = Grid::filled(states.width(), states.height(), false);
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for seed in states.cells() {
        if !is_frontier[seed] || visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for n in c.neighbors8() {
                if is_frontier.get(n) == Some(&true) && !visited[n] {
                    visited[n] = true;
                    queue.push_back(n);
                }
            }
        }
        if cells.len() < min_frontier_size.max(1) {
            continue;
        }
        cells.sort();
        let n = cells.len() as f64;
        let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let (x, y) = cell_center(c, h);
            (sx + x, sy + y)
        });
        out.push(Frontier {
            id: out.len(),
            cells,
            centroid: (sx / n, sy / n),
        });
    }
    out
}

/// Semantic summary of a frontier's surroundings, as consumed by the experts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierContext {
    pub frontier_id: usize,
    /// `(label, number of cells)` sorted by label.
    pub nearby_objects: Vec<(String, u32)>,
    pub room_label: String,
    pub local_density: f64,
}

pub const UNKNOWN_ROOM: &str = "unknown";

pub fn frontier_context(map: &BeliefMap, f: &Frontier, context_radius: f64) -> FrontierContext {
    let h = map.cell_size();
    let r2 = context_radius * context_radius;
    let within = |c: Cell| {
        let (x, y) = cell_center(c, h);
        (x - f.centroid.0).powi(2) + (y - f.centroid.1).powi(2) <= r2
    };

    let mut nearby: BTreeMap<String, u32> = BTreeMap::new();
    for (&c, counts) in map.object_layer() {
        if within(c) {
            if let Some(label) = plurality(counts) {
                *nearby.entry(label.to_string()).or_insert(0) += 1;
            }
        }
    }

    // Votes from the frontier cells and their Free neighbors, each cell once.
    let mut voters: Vec<Cell> = f.cells.clone();
    for &c in &f.cells {
        voters.extend(c.neighbors8().filter(|&n| map.state(n) == CellState::Free));
    }
    voters.sort();
    voters.dedup();
    let mut votes: BTreeMap<&str, u32> = BTreeMap::new();
    for c in voters {
        if let Some(counts) = map.room_layer().get(&c) {
            for (label, n) in counts {
                *votes.entry(label.as_str()).or_insert(0) += n;
            }
        }
    }
    let mut room_label = UNKNOWN_ROOM.to_string();
    let mut best = 0;
    for (label, n) in votes {
        if n > best {
            best = n;
            room_label = label.to_string();
        }
    }

    // Scan only the bounding box of the radius.
    let (cx, cy) = f.centroid;
    let span = |v: f64, lim: usize| {
        let lo = ((v - context_radius) / h).floor().max(0.0) as i32;
        let hi = (((v + context_radius) / h).floor() as i32).min(lim as i32 - 1);
        lo..=hi
    };
    let (mut known, mut labelled) = (0u32, 0u32);
    for y in span(cy, map.height()) {
        for x in span(cx, map.width()) {
            let c = Cell::new(x, y);
            if !within(c) || map.state(c) == CellState::Unknown {
                continue;
            }
            known += 1;
            if map.object_layer().contains_key(&c) {
                labelled += 1;
            }
        }
    }
    let local_density = if known == 0 {
        0.0
    } else {
        labelled as f64 / known as f64
    };

    FrontierContext {
        frontier_id: f.id,
        nearby_objects: nearby.into_iter().collect(),
        room_label,
        local_density,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Observation, Pose};

    fn obs(visible: Vec<(Cell, SeenState)>) -> Observation {
        Observation {
            pose: Pose::new(0.0, 0.0, 0.0),
            depth: vec![],
            visible_cells: visible,
            object_reports: vec![],
            room_reports: vec![],
        }
    }

    fn parse(rows: &[&str]) -> BeliefMap {
        let h = rows.len();
        let w = rows[0].len();
        let states = rows
            .iter()
            .flat_map(|r| {
                r.chars().map(|ch| match ch {
                    '.' => CellState::Free,
                    '#' => CellState::Obstacle,
                    _ => CellState::Unknown,
                })
            })
            .collect();
        BeliefMap::from_states(Grid::from_vec(w, h, states), 1.0)
    }

    #[test]
    fn integrate_writes_exactly_visible_cells() {
        let mut m = BeliefMap::new(8, 8, 0.25);
        let mut vis: Vec<_> = (1..6).map(|x| (Cell::new(x, 2), SeenState::Free)).collect();
        vis.push((Cell::new(6, 2), SeenState::Obstacle));
        m.integrate(&obs(vis)).unwrap();
        let known = m
            .states()
            .as_slice()
            .iter()
            .filter(|s| **s != CellState::Unknown)
            .count();
        assert_eq!(known, 6);
        assert_eq!(m.state(Cell::new(6, 2)), CellState::Obstacle);
    }

    #[test]
    fn object_and_room_counters() {
        let mut m = BeliefMap::new(4, 4, 0.25);
        let c = Cell::new(1, 1);
        let mut o = obs(vec![(c, SeenState::Free)]);
        o.object_reports = vec![("chair".into(), c)];
        o.room_reports = vec![("bedroom".into(), c)];
        m.integrate(&o).unwrap();
        m.integrate(&o).unwrap();
        o.room_reports = vec![("kitchen".into(), c)];
        m.integrate(&o).unwrap();
        assert_eq!(m.object_layer()[&c]["chair"], 3);
        let rooms = &m.room_layer()[&c];
        assert_eq!(rooms["bedroom"], 2);
        assert_eq!(rooms["kitchen"], 1);
    }

    #[test]
    fn two_chair_reports_count_two() {
        let mut m = BeliefMap::new(4, 4, 0.25);
        let c = Cell::new(2, 2);
        let mut o = obs(vec![]);
        o.object_reports = vec![("chair".into(), c), ("chair".into(), c)];
        m.integrate(&o).unwrap();
        assert_eq!(m.object_layer()[&c]["chair"], 2);
    }

    #[test]
    fn integrate_rejects_out_of_bounds() {
        let mut m = BeliefMap::new(4, 4, 0.25);
        let mut o = obs(vec![(Cell::new(1, 1), SeenState::Free)]);
        o.object_reports = vec![("chair".into(), Cell::new(4, 0))];
        let before = m.clone();
        assert!(matches!(m.integrate(&o), Err(MapError::OutOfBounds { .. })));
        assert_eq!(m, before);
    }

    #[test]
    fn no_free_cells_no_frontiers() {
        let m = parse(&["???", "?#?", "???"]);
        assert!(extract_frontiers(&m, 1).is_empty());
    }

    #[test]
    fn single_free_cell_in_unknown() {
        let m = parse(&["???", "?.?", "???"]);
        let f = extract_frontiers(&m, 1);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].cells, vec![Cell::new(1, 1)]);
        assert_eq!(f[0].centroid, (1.5, 1.5));
        assert!(extract_frontiers(&m, 2).is_empty());
    }

    #[test]
    fn enclosed_room_has_no_frontier() {
        let m = parse(&["?#####?", "?#...#?", "?#...#?", "?#####?"]);
        assert!(extract_frontiers(&m, 1).is_empty());
    }

    #[test]
    fn ids_follow_row_major_order() {
        let m = parse(&["?....?", "#....#", "#....#", "?.##.?"]);
        let f = extract_frontiers(&m, 1);
        assert!(f.len() >= 2);
        for w in f.windows(2) {
            assert!(w[0].cells[0] < w[1].cells[0]);
        }
        assert!(f.iter().enumerate().all(|(i, fr)| fr.id == i));
    }

    #[test]
    fn diagonal_cells_join_one_frontier() {
        let m = parse(&["?????", "?.???", "??.??", "?????"]);
        let f = extract_frontiers(&m, 1);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].size(), 2);
    }

    fn frontier_at(map: &BeliefMap, cell: Cell) -> Frontier {
        extract_frontiers(map, 1)
            .into_iter()
            .find(|f| f.cells.contains(&cell))
            .unwrap()
    }

    #[test]
    fn context_empty_layers() {
        let m = parse(&["?????", "?...?", "?????"]);
        let f = frontier_at(&m, Cell::new(1, 1));
        let ctx = frontier_context(&m, &f, 1.5);
        assert!(ctx.nearby_objects.is_empty());
        assert_eq!(ctx.room_label, UNKNOWN_ROOM);
        assert_eq!(ctx.local_density, 0.0);
    }

    #[test]
    fn context_single_nearby_object() {
        let mut m = parse(&["?????", "?...?", "?????"]);
        m.add_object_report("chair", Cell::new(2, 1));
        let f = frontier_at(&m, Cell::new(1, 1));
        let ctx = frontier_context(&m, &f, 1.5);
        assert_eq!(ctx.nearby_objects, vec![("chair".to_string(), 1)]);
        assert!((ctx.local_density - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn context_room_tie_breaks_lexicographically() {
        let mut m = parse(&["?????", "?...?", "?????"]);
        for _ in 0..3 {
            m.add_room_report("study", Cell::new(1, 1));
            m.add_room_report("hall", Cell::new(3, 1));
        }
        let f = frontier_at(&m, Cell::new(1, 1));
        assert_eq!(frontier_context(&m, &f, 1.5).room_label, "hall");
    }

    #[test]
    fn ascii_snapshot() {
        let m = parse(&["?.#", "..?"]);
        assert_eq!(m.to_ascii(), "?.#\n..?\n");
    }
}
