//! Dense row-major grids and integer cell coordinates.

use serde::{Deserialize, Serialize};

/// Integer cell coordinate. `x` is the column, `y` the row.
///
/// Ordering is row-major (`y` first, then `x`), which is the order used for
/// every deterministic tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub y: i32,
    pub x: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// The eight surrounding cells, in row-major order.
    pub fn neighbors8(self) -> impl Iterator<Item = Cell> {
        NEIGHBORS8.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }

    /// Chebyshev distance.
    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

pub(crate) const NEIGHBORS8: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// A `width × height` row-major grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length mismatch");
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        Cell::new((idx % self.width) as i32, (idx / self.width) as i32)
    }

    pub fn get(&self, c: Cell) -> Option<&T> {
        self.index(c).map(|i| &self.data[i])
    }

    pub fn get_mut(&mut self, c: Cell) -> Option<&mut T> {
        self.index(c).map(move |i| &mut self.data[i])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.data.len()).map(|i| self.cell_at(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        self.data.iter().enumerate().map(|(i, v)| (self.cell_at(i), v))
    }
}

impl<T> std::ops::Index<Cell> for Grid<T> {
    type Output = T;

    fn index(&self, c: Cell) -> &T {
        let i = Grid::index(self, c).unwrap_or_else(|| panic!("cell {c} outside grid"));
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, c: Cell) -> &mut T {
        let i = Grid::index(self, c).unwrap_or_else(|| panic!("cell {c} outside grid"));
        &mut self.data[i]
    }
}

/// Center of `c` in meters for a grid of spacing `h`.
pub fn cell_center(c: Cell, h: f64) -> (f64, f64) {
    ((c.x as f64 + 0.5) * h, (c.y as f64 + 0.5) * h)
}

/// The cell containing the metric point `(x, y)`.
pub fn cell_of(x: f64, y: f64, h: f64) -> Cell {
    Cell::new((x / h).floor() as i32, (y / h).floor() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_order_is_row_major() {
        let mut cells = vec![Cell::new(2, 0), Cell::new(0, 1), Cell::new(1, 0)];
        cells.sort();
        assert_eq!(cells, vec![Cell::new(1, 0), Cell::new(2, 0), Cell::new(0, 1)]);
    }

    #[test]
    fn cell_serializes_as_pair() {
        let s = serde_json::to_string(&Cell::new(3, 7)).unwrap();
        assert_eq!(s, "[3,7]");
        let c: Cell = serde_json::from_str("[4,5]").unwrap();
        assert_eq!(c, Cell::new(4, 5));
    }

    #[test]
    fn grid_bounds() {
        let g = Grid::filled(3, 2, 0u8);
        assert!(g.contains(Cell::new(2, 1)));
        assert!(!g.contains(Cell::new(3, 0)));
        assert!(!g.contains(Cell::new(0, -1)));
        assert_eq!(g.cell_at(4), Cell::new(1, 1));
    }
}
