//! Grid coordinates, the static cell lattice, and line-of-sight rasterization.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// A cell coordinate. `x` grows to the right, `y` grows downward (row index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    /// Direction from `self` to an orthogonally adjacent cell.
    pub fn direction_to(self, other: Cell) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| self.step(*d) == other)
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// The four unit moves. The declaration order is the canonical tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub const fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub const fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Obstacle,
    /// A rule-governed cell; the character is the door id from the scenario map.
    Door(char),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("cell {0} is out of bounds")]
    OutOfBounds(Cell),
    #[error("grid dimensions must be at least 1x1, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
}

/// Static world topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
}

impl GridMap {
    pub fn new(width: usize, height: usize) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        Ok(Self { width, height, cells: vec![CellKind::Free; width * height] })
    }

    /// Build from ASCII rows (`.` free, `#` obstacle, `A`-`Z` doors).
    /// Returns `None` on ragged rows or unknown characters.
    pub fn from_ascii(rows: &[&str]) -> Option<Self> {
        let height = rows.len();
        let width = rows.first()?.chars().count();
        let mut map = GridMap::new(width, height).ok()?;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return None;
            }
            for (x, ch) in row.chars().enumerate() {
                let kind = match ch {
                    '.' => CellKind::Free,
                    '#' => CellKind::Obstacle,
                    'A'..='Z' => CellKind::Door(ch),
                    _ => return None,
                };
                map.cells[y * width + x] = kind;
            }
        }
        Some(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c).then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        Cell::new((idx % self.width) as i32, (idx / self.width) as i32)
    }

    pub fn kind(&self, c: Cell) -> Option<CellKind> {
        self.index(c).map(|i| self.cells[i])
    }

    pub fn set(&mut self, c: Cell, kind: CellKind) -> Result<(), GridError> {
        let i = self.index(c).ok_or(GridError::OutOfBounds(c))?;
        self.cells[i] = kind;
        Ok(())
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        matches!(self.kind(c), Some(CellKind::Obstacle))
    }

    /// In bounds and not an obstacle.
    pub fn is_passable(&self, c: Cell) -> bool {
        matches!(self.kind(c), Some(CellKind::Free | CellKind::Door(_)))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).map(move |i| self.cell_at(i))
    }

    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = (Direction, Cell)> + '_ {
        Direction::ALL.into_iter().map(move |d| (d, c.step(d))).filter(move |(_, n)| self.in_bounds(*n))
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() + self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(match self.cells[y * self.width + x] {
                    CellKind::Free => '.',
                    CellKind::Obstacle => '#',
                    CellKind::Door(id) => id,
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Cells on the integer midpoint line from `a` to `b`, both endpoints included.
///
/// The rasterization is always run from the lexicographically smaller endpoint
/// so the resulting cell set does not depend on argument order.
pub fn raster_line(a: Cell, b: Cell) -> Vec<Cell> {
    let (start, end, reversed) = if a <= b { (a, b, false) } else { (b, a, true) };
    let dx = (end.x - start.x).abs();
    let dy = -(end.y - start.y).abs();
    let sx = if start.x < end.x { 1 } else { -1 };
    let sy = if start.y < end.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (start.x, start.y);
    let mut cells = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        cells.push(Cell::new(x, y));
        if x == end.x && y == end.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    if reversed {
        cells.reverse();
    }
    cells
}

/// True iff no obstacle lies strictly between `a` and `b` on the rasterized line.
/// The endpoints themselves never block, so an obstacle endpoint is visible.
pub fn line_of_sight(map: &GridMap, a: Cell, b: Cell) -> Result<bool, GridError> {
    for c in [a, b] {
        if !map.in_bounds(c) {
            return Err(GridError::OutOfBounds(c));
        }
    }
    let line = raster_line(a, b);
    let interior = &line[1..line.len().saturating_sub(1).max(1)];
    Ok(interior.iter().all(|c| !map.is_obstacle(*c)))
}
