//! Occupancy-grid world model with labeled semantic goal regions.
//!
//! A [`WorldMap`] is a row-major boolean raster (`true` = obstacle) laid over a
//! rectangular workspace measured in world units. Row 0 is the bottom row, so
//! cell `(col, row)` covers `[col*hx, (col+1)*hx) x [row*hy, (row+1)*hy)`.
//! Maps are immutable once constructed and are shared behind `Arc`.

mod codec;
mod generate;
mod scenario;

use std::collections::VecDeque;
use std::fmt;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use codec::{decode_map, decode_scenario, encode_map, encode_scenario, CodecError};
pub use generate::{generate_map, GenError, GenParams, MapFamily, LABEL_VOCABULARY};
pub use scenario::{MapSource, RobotSpec, Scenario, ScenarioError};

/// Continuous position or vector in world units.
pub type Point = Vector2<f64>;

/// Default workspace extent per axis, in world units.
pub const DEFAULT_WORLD_SIZE: f64 = 2.0;
/// Default grid resolution per axis.
pub const DEFAULT_GRID: usize = 128;

/// Integer grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

impl From<[usize; 2]> for Cell {
    fn from(v: [usize; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.col, c.row]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("point ({x}, {y}) lies outside the map domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("invalid map dimensions: {0}")]
    InvalidDimensions(String),
    #[error("occupancy has {actual} cells, expected {expected}")]
    OccupancyLength { expected: usize, actual: usize },
    #[error("region label {0:?} must be a nonempty lowercase token")]
    BadLabel(String),
    #[error("region {label:?} has no cells")]
    EmptyRegion { label: String },
    #[error("region {label:?} cell {cell} is out of bounds")]
    RegionOutOfBounds { label: String, cell: Cell },
    #[error("region {label:?} cell {cell} lies on an obstacle")]
    RegionOnObstacle { label: String, cell: Cell },
    #[error("region {label:?} is not 4-connected")]
    RegionDisconnected { label: String },
    #[error("map has no obstacle-free cell")]
    NoFreeSpace,
}

/// Instruction grounding failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GoalError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("unknown label {label:?}; available labels: {}", available.join(", "))]
    UnknownLabel { label: String, available: Vec<String> },
}

/// Labeled set of free cells acting as a heat source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticRegion {
    pub label: String,
    pub cells: Vec<Cell>,
}

impl SemanticRegion {
    pub fn new(label: impl Into<String>, cells: Vec<Cell>) -> Self {
        Self {
            label: label.into(),
            cells,
        }
    }

    /// Axis-aligned rectangle of cells `[col0, col0+w) x [row0, row0+h)`.
    pub fn rect(label: impl Into<String>, col0: usize, row0: usize, w: usize, h: usize) -> Self {
        let mut cells = Vec::with_capacity(w * h);
        for row in row0..row0 + h {
            for col in col0..col0 + w {
                cells.push(Cell::new(col, row));
            }
        }
        Self::new(label, cells)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    /// Euclidean distance from `p` to the closest cell rectangle of the region
    /// (zero when `p` lies inside one of its cells).
    pub fn distance_to(&self, p: &Point, map: &WorldMap) -> f64 {
        let (hx, hy) = map.cell_size();
        self.cells
            .iter()
            .map(|c| {
                let x0 = c.col as f64 * hx;
                let y0 = c.row as f64 * hy;
                let dx = (x0 - p.x).max(p.x - (x0 + hx)).max(0.0);
                let dy = (y0 - p.y).max(p.y - (y0 + hy)).max(0.0);
                dx.hypot(dy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean of the region's cell centers.
    pub fn centroid(&self, map: &WorldMap) -> Point {
        let sum = self
            .cells
            .iter()
            .fold(Point::zeros(), |acc, c| acc + map.cell_center(*c));
        sum / self.cells.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    name: String,
    width: usize,
    height: usize,
    world_size: (f64, f64),
    occupancy: Vec<bool>,
    regions: Vec<SemanticRegion>,
}

impl WorldMap {
    /// Builds a map and checks every structural invariant.
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        world_size: (f64, f64),
        occupancy: Vec<bool>,
        regions: Vec<SemanticRegion>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::InvalidDimensions(format!(
                "grid must be at least 1x1, got {width}x{height}"
            )));
        }
        if !(world_size.0 > 0.0 && world_size.1 > 0.0)
            || !world_size.0.is_finite()
            || !world_size.1.is_finite()
        {
            return Err(MapError::InvalidDimensions(format!(
                "world size must be positive, got {world_size:?}"
            )));
        }
        if occupancy.len() != width * height {
            return Err(MapError::OccupancyLength {
                expected: width * height,
                actual: occupancy.len(),
            });
        }
        let map = Self {
            name: name.into(),
            width,
            height,
            world_size,
            occupancy,
            regions,
        };
        if !map.occupancy.iter().any(|o| !o) {
            return Err(MapError::NoFreeSpace);
        }
        for region in &map.regions {
            map.check_region(region)?;
        }
        Ok(map)
    }

    /// Obstacle-free map over the default 2x2-unit domain.
    pub fn empty(name: impl Into<String>, width: usize, height: usize) -> Self {
        Self::new(
            name,
            width,
            height,
            (DEFAULT_WORLD_SIZE, DEFAULT_WORLD_SIZE),
            vec![false; width * height],
            Vec::new(),
        )
        .expect("empty map is valid")
    }

    fn check_region(&self, region: &SemanticRegion) -> Result<(), MapError> {
        let label = &region.label;
        if label.is_empty()
            || label.chars().any(char::is_whitespace)
            || label.to_lowercase() != *label
        {
            return Err(MapError::BadLabel(label.clone()));
        }
        if region.cells.is_empty() {
            return Err(MapError::EmptyRegion {
                label: label.clone(),
            });
        }
        for &cell in &region.cells {
            if cell.col >= self.width || cell.row >= self.height {
                return Err(MapError::RegionOutOfBounds {
                    label: label.clone(),
                    cell,
                });
            }
            if self.is_obstacle(cell) {
                return Err(MapError::RegionOnObstacle {
                    label: label.clone(),
                    cell,
                });
            }
        }
        // 4-connectivity over the region's own cells
        let mut member = vec![false; self.width * self.height];
        for &c in &region.cells {
            member[self.index(c)] = true;
        }
        let mut seen = vec![false; self.width * self.height];
        let mut queue = VecDeque::from([region.cells[0]]);
        seen[self.index(region.cells[0])] = true;
        let mut reached = 0usize;
        while let Some(c) = queue.pop_front() {
            reached += 1;
            for n in self.neighbors4(c) {
                let i = self.index(n);
                if member[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        let distinct = member.iter().filter(|m| **m).count();
        if reached != distinct {
            return Err(MapError::RegionDisconnected {
                label: label.clone(),
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn world_size(&self) -> (f64, f64) {
        self.world_size
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn regions(&self) -> &[SemanticRegion] {
        &self.regions
    }

    /// Cell extent `(hx, hy)` in world units.
    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.world_size.0 / self.width as f64,
            self.world_size.1 / self.height as f64,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    #[inline]
    pub fn is_obstacle(&self, cell: Cell) -> bool {
        self.occupancy[self.index(cell)]
    }

    #[inline]
    pub fn is_free_cell(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.is_obstacle(cell)
    }

    /// True when `p` lies in `[0, W) x [0, H)`.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.world_size.0 && p.y < self.world_size.1
    }

    pub fn world_to_cell(&self, p: &Point) -> Result<Cell, MapError> {
        if !self.contains(p) {
            return Err(MapError::OutOfDomain { x: p.x, y: p.y });
        }
        let (hx, hy) = self.cell_size();
        let col = ((p.x / hx) as usize).min(self.width - 1);
        let row = ((p.y / hy) as usize).min(self.height - 1);
        Ok(Cell::new(col, row))
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        let (hx, hy) = self.cell_size();
        Point::new((cell.col as f64 + 0.5) * hx, (cell.row as f64 + 0.5) * hy)
    }

    /// Membership in free space; points outside the domain are not free.
    pub fn is_free(&self, p: &Point) -> bool {
        match self.world_to_cell(p) {
            Ok(c) => !self.is_obstacle(c),
            Err(_) => false,
        }
    }

    /// Clamps `p` into the half-open domain.
    pub fn clamp(&self, p: &Point) -> Point {
        let max_x = self.world_size.0 * (1.0 - f64::EPSILON);
        let max_y = self.world_size.1 * (1.0 - f64::EPSILON);
        Point::new(p.x.clamp(0.0, max_x), p.y.clamp(0.0, max_y))
    }

    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let Cell { col, row } = cell;
        let cand = [
            (col.wrapping_sub(1), row),
            (col + 1, row),
            (col, row.wrapping_sub(1)),
            (col, row + 1),
        ];
        cand.into_iter()
            .map(|(c, r)| Cell::new(c, r))
            .filter(|c| self.in_bounds(*c))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count())
            .filter(|&i| !self.occupancy[i])
            .map(|i| self.cell_at(i))
    }

    pub fn free_count(&self) -> usize {
        self.occupancy.iter().filter(|o| !**o).count()
    }

    /// Fraction of cells marked as obstacles.
    pub fn obstacle_fraction(&self) -> f64 {
        1.0 - self.free_count() as f64 / self.cell_count() as f64
    }

    /// Distinct region labels in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.regions {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical map encoding.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(encode_map(self).as_bytes()))
    }

    /// Exact test that the straight segment `a -> b` only crosses free cells.
    ///
    /// Walks every cell the segment touches (grid traversal in the style of
    /// Amanatides and Woo); segments through a cell corner visit both
    /// adjacent cells.
    pub fn segment_is_free(&self, a: &Point, b: &Point) -> bool {
        let (Ok(start), Ok(end)) = (self.world_to_cell(a), self.world_to_cell(b)) else {
            return false;
        };
        if self.is_obstacle(start) || self.is_obstacle(end) {
            return false;
        }
        let (hx, hy) = self.cell_size();
        let d = b - a;
        let step_c: i64 = if d.x > 0.0 { 1 } else { -1 };
        let step_r: i64 = if d.y > 0.0 { 1 } else { -1 };
        let t_delta_x = if d.x != 0.0 { hx / d.x.abs() } else { f64::INFINITY };
        let t_delta_y = if d.y != 0.0 { hy / d.y.abs() } else { f64::INFINITY };
        let next_boundary = |coord: f64, h: f64, idx: usize, positive: bool| {
            if positive {
                (idx as f64 + 1.0) * h - coord
            } else {
                coord - idx as f64 * h
            }
        };
        let mut t_max_x = if d.x != 0.0 {
            next_boundary(a.x, hx, start.col, d.x > 0.0) / d.x.abs()
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if d.y != 0.0 {
            next_boundary(a.y, hy, start.row, d.y > 0.0) / d.y.abs()
        } else {
            f64::INFINITY
        };
        let (mut col, mut row) = (start.col as i64, start.row as i64);
        let budget = self.width + self.height + 4;
        for _ in 0..budget {
            if col == end.col as i64 && row == end.row as i64 {
                return true;
            }
            if t_max_x.min(t_max_y) > 1.0 {
                // rounding at a boundary; the end cell is adjacent
                return true;
            }
            let tie = (t_max_x - t_max_y).abs() <= 1e-12;
            if tie {
                // passes through a corner: both side cells must be free
                let side_a = Cell::new((col + step_c) as usize, row as usize);
                let side_b = Cell::new(col as usize, (row + step_r) as usize);
                for side in [side_a, side_b] {
                    if !self.is_free_cell(side) {
                        return false;
                    }
                }
                col += step_c;
                row += step_r;
                t_max_x += t_delta_x;
                t_max_y += t_delta_y;
            } else if t_max_x < t_max_y {
                col += step_c;
                t_max_x += t_delta_x;
            } else {
                row += step_r;
                t_max_y += t_delta_y;
            }
            if col < 0 || row < 0 {
                return false;
            }
            let cell = Cell::new(col as usize, row as usize);
            if !self.is_free_cell(cell) {
                return false;
            }
        }
        true
    }

    /// Copy with a different region list (validated).
    pub fn with_regions(&self, regions: Vec<SemanticRegion>) -> Result<Self, MapError> {
        Self::new(
            self.name.clone(),
            self.width,
            self.height,
            self.world_size,
            self.occupancy.clone(),
            regions,
        )
    }
}

/// Extracts the goal token from an instruction.
///
/// Accepts `"move to the <label>"` (any case, optional trailing punctuation)
/// or a bare label.
pub fn instruction_label(instruction: &str) -> Result<String, GoalError> {
    let lowered = instruction.trim().to_lowercase();
    let lowered = lowered.trim_end_matches(['.', '!', '?']).trim();
    if lowered.is_empty() {
        return Err(GoalError::EmptyInstruction);
    }
    let words: Vec<&str> = lowered.split_whitespace().collect();
    let token = match words.as_slice() {
        ["move", "to", "the", rest @ ..] if !rest.is_empty() => rest.join(" "),
        _ => words.join(" "),
    };
    Ok(token)
}

/// All regions whose label matches the instruction's goal token.
pub fn resolve_goal_regions<'a>(
    instruction: &str,
    map: &'a WorldMap,
) -> Result<Vec<&'a SemanticRegion>, GoalError> {
    let label = instruction_label(instruction)?;
    let found: Vec<&SemanticRegion> = map.regions.iter().filter(|r| r.label == label).collect();
    if found.is_empty() {
        return Err(GoalError::UnknownLabel {
            label,
            available: map.labels(),
        });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_with_block() -> WorldMap {
        let n = 128;
        let mut occ = vec![false; n * n];
        for row in 40..60 {
            for col in 40..60 {
                occ[row * n + col] = true;
            }
        }
        WorldMap::new(
            "block",
            n,
            n,
            (2.0, 2.0),
            occ,
            vec![
                SemanticRegion::rect("apple", 10, 10, 4, 4),
                SemanticRegion::rect("basketball", 100, 100, 4, 4),
                SemanticRegion::rect("apple", 100, 10, 4, 4),
            ],
        )
        .unwrap()
    }

    #[test]
    fn world_to_cell_examples() {
        let m = WorldMap::empty("e", 128, 128);
        assert_eq!(m.world_to_cell(&Point::new(0.0, 0.0)).unwrap(), Cell::new(0, 0));
        assert_eq!(m.world_to_cell(&Point::new(1.0, 1.0)).unwrap(), Cell::new(64, 64));
        assert!(matches!(
            m.world_to_cell(&Point::new(2.0, 0.5)),
            Err(MapError::OutOfDomain { .. })
        ));
        assert!(m.world_to_cell(&Point::new(-1e-9, 0.5)).is_err());
    }

    #[test]
    fn cell_center_round_trip() {
        let m = WorldMap::empty("e", 128, 128);
        let (hx, hy) = m.cell_size();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = Point::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let c = m.cell_center(m.world_to_cell(&p).unwrap());
            assert!((c.x - p.x).abs() <= 0.5 * hx + 1e-12);
            assert!((c.y - p.y).abs() <= 0.5 * hy + 1e-12);
        }
    }

    #[test]
    fn is_free_examples() {
        let m = map_with_block();
        assert!(!m.is_free(&Point::new(50.0 / 64.0, 50.0 / 64.0)));
        assert!(WorldMap::empty("e", 16, 16).is_free(&Point::new(1.3, 0.2)));
        assert!(!m.is_free(&Point::new(2.5, 0.2)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let p = Point::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let col = (p.x * 64.0).floor() as usize;
            let row = (p.y * 64.0).floor() as usize;
            assert_eq!(m.is_free(&p), !m.occupancy()[row * 128 + col]);
        }
    }

    #[test]
    fn invariants_rejected() {
        let n = 8;
        let mut occ = vec![false; n * n];
        occ[0] = true;
        let on_obstacle = WorldMap::new(
            "x",
            n,
            n,
            (2.0, 2.0),
            occ.clone(),
            vec![SemanticRegion::rect("box", 0, 0, 1, 1)],
        );
        assert!(matches!(on_obstacle, Err(MapError::RegionOnObstacle { .. })));
        let split = WorldMap::new(
            "x",
            n,
            n,
            (2.0, 2.0),
            vec![false; n * n],
            vec![SemanticRegion::new(
                "box",
                vec![Cell::new(1, 1), Cell::new(3, 3)],
            )],
        );
        assert!(matches!(split, Err(MapError::RegionDisconnected { .. })));
        let upper = WorldMap::new(
            "x",
            n,
            n,
            (2.0, 2.0),
            vec![false; n * n],
            vec![SemanticRegion::rect("Box", 1, 1, 1, 1)],
        );
        assert!(matches!(upper, Err(MapError::BadLabel(_))));
        let full = WorldMap::new("x", n, n, (2.0, 2.0), vec![true; n * n], vec![]);
        assert_eq!(full, Err(MapError::NoFreeSpace));
        let oob = WorldMap::new(
            "x",
            n,
            n,
            (2.0, 2.0),
            vec![false; n * n],
            vec![SemanticRegion::rect("box", 7, 7, 2, 1)],
        );
        assert!(matches!(oob, Err(MapError::RegionOutOfBounds { .. })));
    }

    #[test]
    fn resolve_goal_examples() {
        let m = map_with_block();
        let apples = resolve_goal_regions("Move to the Apple", &m).unwrap();
        assert_eq!(apples.len(), 2);
        assert!(apples.iter().all(|r| r.label == "apple"));
        assert_eq!(resolve_goal_regions("apple", &m).unwrap().len(), 2);
        assert_eq!(resolve_goal_regions("basketball.", &m).unwrap().len(), 1);
        match resolve_goal_regions("move to the pear", &m) {
            Err(GoalError::UnknownLabel { label, available }) => {
                assert_eq!(label, "pear");
                assert_eq!(available, vec!["apple".to_string(), "basketball".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            resolve_goal_regions("   ", &m),
            Err(GoalError::EmptyInstruction)
        );
    }

    #[test]
    fn segment_traversal() {
        let m = map_with_block();
        let (h, _) = m.cell_size();
        // straight through the block
        assert!(!m.segment_is_free(&Point::new(30.5 * h, 50.5 * h), &Point::new(70.5 * h, 50.5 * h)));
        // passes beside it
        assert!(m.segment_is_free(&Point::new(30.5 * h, 70.5 * h), &Point::new(70.5 * h, 70.5 * h)));
        // clips the block's corner diagonally
        assert!(!m.segment_is_free(&Point::new(38.0 * h, 58.0 * h), &Point::new(42.0 * h, 62.0 * h)));
        // same cell
        let p = Point::new(0.1, 0.1);
        assert!(m.segment_is_free(&p, &p));
    }

    #[test]
    fn segment_matches_dense_sampling() {
        let m = map_with_block();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let a = Point::new(rng.random_range(0.3..1.3), rng.random_range(0.3..1.3));
            let b = a + Point::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
            let b = m.clamp(&b);
            let dense = (0..=4000).all(|i| {
                let s = i as f64 / 4000.0;
                m.is_free(&(a + (b - a) * s))
            });
            // the exact walk is never more permissive than dense sampling
            if m.segment_is_free(&a, &b) {
                assert!(dense, "{a:?} -> {b:?}");
            }
        }
    }

    #[test]
    fn region_distance() {
        let m = WorldMap::empty("e", 128, 128);
        let r = SemanticRegion::rect("box", 64, 64, 2, 2);
        assert_eq!(r.distance_to(&Point::new(1.01, 1.01), &m), 0.0);
        let d = r.distance_to(&Point::new(0.9, 1.01), &m);
        assert!((d - 0.1).abs() < 1e-12);
    }
}
