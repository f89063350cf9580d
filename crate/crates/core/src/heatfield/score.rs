use std::sync::Arc;

use super::{HeatError, HeatState};
use crate::gridmap::{Cell, Point, WorldMap};

/// `grad log u` sampled at cell centers, in 1/units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    /// Diffusion level (1-based), 0 when not attached to a schedule.
    pub t: usize,
    pub heat_time: f64,
    vectors: Vec<Point>,
    /// Floored log heat per cell; `-inf` on obstacles.
    log_u: Vec<f64>,
    map: Arc<WorldMap>,
}

pub fn build_score_field(state: &HeatState, log_floor: f64) -> Result<ScoreField, HeatError> {
    if !(log_floor > 0.0 && log_floor < 1.0) {
        return Err(HeatError::Parameter(format!(
            "log_floor must lie in (0, 1), got {log_floor}"
        )));
    }
    let map = &state.map;
    let peak = state.peak();
    if !(peak > 0.0) {
        return Err(HeatError::DegenerateField);
    }
    let floor = log_floor * peak;
    let occ = map.occupancy();
    let log_u: Vec<f64> = state
        .u
        .iter()
        .zip(occ)
        .map(|(&u, &o)| if o { f64::NEG_INFINITY } else { u.max(floor).ln() })
        .collect();

    let (w, h) = (map.width(), map.height());
    let (hx, hy) = map.cell_size();
    let free = |c: isize, r: isize| {
        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && !occ[r as usize * w + c as usize]
    };
    let at = |c: isize, r: isize| log_u[r as usize * w + c as usize];
    let diff = |lo: Option<f64>, mid: f64, hi: Option<f64>, step: f64| match (lo, hi) {
        (Some(a), Some(b)) => (b - a) / (2.0 * step),
        (None, Some(b)) => (b - mid) / step,
        (Some(a), None) => (mid - a) / step,
        (None, None) => 0.0,
    };

    let mut vectors = vec![Point::zeros(); w * h];
    for r in 0..h as isize {
        for c in 0..w as isize {
            if !free(c, r) {
                continue;
            }
            let mid = at(c, r);
            let pick = |cc: isize, rr: isize| free(cc, rr).then(|| at(cc, rr));
            let gx = diff(pick(c - 1, r), mid, pick(c + 1, r), hx);
            let gy = diff(pick(c, r - 1), mid, pick(c, r + 1), hy);
            vectors[r as usize * w + c as usize] = Point::new(gx, gy);
        }
    }
    Ok(ScoreField {
        t: 0,
        heat_time: state.time,
        vectors,
        log_u,
        map: map.clone(),
    })
}

impl ScoreField {
    /// Field with prescribed vectors and a flat potential.
    pub fn from_vectors(map: Arc<WorldMap>, t: usize, vectors: Vec<Point>) -> Result<Self, HeatError> {
        if vectors.len() != map.cell_count() {
            return Err(HeatError::Parameter(format!(
                "{} vectors for {} cells",
                vectors.len(),
                map.cell_count()
            )));
        }
        let log_u = map
            .occupancy()
            .iter()
            .map(|o| if *o { f64::NEG_INFINITY } else { 0.0 })
            .collect();
        Ok(ScoreField {
            t,
            heat_time: 0.0,
            vectors,
            log_u,
            map,
        })
    }

    pub fn with_level(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.map
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors
    }

    pub fn vector_at(&self, cell: Cell) -> Point {
        self.vectors[self.map.index(cell)]
    }

    /// Floored `log u` at a cell (`-inf` on obstacles).
    pub fn log_at(&self, cell: Cell) -> f64 {
        self.log_u[self.map.index(cell)]
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_u
    }

    /// Median vector norm over free cells.
    pub fn median_free_magnitude(&self) -> f64 {
        let mut mags: Vec<f64> = self
            .vectors
            .iter()
            .zip(self.map.occupancy())
            .filter(|(_, o)| !**o)
            .map(|(v, _)| v.norm())
            .collect();
        if mags.is_empty() {
            return 0.0;
        }
        mags.sort_by(f64::total_cmp);
        mags[mags.len() / 2]
    }

    /// Bilinear interpolation between the four surrounding cell centers.
    /// Queries beyond the outermost centers clamp to the lattice hull.
    pub fn interpolate(&self, p: &Point) -> Result<Point, HeatError> {
        if !self.map.contains(p) {
            return Err(crate::gridmap::MapError::OutOfDomain { x: p.x, y: p.y }.into());
        }
        Ok(self.interpolate_clamped(p))
    }

    /// [`interpolate`](Self::interpolate) without the domain check; points
    /// outside the domain take the value at the nearest hull point.
    pub fn interpolate_clamped(&self, p: &Point) -> Point {
        let (w, h) = (self.map.width(), self.map.height());
        let (hx, hy) = self.map.cell_size();
        let (i0, i1, fx) = lattice(p.x / hx - 0.5, w);
        let (j0, j1, fy) = lattice(p.y / hy - 0.5, h);
        let v = |i: usize, j: usize| self.vectors[j * w + i];
        let bottom = v(i0, j0) * (1.0 - fx) + v(i1, j0) * fx;
        let top = v(i0, j1) * (1.0 - fx) + v(i1, j1) * fx;
        bottom * (1.0 - fy) + top * fy
    }
}

/// Lower index, upper index and fraction along one lattice axis of `n` nodes.
fn lattice(x: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 {
        return (0, 0, 0.0);
    }
    let x = x.clamp(0.0, (n - 1) as f64);
    let i0 = (x.floor() as usize).min(n - 2);
    (i0, i0 + 1, x - i0 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::SemanticRegion;
    use crate::heatfield::{init_heat, HeatSolver, SourceSpec};

    fn solve(map: &Arc<WorldMap>, src: SemanticRegion, time: f64) -> HeatState {
        let mut state = init_heat(&SourceSpec::equal(vec![src]), map).unwrap();
        let mut solver = HeatSolver::new(map.clone());
        let dt = solver.default_dt();
        solver.advance_to(&mut state, time, dt).unwrap();
        state
    }

    #[test]
    fn gaussian_score_matches_analytic() {
        let map = Arc::new(WorldMap::empty("e", 128, 128));
        // 2x2 source centered on (1, 1)
        let state = solve(&map, SemanticRegion::rect("g", 63, 63, 2, 2), 0.02);
        let field = build_score_field(&state, 1e-12).unwrap();
        let s = field.interpolate(&Point::new(1.2, 1.0)).unwrap();
        assert!((s.x + 5.0).abs() < 0.25, "{s}");
        assert!(s.y.abs() < 1e-6, "{s}");
    }

    #[test]
    fn zero_at_symmetric_peak() {
        let map = Arc::new(WorldMap::empty("e", 65, 65));
        let state = solve(&map, SemanticRegion::rect("g", 32, 32, 1, 1), 0.01);
        let field = build_score_field(&state, 1e-12).unwrap();
        assert!(field.vector_at(Cell::new(32, 32)).norm() < 1e-9);
    }

    #[test]
    fn sealed_pocket_has_no_score() {
        let n = 64;
        let mut occ = vec![false; n * n];
        for r in 30..44 {
            for c in 30..44 {
                if r < 32 || r >= 42 || c < 32 || c >= 42 {
                    occ[r * n + c] = true;
                }
            }
        }
        let map = Arc::new(WorldMap::new("pocket", n, n, (2.0, 2.0), occ, vec![]).unwrap());
        let state = solve(&map, SemanticRegion::rect("g", 5, 5, 2, 2), 0.3);
        let field = build_score_field(&state, 1e-12).unwrap();
        let median = field.median_free_magnitude();
        assert!(median > 0.0);
        for r in 32..42 {
            for c in 32..42 {
                assert!(field.vector_at(Cell::new(c, r)).norm() < 1e-6 * median);
            }
        }
    }

    #[test]
    fn obstacle_cells_are_zero() {
        let n = 16;
        let mut occ = vec![false; n * n];
        occ[5 * n + 5..5 * n + 10].fill(true);
        let map = Arc::new(WorldMap::new("o", n, n, (2.0, 2.0), occ, vec![]).unwrap());
        let state = solve(&map, SemanticRegion::rect("g", 7, 8, 1, 1), 0.05);
        let field = build_score_field(&state, 1e-12).unwrap();
        for c in 5..10 {
            assert_eq!(field.vector_at(Cell::new(c, 5)), Point::zeros());
        }
        assert!(field.vectors().iter().all(|v| v.x.is_finite() && v.y.is_finite()));
    }

    #[test]
    fn zero_heat_is_degenerate() {
        let map = Arc::new(WorldMap::empty("e", 8, 8));
        let mut state = solve(&map, SemanticRegion::rect("g", 1, 1, 1, 1), 0.0);
        state.u.fill(0.0);
        assert_eq!(build_score_field(&state, 1e-12), Err(HeatError::DegenerateField));
    }

    fn field_with_vectors(w: usize, h: usize, f: impl Fn(usize, usize) -> Point) -> ScoreField {
        let map = Arc::new(WorldMap::empty("e", w, h));
        let mut vectors = Vec::new();
        for r in 0..h {
            for c in 0..w {
                vectors.push(f(c, r));
            }
        }
        ScoreField {
            t: 1,
            heat_time: 0.0,
            vectors,
            log_u: vec![0.0; w * h],
            map,
        }
    }

    #[test]
    fn interpolation_nodes_edges_and_centers() {
        let field = field_with_vectors(8, 8, |c, r| Point::new(c as f64 * 1.5 - r as f64, (c * r) as f64));
        let map = field.map().clone();
        for r in 0..8 {
            for c in 0..8 {
                let cell = Cell::new(c, r);
                assert!((field.interpolate(&map.cell_center(cell)).unwrap() - field.vector_at(cell)).norm() < 1e-12);
            }
        }
        let a = map.cell_center(Cell::new(2, 3));
        let b = map.cell_center(Cell::new(3, 3));
        let mid = field.interpolate(&((a + b) / 2.0)).unwrap();
        let expect = (field.vector_at(Cell::new(2, 3)) + field.vector_at(Cell::new(3, 3))) / 2.0;
        assert!((mid - expect).norm() < 1e-12);
        let quad = [(4, 4), (5, 4), (4, 5), (5, 5)];
        let centre = quad.iter().fold(Point::zeros(), |acc, &(c, r)| acc + map.cell_center(Cell::new(c, r))) / 4.0;
        let mean = quad.iter().fold(Point::zeros(), |acc, &(c, r)| acc + field.vector_at(Cell::new(c, r))) / 4.0;
        assert!((field.interpolate(&centre).unwrap() - mean).norm() < 1e-12);
    }

    #[test]
    fn interpolation_clamps_and_rejects() {
        let field = field_with_vectors(4, 4, |c, r| Point::new(c as f64, r as f64));
        let corner = field.interpolate(&Point::new(0.01, 0.01)).unwrap();
        assert_eq!(corner, Point::new(0.0, 0.0));
        assert!(field.interpolate(&Point::new(-0.1, 0.5)).is_err());
        assert!(field.interpolate(&Point::new(0.5, 2.0)).is_err());
    }
}
