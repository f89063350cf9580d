use super::PlanError;
use crate::gridmap::Point;

/// Pairwise repulsive cost `sum_{i<j} max(0, -ln(d_ij / d_margin))`.
pub fn interrobot_cost(positions: &[Point], d_margin: f64) -> Result<f64, PlanError> {
    let mut cost = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            if d == 0.0 {
                return Err(PlanError::Singular { i, j });
            }
            if d < d_margin {
                cost -= (d / d_margin).ln();
            }
        }
    }
    Ok(cost)
}

/// Negative gradient of [`interrobot_cost`] for every robot: each pair below
/// the margin pushes robot `i` along `(x_i - x_j) / |x_i - x_j|^2`.
pub fn interrobot_guidance(positions: &[Point], d_margin: f64) -> Result<Vec<Point>, PlanError> {
    let mut g = vec![Point::zeros(); positions.len()];
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let diff = positions[i] - positions[j];
            let d2 = diff.norm_squared();
            if d2 == 0.0 {
                return Err(PlanError::Singular { i, j });
            }
            if d2 < d_margin * d_margin {
                let push = diff / d2;
                g[i] += push;
                g[j] -= push;
            }
        }
    }
    Ok(g)
}

/// Smallest pairwise distance, `None` for fewer than two robots.
pub fn min_pairwise_distance(positions: &[Point]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}
