use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{HeatError, HeatState};
use crate::gridmap::{Point, WorldMap};

/// Draws `n` points from the normalized heat: a cell by its mass, then a
/// uniform position inside that cell.
pub fn sample_heat<R: Rng + ?Sized>(
    state: &HeatState,
    rng: &mut R,
    n: usize,
) -> Result<Vec<Point>, HeatError> {
    let map: &WorldMap = &state.map;
    // obstacle cells hold exactly zero heat, so they are never picked
    let weights = state.u.iter().zip(map.occupancy()).map(|(&u, &o)| if o { 0.0 } else { u });
    let dist = WeightedIndex::new(weights).map_err(|_| HeatError::DegenerateDistribution)?;
    let (hx, hy) = map.cell_size();
    Ok((0..n)
        .map(|_| {
            let cell = map.cell_at(dist.sample(rng));
            let x = (cell.col as f64 + rng.random::<f64>()) * hx;
            let y = (cell.row as f64 + rng.random::<f64>()) * hy;
            map.clamp(&Point::new(x, y))
        })
        .collect())
}
