use std::collections::VecDeque;

use super::BenchError;
use crate::gridmap::{Cell, WorldMap};

/// Cells reachable from a seed through 4-connected free space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityMask {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl ReachabilityMask {
    pub fn contains(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height && self.mask[cell.row * self.width + cell.col]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

fn require_free(map: &WorldMap, cell: Cell) -> Result<(), BenchError> {
    if !map.is_free_cell(cell) {
        return Err(BenchError::Input(format!("cell {cell} is not a free cell")));
    }
    Ok(())
}

pub fn flood_fill(map: &WorldMap, seed: Cell) -> Result<ReachabilityMask, BenchError> {
    require_free(map, seed)?;
    let mut mask = vec![false; map.cell_count()];
    let mut stack = vec![seed];
    mask[map.index(seed)] = true;
    while let Some(c) = stack.pop() {
        for nb in map.neighbors4(c) {
            let i = map.index(nb);
            if !mask[i] && !map.is_obstacle(nb) {
                mask[i] = true;
                stack.push(nb);
            }
        }
    }
    Ok(ReachabilityMask {
        width: map.width(),
        height: map.height(),
        mask,
    })
}

/// 4-connected shortest path length in steps, `None` when unreachable.
pub fn bfs_path_length(map: &WorldMap, a: Cell, b: Cell) -> Result<Option<usize>, BenchError> {
    require_free(map, a)?;
    require_free(map, b)?;
    Ok(bfs_distances(map, &[a])[map.index(b)])
}

/// Steps from the nearest of `sources` to every cell.
pub fn bfs_distances(map: &WorldMap, sources: &[Cell]) -> Vec<Option<usize>> {
    let mut dist = vec![None; map.cell_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if map.is_free_cell(s) && dist[map.index(s)].is_none() {
            dist[map.index(s)] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[map.index(c)].expect("queued cells have distances");
        for nb in map.neighbors4(c) {
            let i = map.index(nb);
            if dist[i].is_none() && !map.is_obstacle(nb) {
                dist[i] = Some(d + 1);
                queue.push_back(nb);
            }
        }
    }
    dist
}
