use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{flood_fill, BenchError};
use crate::gridmap::{generate_map, Cell, GenParams, MapFamily, Point, RobotSpec, Scenario, WorldMap};

/// Which scenarios to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub families: Vec<MapFamily>,
    pub robot_counts: Vec<usize>,
    pub scenarios_per_config: usize,
    /// Distinct maps per family, shared across robot counts.
    pub map_variants: usize,
    pub base_seed: u64,
    pub grid: usize,
    /// Minimum start separation (units).
    pub d_margin: f64,
    /// One robot per scenario heading for a label with a sealed twin.
    pub ood: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            families: MapFamily::ALL.to_vec(),
            robot_counts: vec![3, 6, 9],
            scenarios_per_config: 30,
            map_variants: 5,
            base_seed: 0,
            grid: crate::gridmap::DEFAULT_GRID,
            d_margin: 0.12,
            ood: false,
        }
    }
}

impl SuiteSpec {
    /// Full grid of the original protocol: 10 cases on each of 12 maps.
    pub fn full_grid() -> Self {
        Self {
            scenarios_per_config: 120,
            map_variants: 12,
            ..Self::default()
        }
    }

    pub fn ood(scenarios: usize) -> Self {
        Self {
            robot_counts: vec![1],
            scenarios_per_config: scenarios,
            ood: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Spec(m.to_string()));
        if self.families.is_empty() {
            return bad("no families");
        }
        if self.robot_counts.is_empty() || self.robot_counts.contains(&0) {
            return bad("robot counts must be positive");
        }
        if self.scenarios_per_config == 0 || self.map_variants == 0 {
            return bad("scenario and map-variant counts must be positive");
        }
        if !(self.d_margin > 0.0) {
            return bad("d_margin must be positive");
        }
        Ok(())
    }
}

/// A generated scenario with its place in the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteScenario {
    pub family: MapFamily,
    pub robots: usize,
    pub index: usize,
    pub scenario: Scenario,
    /// OOD only: the unreachable instance of the goal label.
    pub sealed: Option<crate::gridmap::SemanticRegion>,
}

fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243f_6a88_85a3_08d3;
    for &p in parts {
        h ^= p;
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 29;
    }
    h
}

/// Expands a spec into scenarios, family-major, then robot count, then index.
pub fn generate_suite(spec: &SuiteSpec) -> Result<Vec<SuiteScenario>, BenchError> {
    spec.validate()?;
    let mut params = GenParams::for_grid(spec.grid);
    params.ood = spec.ood;
    let mut maps: HashMap<(MapFamily, usize), Arc<WorldMap>> = HashMap::new();
    let mut out = Vec::new();
    for &family in &spec.families {
        for variant in 0..spec.map_variants {
            let seed = mix(&[spec.base_seed, family as u64, variant as u64]);
            let map = generate_map(family, seed, &params)?;
            maps.insert((family, variant), Arc::new(map));
        }
        for &n in &spec.robot_counts {
            for index in 0..spec.scenarios_per_config {
                let variant = index % spec.map_variants;
                let map = maps[&(family, variant)].clone();
                let seed = mix(&[spec.base_seed, family as u64, n as u64, index as u64, 1]);
                let name = format!("{family}-n{n}-{index:03}");
                let (scenario, sealed) = if spec.ood {
                    ood_scenario(map, seed, &name)?
                } else {
                    scenario(map, n, seed, spec.d_margin, &name)?
                };
                out.push(SuiteScenario {
                    family,
                    robots: n,
                    index,
                    scenario,
                    sealed,
                });
            }
        }
    }
    Ok(out)
}

fn random_point(rng: &mut ChaCha8Rng, map: &WorldMap, free: &[Cell]) -> Point {
    let (hx, hy) = map.cell_size();
    let cell = free[rng.random_range(0..free.len())];
    // keep a small inset so the point is well inside its cell
    let fx = 0.1 + 0.8 * rng.random::<f64>();
    let fy = 0.1 + 0.8 * rng.random::<f64>();
    Point::new((cell.col as f64 + fx) * hx, (cell.row as f64 + fy) * hy)
}

fn in_any_region(map: &WorldMap, cell: Cell) -> bool {
    map.regions().iter().any(|r| r.contains(cell))
}

fn scenario(
    map: Arc<WorldMap>,
    n: usize,
    seed: u64,
    d_margin: f64,
    name: &str,
) -> Result<(Scenario, Option<crate::gridmap::SemanticRegion>), BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<Cell> = map
        .free_cells()
        .filter(|c| !in_any_region(&map, *c))
        .collect();
    let labels = map.labels();
    let mut deck: Vec<String> = Vec::new();
    let mut robots: Vec<RobotSpec> = Vec::with_capacity(n);
    let mut starts: Vec<Point> = Vec::with_capacity(n);
    let mut masks = HashMap::new();
    for i in 0..n {
        if deck.is_empty() {
            deck = labels.clone();
            deck.shuffle(&mut rng);
        }
        let label = deck.pop().expect("deck refilled");
        let mut placed = None;
        for _ in 0..20_000 {
            let p = random_point(&mut rng, &map, &free);
            if starts.iter().any(|q| (p - q).norm() < d_margin) {
                continue;
            }
            let cell = map.world_to_cell(&p)?;
            let mask = masks
                .entry(cell)
                .or_insert_with(|| flood_fill(&map, cell).expect("start cell is free"));
            let reachable = map
                .regions()
                .iter()
                .filter(|r| r.label == label)
                .any(|r| r.cells.iter().any(|c| mask.contains(*c)));
            if reachable {
                placed = Some(p);
                break;
            }
            masks.remove(&cell);
        }
        let p = placed.ok_or_else(|| {
            BenchError::Generation(format!("{name}: cannot place robot {i} with separation {d_margin}"))
        })?;
        starts.push(p);
        robots.push(RobotSpec::new(format!("r{i}"), Some(p), format!("move to the {label}")));
    }
    Ok((Scenario::new(map, robots, seed).with_name(name), None))
}

fn ood_scenario(
    map: Arc<WorldMap>,
    seed: u64,
    name: &str,
) -> Result<(Scenario, Option<crate::gridmap::SemanticRegion>), BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = map.regions()[0].label.clone();
    let twins: Vec<_> = map.regions().iter().filter(|r| r.label == label).cloned().collect();
    if twins.len() != 2 {
        return Err(BenchError::Generation(format!(
            "{name}: expected two {label:?} instances, found {}",
            twins.len()
        )));
    }
    let open = &twins[0];
    let sealed = twins[1].clone();
    let exterior = flood_fill(&map, open.cells[0])?;
    if sealed.cells.iter().any(|c| exterior.contains(*c)) {
        return Err(BenchError::Generation(format!("{name}: both instances are reachable")));
    }
    let free: Vec<Cell> = map
        .free_cells()
        .filter(|c| exterior.contains(*c) && !in_any_region(&map, *c))
        .collect();
    if free.is_empty() {
        return Err(BenchError::Generation(format!("{name}: no exterior free cell")));
    }
    // prefer starts nearer the sealed instance, so that heading for the
    // closest match would fail
    let open_c = open.centroid(&map);
    let sealed_c = sealed.centroid(&map);
    let mut start = random_point(&mut rng, &map, &free);
    for _ in 0..200 {
        if (start - sealed_c).norm() < (start - open_c).norm() {
            break;
        }
        start = random_point(&mut rng, &map, &free);
    }
    let robots = vec![RobotSpec::new("r0", Some(start), format!("move to the {label}"))];
    Ok((Scenario::new(map, robots, seed).with_name(name), Some(sealed)))
}
