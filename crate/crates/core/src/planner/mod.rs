//! Annealed Langevin sampling over heat score fields with inter-robot
//! repulsion.
//!
//! For every level `t = T..1` and annealing iterate `k = 1..K` each robot moves
//! by `0.5 alpha_t^2 (s_t(x) + beta g(x)) + alpha_t eps`, where `s_t` is the
//! score of its goal label and `g` the repulsive guidance. All robots advance
//! from the same snapshot. The position after the last iterate of a level is
//! that level's waypoint.

mod config;
mod guidance;
mod langevin;
mod validate;

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{
    instruction_label, resolve_goal_regions, Point, Scenario, ScenarioError, SemanticRegion,
    WorldMap,
};
use crate::heatfield::{FieldCache, FieldStack, HeatError, ScoreField};

pub use config::{ConfigOverrides, PlannerConfig};
pub use guidance::{interrobot_cost, interrobot_guidance, min_pairwise_distance};
pub use langevin::{filtered_step, langevin_step, propose, JointState, Proposal, StepParams};
pub use validate::{
    validate_plan, InterRobotViolation, StaticViolation, Validation, SEGMENT_SAMPLES,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("robots {i} and {j} occupy the same position")]
    Singular { i: usize, j: usize },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    /// Start followed by the state after each level (`T + 1` entries).
    pub waypoints: Vec<Point>,
    /// Every Langevin iterate (`T * K` entries).
    pub micro_steps: Vec<Point>,
}

impl Trajectory {
    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    /// Polyline length of the waypoints.
    pub fn path_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotResult {
    pub id: String,
    pub goal_label: String,
    pub goal_reached: bool,
    /// Distance from the final position to the nearest goal region; absent
    /// when the run timed out.
    pub goal_distance: Option<f64>,
    pub path_length: f64,
    pub waypoints: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_steps: Option<Vec<Point>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    #[serde(rename = "static")]
    pub static_: Vec<StaticViolation>,
    pub inter_robot: Vec<InterRobotViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub scenario: Option<String>,
    pub seed: u64,
    pub success: bool,
    pub timed_out: bool,
    pub planning_time_s: f64,
    /// Smallest pairwise distance over all steps; absent for one robot.
    pub min_clearance: Option<f64>,
    /// In scenario order.
    pub robots: Vec<RobotResult>,
    pub violations: Violations,
}

impl PlanResult {
    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.robots
            .iter()
            .map(|r| Trajectory {
                id: r.id.clone(),
                waypoints: r.waypoints.clone(),
                micro_steps: r.micro_steps.clone().unwrap_or_default(),
            })
            .collect()
    }

    /// Copy with the wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> PlanResult {
        PlanResult {
            planning_time_s: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self, include_micro_steps: bool) -> String {
        if include_micro_steps {
            return serde_json::to_string_pretty(self).expect("plan result serializes");
        }
        let mut slim = self.clone();
        slim.robots.iter_mut().for_each(|r| r.micro_steps = None);
        serde_json::to_string_pretty(&slim).expect("plan result serializes")
    }

    pub fn from_json(text: &str) -> Result<PlanResult, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Effective configuration for a scenario: `base`, then the scenario seed and
/// config block, then `flags`.
pub fn resolve_config(base: &PlannerConfig, scenario: &Scenario, flags: &ConfigOverrides) -> PlannerConfig {
    let mut cfg = base.clone();
    cfg.seed = scenario.seed;
    cfg.apply(&scenario.config);
    cfg.apply(flags);
    cfg
}

fn shared_cache() -> &'static FieldCache {
    static CACHE: OnceLock<FieldCache> = OnceLock::new();
    CACHE.get_or_init(FieldCache::default)
}

/// Plans with a process-wide field cache.
pub fn plan(scenario: &Scenario, config: &PlannerConfig) -> Result<PlanResult, PlanError> {
    plan_with_cache(scenario, config, shared_cache())
}

/// Noise stream of one robot, keyed by id rather than position in the list.
pub fn robot_rng(seed: u64, id: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn normal2(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

struct Robot {
    id: String,
    label: String,
    goals: Vec<SemanticRegion>,
    stack: Arc<FieldStack>,
}

pub fn plan_with_cache(
    scenario: &Scenario,
    config: &PlannerConfig,
    cache: &FieldCache,
) -> Result<PlanResult, PlanError> {
    let clock = Instant::now();
    config.validate()?;
    scenario.validate()?;
    let map = &scenario.map;
    let schedule = config.schedule()?;
    let map_hash = map.content_hash();

    // work in id order so the result does not depend on list order
    let mut order: Vec<usize> = (0..scenario.robots.len()).collect();
    order.sort_by(|&a, &b| scenario.robots[a].id.cmp(&scenario.robots[b].id));

    let mut robots = Vec::with_capacity(order.len());
    let mut rngs = Vec::with_capacity(order.len());
    for &i in &order {
        let spec = &scenario.robots[i];
        let label = instruction_label(&spec.instruction).map_err(|source| ScenarioError::Goal {
            id: spec.id.clone(),
            source,
        })?;
        let goals: Vec<SemanticRegion> = resolve_goal_regions(&spec.instruction, map)
            .map_err(|source| ScenarioError::Goal {
                id: spec.id.clone(),
                source,
            })?
            .into_iter()
            .cloned()
            .collect();
        let stack = cache.get_or_build(map, &map_hash, &label, &schedule, config.log_floor)?;
        robots.push(Robot {
            id: spec.id.clone(),
            label,
            goals,
            stack,
        });
        rngs.push(robot_rng(config.seed, &spec.id));
    }

    let starts = initial_positions(scenario, &order, &mut rngs, map, config.d_margin)?;
    let n = robots.len();
    let (levels, anneal) = (config.diffusion_steps, config.anneal_steps);
    let mut waypoints: Vec<Vec<Point>> = starts.iter().map(|p| vec![*p]).collect();
    let mut micro: Vec<Vec<Point>> = vec![Vec::with_capacity(levels * anneal); n];
    let mut state = JointState {
        positions: starts,
        t: levels,
    };
    let mut timed_out = false;

    'outer: for t in (1..=levels).rev() {
        state.t = t;
        let fields: Vec<&ScoreField> = robots.iter().map(|r| r.stack.level(t)).collect();
        let params = StepParams {
            alpha: schedule.alpha(t),
            beta: config.beta,
            d_margin: config.d_margin,
        };
        for k in 1..=anneal {
            if clock.elapsed().as_secs_f64() > config.time_limit_s {
                timed_out = true;
                break 'outer;
            }
            let noiseless = config.final_step_noiseless && t == 1 && k == anneal;
            let eps: Vec<Point> = rngs
                .iter_mut()
                .map(|rng| {
                    let e = normal2(rng);
                    if noiseless {
                        Point::zeros()
                    } else {
                        e
                    }
                })
                .collect();
            state = if config.feasibility_filter {
                filtered_step(&state, &fields, params, &eps, map, config.d_safe)?
            } else {
                langevin_step(&state, &fields, params, &eps, map)?
            };
            for (m, p) in micro.iter_mut().zip(&state.positions) {
                m.push(*p);
            }
        }
        for (w, p) in waypoints.iter_mut().zip(&state.positions) {
            w.push(*p);
        }
    }

    let trajectories: Vec<Trajectory> = robots
        .iter()
        .zip(waypoints)
        .zip(micro)
        .map(|((r, w), m)| Trajectory {
            id: r.id.clone(),
            waypoints: w,
            micro_steps: m,
        })
        .collect();

    let (validation, success) = if timed_out {
        (None, false)
    } else {
        let goals: Vec<Vec<SemanticRegion>> = robots.iter().map(|r| r.goals.clone()).collect();
        let v = validate_plan(&trajectories, &goals, map, config.d_safe, config.goal_tol)?;
        let ok = v.success();
        (Some(v), ok)
    };

    // back to scenario order
    let mut slots: Vec<Option<RobotResult>> = vec![None; n];
    for (sorted_idx, traj) in trajectories.into_iter().enumerate() {
        let (reached, dist) = match &validation {
            Some(v) => (v.goal_reached[sorted_idx], Some(v.goal_distance[sorted_idx])),
            None => (false, None),
        };
        slots[order[sorted_idx]] = Some(RobotResult {
            id: traj.id.clone(),
            goal_label: robots[sorted_idx].label.clone(),
            goal_reached: reached,
            goal_distance: dist,
            path_length: traj.path_length(),
            waypoints: traj.waypoints,
            micro_steps: Some(traj.micro_steps),
        });
    }
    let (violations, min_clearance) = match validation {
        Some(v) => (
            Violations {
                static_: v.static_violations,
                inter_robot: v.inter_robot_violations,
            },
            v.min_clearance,
        ),
        None => (Violations::default(), None),
    };

    Ok(PlanResult {
        scenario: scenario.name.clone(),
        seed: config.seed,
        success,
        timed_out,
        planning_time_s: clock.elapsed().as_secs_f64(),
        min_clearance,
        robots: slots.into_iter().map(|r| r.expect("every robot placed")).collect(),
        violations,
    })
}

/// Given starts as-is; missing starts drawn uniformly from free space at
/// least `d_margin` away from every robot placed before.
fn initial_positions(
    scenario: &Scenario,
    order: &[usize],
    rngs: &mut [ChaCha8Rng],
    map: &WorldMap,
    d_margin: f64,
) -> Result<Vec<Point>, PlanError> {
    let mut placed: Vec<Option<Point>> = order.iter().map(|&i| scenario.robots[i].start).collect();
    let free: Vec<_> = map.free_cells().collect();
    let (hx, hy) = map.cell_size();
    for idx in 0..rngs.len() {
        if placed[idx].is_some() {
            continue;
        }
        let rng = &mut rngs[idx];
        let mut found = None;
        for _ in 0..10_000 {
            let cell = free[rng.random_range(0..free.len())];
            let p = map.clamp(&Point::new(
                (cell.col as f64 + rng.random::<f64>()) * hx,
                (cell.row as f64 + rng.random::<f64>()) * hy,
            ));
            let clear = placed
                .iter()
                .flatten()
                .all(|q| (p - q).norm() >= d_margin);
            if clear {
                found = Some(p);
                break;
            }
        }
        match found {
            Some(p) => placed[idx] = Some(p),
            None => {
                return Err(PlanError::Input(format!(
                    "cannot place robot {} in free space",
                    scenario.robots[order[idx]].id
                )))
            }
        }
    }
    Ok(placed.into_iter().map(|p| p.expect("placed")).collect())
}
