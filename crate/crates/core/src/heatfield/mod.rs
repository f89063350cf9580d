//! Obstacle-insulated heat diffusion and the score fields derived from it.
//!
//! Heat released from a goal region spreads only through free cells. The
//! log-gradient of the heat at diffusion time `sigma^2 / 2` plays the role of
//! the score of a noise level `sigma`: it points along feasible paths towards
//! the source and vanishes in components the heat cannot reach.

mod ascent;
mod cache;
mod dump;
mod sample;
mod schedule;
mod score;
mod solver;

use thiserror::Error;

use crate::gridmap::{Cell, MapError};

pub use ascent::{annealed_ascent, AscentOutcome};
pub use cache::{FieldCache, FieldKey, FieldStack, DEFAULT_CACHE_CAPACITY};
pub use dump::{
    decode_field_dump, encode_field_binary, encode_field_json, FieldDump, FIELD_DUMP_MAGIC,
};
pub use sample::sample_heat;
pub use schedule::{build_schedule, NoiseSchedule};
pub use score::{build_score_field, ScoreField};
pub use solver::{
    init_heat, solve_to_times, HeatSolver, HeatState, SourceSpec, DT_FRACTION, STABILITY_FRACTION,
};

/// Default floor for `u`, relative to its peak, before taking logs.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HeatError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Stability { dt: f64, bound: f64 },
    #[error("source {label:?} cell {cell} lies on an obstacle or outside the grid")]
    SourceOnObstacle { label: String, cell: Cell },
    #[error("no heat sources given")]
    NoSources,
    #[error("heat field is identically zero")]
    DegenerateField,
    #[error("cannot sample from a distribution with zero mass")]
    DegenerateDistribution,
    #[error(transparent)]
    Domain(#[from] MapError),
    #[error("field dump: {0}")]
    Dump(String),
}
