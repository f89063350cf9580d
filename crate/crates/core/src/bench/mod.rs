//! Scenario suites over the map families, reachability oracles, and metric
//! aggregation.

mod reach;
mod run;
mod suite;

use thiserror::Error;

use crate::gridmap::{GenError, MapError};

pub use reach::{bfs_distances, bfs_path_length, flood_fill, ReachabilityMask};
pub use run::{
    aggregate, run_suite, write_records, write_report, ReportFormat, ReportRow, ScenarioRecord,
    SuiteReport, SuiteRun, CSV_COLUMNS,
};
pub use suite::{generate_suite, SuiteScenario, SuiteSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid suite spec: {0}")]
    Spec(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("scenario generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Map(#[from] GenError),
    #[error(transparent)]
    Domain(#[from] MapError),
}
