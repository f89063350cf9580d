use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bfs_distances, BenchError, SuiteScenario};
use crate::gridmap::MapFamily;
use crate::heatfield::FieldCache;
use crate::planner::{plan_with_cache, resolve_config, ConfigOverrides, PlanResult, PlannerConfig};

/// Per-scenario outcome, one JSON line each in raw record files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub family: MapFamily,
    pub robots: usize,
    pub index: usize,
    pub name: String,
    pub seed: u64,
    pub success: bool,
    pub timed_out: bool,
    pub planning_time_s: f64,
    pub goals_reached: usize,
    pub static_violations: usize,
    pub inter_robot_violations: usize,
    /// Polyline length of each robot's waypoints.
    pub path_lengths: Vec<f64>,
    /// Path length over the grid shortest-path length to the goal.
    pub detour_ratios: Vec<f64>,
    pub min_clearance: Option<f64>,
    /// OOD only: the final position lies inside the reachable instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside_reachable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Metrics for one `(family, robot count)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: MapFamily,
    #[serde(rename = "N")]
    pub robots: usize,
    pub success_rate: f64,
    pub mean_time_s: f64,
    pub median_time_s: f64,
    pub mean_path_len: f64,
    /// Over successful runs; absent when none had two robots.
    pub min_clearance: Option<f64>,
    pub timeouts: usize,
    pub successes: usize,
    pub scenarios: usize,
    pub mean_detour_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "family",
    "N",
    "success_rate",
    "mean_time_s",
    "median_time_s",
    "mean_path_len",
    "min_clearance",
    "timeouts",
    "successes",
    "scenarios",
    "mean_detour_ratio",
];

impl SuiteReport {
    /// Copy with timing columns zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> SuiteReport {
        SuiteReport {
            rows: self
                .rows
                .iter()
                .map(|r| ReportRow {
                    mean_time_s: 0.0,
                    median_time_s: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }

    pub fn row(&self, family: MapFamily, robots: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.family == family && r.robots == robots)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub records: Vec<ScenarioRecord>,
    pub report: SuiteReport,
    /// Full results in scenario order (`None` where planning errored).
    pub results: Vec<Option<PlanResult>>,
}

/// Plans every scenario (in parallel across scenarios) and aggregates.
/// Output does not depend on `workers`.
pub fn run_suite(
    scenarios: &[SuiteScenario],
    config: &PlannerConfig,
    flags: &ConfigOverrides,
    workers: usize,
) -> Result<SuiteRun, BenchError> {
    if scenarios.is_empty() {
        return Err(BenchError::Input("empty scenario list".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Input(e.to_string()))?;
    let cache = FieldCache::default();
    // one family at a time keeps the maps in flight within the cache capacity
    let mut outcomes: Vec<(ScenarioRecord, Option<PlanResult>)> = Vec::with_capacity(scenarios.len());
    for group in scenarios.chunk_by(|a, b| a.family == b.family) {
        let part: Vec<_> = pool.install(|| {
            group
                .par_iter()
                .map(|s| run_one(s, config, flags, &cache))
                .collect()
        });
        outcomes.extend(part);
    }
    let (records, results): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let report = aggregate(&records);
    Ok(SuiteRun {
        records,
        report,
        results,
    })
}

fn run_one(
    s: &SuiteScenario,
    base: &PlannerConfig,
    flags: &ConfigOverrides,
    cache: &FieldCache,
) -> (ScenarioRecord, Option<PlanResult>) {
    let cfg = resolve_config(base, &s.scenario, flags);
    let mut record = ScenarioRecord {
        family: s.family,
        robots: s.robots,
        index: s.index,
        name: s.scenario.name.clone().unwrap_or_default(),
        seed: cfg.seed,
        success: false,
        timed_out: false,
        planning_time_s: 0.0,
        goals_reached: 0,
        static_violations: 0,
        inter_robot_violations: 0,
        path_lengths: Vec::new(),
        detour_ratios: Vec::new(),
        min_clearance: None,
        inside_reachable: None,
        error: None,
    };
    let result = match plan_with_cache(&s.scenario, &cfg, cache) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return (record, None);
        }
    };
    let map = &s.scenario.map;
    let (h, _) = map.cell_size();
    record.success = result.success;
    record.timed_out = result.timed_out;
    record.planning_time_s = result.planning_time_s;
    record.goals_reached = result.robots.iter().filter(|r| r.goal_reached).count();
    record.static_violations = result.violations.static_.len();
    record.inter_robot_violations = result.violations.inter_robot.len();
    record.min_clearance = result.min_clearance;
    for (robot, spec) in result.robots.iter().zip(&s.scenario.robots) {
        record.path_lengths.push(robot.path_length);
        let goals = crate::gridmap::resolve_goal_regions(&spec.instruction, map).unwrap_or_default();
        let targets: Vec<_> = goals.iter().flat_map(|g| g.cells.iter().copied()).collect();
        let dist = bfs_distances(map, &targets);
        if let Ok(cell) = map.world_to_cell(&robot.waypoints[0]) {
            if let Some(steps) = dist[map.index(cell)].filter(|d| *d > 0) {
                record.detour_ratios.push(robot.path_length / (steps as f64 * h));
            }
        }
    }
    if let Some(sealed) = &s.sealed {
        let last = *result.robots[0].waypoints.last().expect("waypoints");
        let inside = map
            .world_to_cell(&last)
            .ok()
            .and_then(|cell| {
                let goals = crate::gridmap::resolve_goal_regions(&s.scenario.robots[0].instruction, map).ok()?;
                Some(goals.iter().any(|g| *g != sealed && g.contains(cell)))
            })
            .unwrap_or(false);
        record.inside_reachable = Some(inside);
    }
    (record, Some(result))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    })
}

/// Groups records by `(family, robot count)` in sorted order.
pub fn aggregate(records: &[ScenarioRecord]) -> SuiteReport {
    let mut groups: BTreeMap<(MapFamily, usize), Vec<&ScenarioRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.family, r.robots)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((family, robots), rs)| {
            let successes = rs.iter().filter(|r| r.success).count();
            let times: Vec<f64> = rs.iter().map(|r| r.planning_time_s).collect();
            ReportRow {
                family,
                robots,
                success_rate: successes as f64 / rs.len() as f64,
                mean_time_s: mean(times.iter().copied()).unwrap_or(0.0),
                median_time_s: median(times).unwrap_or(0.0),
                mean_path_len: mean(rs.iter().flat_map(|r| r.path_lengths.iter().copied())).unwrap_or(0.0),
                min_clearance: rs
                    .iter()
                    .filter(|r| r.success)
                    .filter_map(|r| r.min_clearance)
                    .reduce(f64::min),
                timeouts: rs.iter().filter(|r| r.timed_out).count(),
                successes,
                scenarios: rs.len(),
                mean_detour_ratio: mean(rs.iter().flat_map(|r| r.detour_ratios.iter().copied())),
            }
        })
        .collect();
    SuiteReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(BenchError::Spec(format!("unsupported report format {other:?}"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report(report: &SuiteReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => {
            let mut out = CSV_COLUMNS.join(",");
            out.push('\n');
            for r in &report.rows {
                let fields = [
                    r.family.to_string(),
                    r.robots.to_string(),
                    r.success_rate.to_string(),
                    r.mean_time_s.to_string(),
                    r.median_time_s.to_string(),
                    r.mean_path_len.to_string(),
                    opt(r.min_clearance),
                    r.timeouts.to_string(),
                    r.successes.to_string(),
                    r.scenarios.to_string(),
                    opt(r.mean_detour_ratio),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out
        }
    }
}

/// One JSON object per line.
pub fn write_records(records: &[ScenarioRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(family: MapFamily, success: bool, time: f64, clearance: f64) -> ScenarioRecord {
        ScenarioRecord {
            family,
            robots: 3,
            index: 0,
            name: "x".into(),
            seed: 0,
            success,
            timed_out: false,
            planning_time_s: time,
            goals_reached: if success { 3 } else { 2 },
            static_violations: 0,
            inter_robot_violations: 0,
            path_lengths: vec![1.0, 2.0, 3.0],
            detour_ratios: vec![1.5],
            min_clearance: Some(clearance),
            inside_reachable: None,
            error: None,
        }
    }

    #[test]
    fn aggregate_counts() {
        let recs = vec![
            record(MapFamily::Room, true, 0.4, 0.2),
            record(MapFamily::Room, false, 0.2, 0.05),
            record(MapFamily::Room, true, 0.3, 0.15),
            record(MapFamily::DropRegion, true, 1.0, 0.3),
        ];
        let rep = aggregate(&recs);
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.rows[0].family, MapFamily::DropRegion);
        let room = rep.row(MapFamily::Room, 3).unwrap();
        assert!((room.success_rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(room.median_time_s, 0.3);
        assert_eq!(room.min_clearance, Some(0.15));
        assert_eq!(room.mean_path_len, 2.0);
    }

    #[test]
    fn csv_header_and_json_round_trip() {
        let rep = aggregate(&[record(MapFamily::Shelf, true, 0.5, 0.2)]);
        let csv = write_report(&rep, ReportFormat::Csv);
        assert_eq!(
            csv.lines().next().unwrap(),
            "family,N,success_rate,mean_time_s,median_time_s,mean_path_len,min_clearance,timeouts,successes,scenarios,mean_detour_ratio"
        );
        let json = write_report(&rep, ReportFormat::Json);
        let back: SuiteReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
