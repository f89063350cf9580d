//! JSON codecs for map and scenario documents (format version 1).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Cell, MapError, MapSource, Point, RobotSpec, Scenario, SemanticRegion, WorldMap};
use crate::planner::ConfigOverrides;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CodecError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for CodecError {
    fn from(e: serde_json::Error) -> Self {
        CodecError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    version: u32,
    name: String,
    width_cells: usize,
    height_cells: usize,
    world_size: [f64; 2],
    occupancy: Vec<String>,
    regions: Vec<RegionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    label: String,
    cells: Vec<[usize; 2]>,
}

/// Canonical map document. Row 0 of `occupancy` is the bottom row.
pub fn encode_map(map: &WorldMap) -> String {
    let q = |s: &str| serde_json::to_string(s).expect("string serializes");
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"version\": {FORMAT_VERSION},");
    let _ = writeln!(out, "  \"name\": {},", q(map.name()));
    let _ = writeln!(out, "  \"width_cells\": {},", map.width());
    let _ = writeln!(out, "  \"height_cells\": {},", map.height());
    let (wx, wy) = map.world_size();
    let _ = writeln!(
        out,
        "  \"world_size\": [{}, {}],",
        serde_json::to_string(&wx).unwrap(),
        serde_json::to_string(&wy).unwrap()
    );
    out.push_str("  \"occupancy\": [\n");
    let occ = map.occupancy();
    for row in 0..map.height() {
        let line: String = occ[row * map.width()..(row + 1) * map.width()]
            .iter()
            .map(|&o| if o { '1' } else { '0' })
            .collect();
        let sep = if row + 1 < map.height() { "," } else { "" };
        let _ = writeln!(out, "    \"{line}\"{sep}");
    }
    out.push_str("  ],\n");
    out.push_str("  \"regions\": [");
    for (i, region) in map.regions().iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let cells: Vec<String> = region
            .cells
            .iter()
            .map(|c| format!("[{},{}]", c.col, c.row))
            .collect();
        let _ = write!(
            out,
            "    {{\"label\": {}, \"cells\": [{}]}}",
            q(&region.label),
            cells.join(",")
        );
    }
    if !map.regions().is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

pub fn decode_map(text: &str) -> Result<WorldMap, CodecError> {
    let doc: MapDoc = serde_json::from_str(text)?;
    map_from_doc(doc)
}

fn map_from_doc(doc: MapDoc) -> Result<WorldMap, CodecError> {
    if doc.version != FORMAT_VERSION {
        return Err(CodecError::field(
            "version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", doc.version),
        ));
    }
    if doc.width_cells == 0 {
        return Err(CodecError::field("width_cells", "must be positive"));
    }
    if doc.height_cells == 0 {
        return Err(CodecError::field("height_cells", "must be positive"));
    }
    if doc.occupancy.len() != doc.height_cells {
        return Err(CodecError::field(
            "occupancy",
            format!(
                "expected {} rows, found {}",
                doc.height_cells,
                doc.occupancy.len()
            ),
        ));
    }
    let mut occupancy = Vec::with_capacity(doc.width_cells * doc.height_cells);
    for (row, line) in doc.occupancy.iter().enumerate() {
        if line.chars().count() != doc.width_cells {
            return Err(CodecError::field(
                format!("occupancy[{row}]"),
                format!(
                    "row has length {}, expected {}",
                    line.chars().count(),
                    doc.width_cells
                ),
            ));
        }
        for (col, ch) in line.chars().enumerate() {
            occupancy.push(match ch {
                '0' => false,
                '1' => true,
                other => {
                    return Err(CodecError::field(
                        format!("occupancy[{row}]"),
                        format!("invalid character {other:?} at column {col}"),
                    ))
                }
            });
        }
    }
    let mut regions = Vec::with_capacity(doc.regions.len());
    for (i, r) in doc.regions.into_iter().enumerate() {
        for (j, c) in r.cells.iter().enumerate() {
            if c[0] >= doc.width_cells || c[1] >= doc.height_cells {
                return Err(CodecError::field(
                    format!("regions[{i}].cells[{j}]"),
                    format!("cell [{}, {}] is out of bounds", c[0], c[1]),
                ));
            }
        }
        regions.push(SemanticRegion::new(
            r.label,
            r.cells.into_iter().map(Cell::from).collect(),
        ));
    }
    WorldMap::new(
        doc.name,
        doc.width_cells,
        doc.height_cells,
        (doc.world_size[0], doc.world_size[1]),
        occupancy,
        regions,
    )
    .map_err(|e| {
        let field = match &e {
            MapError::InvalidDimensions(_) => "world_size",
            MapError::NoFreeSpace | MapError::OccupancyLength { .. } => "occupancy",
            _ => "regions",
        };
        CodecError::field(field, e.to_string())
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    map: Value,
    seed: u64,
    robots: Vec<RobotDoc>,
    #[serde(default)]
    config: ConfigOverrides,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    id: String,
    #[serde(default)]
    start: Option<[f64; 2]>,
    instruction: String,
}

pub fn encode_scenario(scenario: &Scenario) -> String {
    let map = match &scenario.map_source {
        MapSource::Inline => {
            serde_json::from_str(&encode_map(&scenario.map)).expect("canonical map is valid JSON")
        }
        MapSource::File(path) => Value::String(path.to_string_lossy().into_owned()),
    };
    let doc = ScenarioDoc {
        version: FORMAT_VERSION,
        name: scenario.name.clone(),
        map,
        seed: scenario.seed,
        robots: scenario
            .robots
            .iter()
            .map(|r| RobotDoc {
                id: r.id.clone(),
                start: r.start.map(|p| [p.x, p.y]),
                instruction: r.instruction.clone(),
            })
            .collect(),
        config: scenario.config.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("scenario serializes");
    s.push('\n');
    s
}

/// Decodes a scenario; relative map paths resolve against `base_dir`.
pub fn decode_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario, CodecError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(CodecError::field(
            "version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", doc.version),
        ));
    }
    let (map, map_source) = match doc.map {
        Value::String(path) => {
            let rel = PathBuf::from(&path);
            let full = match base_dir {
                Some(dir) if rel.is_relative() => dir.join(&rel),
                _ => rel.clone(),
            };
            let text = std::fs::read_to_string(&full).map_err(|source| CodecError::Io {
                path: full.clone(),
                source,
            })?;
            let map = decode_map(&text).map_err(|e| CodecError::field("map", e.to_string()))?;
            (map, MapSource::File(rel))
        }
        value @ Value::Object(_) => {
            let doc: MapDoc = serde_json::from_value(value)
                .map_err(|e| CodecError::field("map", e.to_string()))?;
            let map = map_from_doc(doc).map_err(|e| CodecError::field("map", e.to_string()))?;
            (map, MapSource::Inline)
        }
        _ => {
            return Err(CodecError::field(
                "map",
                "expected a file path or an inline map object",
            ))
        }
    };
    let mut robots = Vec::with_capacity(doc.robots.len());
    for (i, r) in doc.robots.into_iter().enumerate() {
        if r.id.is_empty() {
            return Err(CodecError::field(format!("robots[{i}].id"), "must be nonempty"));
        }
        if let Some([x, y]) = r.start {
            if !x.is_finite() || !y.is_finite() {
                return Err(CodecError::field(
                    format!("robots[{i}].start"),
                    "coordinates must be finite",
                ));
            }
        }
        robots.push(RobotSpec {
            id: r.id,
            start: r.start.map(|[x, y]| Point::new(x, y)),
            instruction: r.instruction,
        });
    }
    let scenario = Scenario {
        name: doc.name,
        map: Arc::new(map),
        map_source,
        robots,
        seed: doc.seed,
        config: doc.config,
    };
    scenario
        .validate()
        .map_err(|e| CodecError::field("robots", e.to_string()))?;
    Ok(scenario)
}
