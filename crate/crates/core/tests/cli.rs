use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use thermoplan::heatfield::decode_field_dump;

fn thermoplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoplan"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_scenario(dir: &Path, name: &str, map: &str, instruction: &str) {
    let doc = serde_json::json!({
        "version": 1,
        "name": name,
        "map": map,
        "seed": 1,
        "robots": [
            {"id": "a", "start": null, "instruction": instruction},
            {"id": "b", "start": null, "instruction": instruction}
        ]
    });
    std::fs::write(dir.join(format!("{name}.json")), doc.to_string()).unwrap();
}

fn is_point(v: &Value) -> bool {
    v.as_array()
        .is_some_and(|a| a.len() == 2 && a.iter().all(Value::is_f64))
}

/// Structural check of a plan document.
fn check_plan_schema(doc: &Value) {
    assert!(doc["scenario"].is_string() || doc["scenario"].is_null());
    assert!(doc["seed"].is_u64());
    assert!(doc["success"].is_boolean());
    assert!(doc["timed_out"].is_boolean());
    assert!(doc["planning_time_s"].is_f64());
    assert!(doc["min_clearance"].is_f64() || doc["min_clearance"].is_null());
    let robots = doc["robots"].as_array().unwrap();
    assert!(!robots.is_empty());
    for r in robots {
        assert!(r["id"].is_string());
        assert!(r["goal_label"].is_string());
        assert!(r["goal_reached"].is_boolean());
        assert!(r["goal_distance"].is_f64() || r["goal_distance"].is_null());
        assert!(r["path_length"].is_f64());
        let w = r["waypoints"].as_array().unwrap();
        assert!(w.len() >= 2 && w.iter().all(is_point));
    }
    assert!(doc["violations"]["static"].is_array());
    assert!(doc["violations"]["inter_robot"].is_array());
}

#[test]
fn gen_map_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["m1.json", "m2.json"] {
        let o = thermoplan(d, &["gen-map", "--family", "room", "--seed", "7", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(d.join("m1.json")).unwrap();
    let b = std::fs::read(d.join("m2.json")).unwrap();
    assert_eq!(a, b);
    let stdout = thermoplan(d, &["gen-map", "--family", "room", "--seed", "7"]);
    assert_eq!(stdout.stdout, a);
}

#[test]
fn plan_writes_schema_valid_result_and_exit_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&thermoplan(d, &["gen-map", "--family", "shelf", "--seed", "2", "--out", "m.json"])), 0);
    let map: Value = serde_json::from_slice(&std::fs::read(d.join("m.json")).unwrap()).unwrap();
    let label = map["regions"][0]["label"].as_str().unwrap().to_string();
    write_scenario(d, "s", "m.json", &format!("move to the {label}"));

    let o = thermoplan(d, &["plan", "--scenario", "s.json", "--seed", "3", "--out", "p.json", "--svg", "p.svg"]);
    let doc: Value = serde_json::from_slice(&std::fs::read(d.join("p.json")).unwrap()).unwrap();
    check_plan_schema(&doc);
    assert_eq!(doc["seed"].as_u64(), Some(3));
    let success = doc["success"].as_bool().unwrap();
    assert_eq!(code(&o), if success { 0 } else { 1 });
    roxmltree::Document::parse(&std::fs::read_to_string(d.join("p.svg")).unwrap()).unwrap();

    // same seed, same plan apart from wall-clock time
    thermoplan(d, &["plan", "--scenario", "s.json", "--seed", "3", "--out", "q.json"]);
    let mut again: Value = serde_json::from_slice(&std::fs::read(d.join("q.json")).unwrap()).unwrap();
    let mut first = doc.clone();
    first["planning_time_s"] = Value::from(0.0);
    again["planning_time_s"] = Value::from(0.0);
    assert_eq!(first, again);

    let o = thermoplan(d, &["render", "--scenario", "s.json", "--plan", "p.json", "--layers", "occupancy,regions,heat:4,field:8,trajectories,starts", "--out", "."]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = d.join("s.occupancy+regions+heat4+field8+trajectories+starts.svg");
    roxmltree::Document::parse(&std::fs::read_to_string(svg).unwrap()).unwrap();

    let o = thermoplan(d, &["fields", "--scenario", "s.json", "--level", "5", "--format", "bin", "--out", "f.bin"]);
    assert_eq!(code(&o), 0);
    let dump = decode_field_dump(&std::fs::read(d.join("f.bin")).unwrap()).unwrap();
    assert_eq!((dump.width, dump.height, dump.t, dump.levels), (128, 128, 5, 20));
}

#[test]
fn unreachable_goal_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n = 32;
    let mut cells = vec![false; n * n];
    for r in 12..20 {
        for c in 12..20 {
            if !((13..19).contains(&r) && (13..19).contains(&c)) {
                cells[r * n + c] = true;
            }
        }
    }
    let map = thermoplan::gridmap::WorldMap::new(
        "sealed",
        n,
        n,
        (2.0, 2.0),
        cells,
        vec![thermoplan::gridmap::SemanticRegion::rect("vault", 14, 14, 4, 4)],
    )
    .unwrap();
    std::fs::write(d.join("m.json"), thermoplan::gridmap::encode_map(&map)).unwrap();
    let doc = serde_json::json!({
        "version": 1, "map": "m.json", "seed": 0,
        "robots": [{"id": "a", "start": [0.2, 0.2], "instruction": "move to the vault"}]
    });
    std::fs::write(d.join("s.json"), doc.to_string()).unwrap();
    let o = thermoplan(d, &["plan", "--scenario", "s.json", "--steps", "6", "--anneal", "10"]);
    assert_eq!(code(&o), 1);
    let result: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(result["success"], Value::Bool(false));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    for args in [
        vec!["plan", "--scenario", "bad.json"],
        vec!["plan", "--scenario", "missing.json"],
        vec!["plan", "--scenario", "bad.json", "--frobnicate"],
        vec!["bench", "--format", "xml", "--n", "1"],
        vec!["gen-map", "--family", "cave"],
        vec!["warp"],
    ] {
        let o = thermoplan(d, &args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn bench_drop_region_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = thermoplan(d, &["bench", "--families", "drop_region", "--robots", "3", "--n", "30", "--workers", "8", "--out", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], thermoplan::bench::CSV_COLUMNS.join(","));
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&row[..2], &["drop_region", "3"]);
    let rate: f64 = row[2].parse().unwrap();
    assert!(rate >= 0.95, "success rate {rate}");
    let records = std::fs::read_to_string(d.join("r.records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 30);
    for line in records.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
}
