use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kepler-cz")).args(args).env("KEPLER_CZ_THREADS", "2").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn catalog_csv_has_header_and_nineteen_rows() {
    let out = run(&["catalog", "--jacobi", "-2.1", "--covers", "3", "--kmax", "11", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["kind", "k", "l", "N", "E", "period", "index", "L3_sign"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 19);
    let fam = rows.iter().find(|r| &r[0] == "family" && &r[1] == "8" && &r[2] == "1").unwrap();
    assert_eq!(&fam[6], "63/2");
    // 17 significant digits round trip
    let e: f64 = rows[0][4].parse().unwrap();
    assert_eq!(format!("{e:.16e}"), rows[0][4]);
}

#[test]
fn json_document_shape() {
    let doc = json(&["catalog", "--jacobi", "-2.1", "--covers", "1", "--kmax", "8"]);
    assert_eq!(doc["command"], "catalog");
    assert_eq!(doc["config"]["jacobi"], -2.1);
    assert!(doc["diagnostics"].is_array());
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4 + 3);
    assert_eq!(rows[0]["kind"], "retrograde");
    assert_eq!(rows[0]["index"], "2");
}

#[test]
fn family_index_is_a_fraction() {
    let doc = json(&["index", "--family", "8,1"]);
    assert_eq!(doc["rows"][0]["closed_form"], "63/2");
}

#[test]
fn numeric_index_reports_crossings() {
    let doc = json(&["index", "--jacobi", "-2.1", "--orbit", "retrograde", "--cover", "1", "--numeric"]);
    let row = &doc["rows"][0];
    assert_eq!(row["closed_form"], "2");
    assert_eq!(row["numeric"], "2");
    assert_eq!(row["agrees"], true);
    let crossings = row["crossings"].as_array().unwrap();
    assert_eq!(crossings[0]["time"], 0.0);
    assert_eq!(crossings[0]["signature"], 4);
}

#[test]
fn collision_index_without_numeric() {
    let doc = json(&["index", "--orbit", "collision+", "--cover", "3"]);
    assert_eq!(doc["rows"][0]["closed_form"], "12");
}

#[test]
fn non_generic_energy_exits_two_and_names_the_family() {
    let out = run(&["catalog", "--jacobi", "-2.5", "--kmax", "11"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("k = 8, l = 1"), "{err}");
}

#[test]
fn above_critical_exits_two() {
    assert_eq!(run(&["catalog", "--jacobi", "-1.4"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["catalog", "--covers", "0"]).status.code(), Some(1));
    assert_eq!(run(&["index", "--family", "16,2"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bifurcation_of_eight_one() {
    let doc = json(&["bifurcation", "--family", "8,1"]);
    let row = &doc["rows"][0];
    assert_eq!(row["birth"], "direct^7");
    assert_eq!(row["death"], "retrograde^9");
    assert!((row["c_minus"].as_f64().unwrap() + 2.5).abs() < 1e-12);
}

#[test]
fn ledger_matches_at_cap_ten() {
    let doc = json(&["ledger", "--jacobi", "-2.1", "--cap", "10"]);
    let mult: Vec<(i64, i64)> = doc["rows"].as_array().unwrap().iter().map(|r| (r["degree"].as_i64().unwrap(), r["multiplicity"].as_i64().unwrap())).filter(|r| r.1 > 0).collect();
    assert_eq!(mult, [(2, 1), (4, 2), (6, 2), (8, 2), (10, 2)]);
}

#[test]
fn moduli_sampling_is_seeded() {
    let args = ["moduli", "--energy", "-0.5", "--level", "0.3", "--samples", "5", "--seed", "11", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 6);
}

#[test]
fn moduli_critical_points_by_default() {
    let doc = json(&["moduli"]);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--suite", "poisson", "--seed", "42", "--samples", "20"];
    let a = json(&args);
    assert_eq!(a, json(&args));
    assert!(a["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn config_file_and_output_path() {
    let dir = std::env::temp_dir().join(format!("kepler-cz-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    let out = dir.join("out.json");
    std::fs::write(&cfg, r#"{"jacobi": -2.1, "covers": 2, "kmax": 7}"#).unwrap();
    let res = run(&["catalog", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["covers"], 2);
    // retrograde, direct and both collisions twice, plus (6,1) and (7,1)
    assert_eq!(doc["rows"].as_array().unwrap().len(), 10);

    // explicit flags win over the file
    let res = run(&["catalog", "--config", cfg.to_str().unwrap(), "--covers", "1"]);
    let doc: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(doc["config"]["covers"], 1);

    std::fs::write(&cfg, r#"{"jacobbi": -2.1}"#).unwrap();
    assert_eq!(run(&["catalog", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}
