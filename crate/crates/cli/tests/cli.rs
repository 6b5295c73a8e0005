use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = orlat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    orlat(args).status.code().expect("exit code")
}

/// Column names and rows of a CSV with `#` comments.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn comments(text: &str) -> Vec<&str> {
    text.lines().filter(|l| l.starts_with('#')).collect()
}

#[test]
fn phi_table_rows_at_zero_and_pi() {
    let text = ok(&["phi", "--horizon", "1024", "--grid", "16"]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["t", "phi_paper", "phi_excursion", "oracle_low", "oracle_high"]);
    assert_eq!(rows.len(), 17);
    let first: Vec<f64> = rows[0].iter().map(|s| num(s)).collect();
    assert_eq!(&first[..3], &[0.0, 1.0, 1.0]);
    assert!(first[3] < 1.0 && first[3] > 0.9);
    assert_eq!(first[4], 1.0);
    let last: Vec<f64> = rows[16].iter().map(|s| num(s)).collect();
    assert!((last[0] - PI).abs() < 1e-15);
    assert!((last[1] - 0.5051025722).abs() < 1e-9);
    assert!((last[2] - 0.2679491924).abs() < 1e-9);
    for r in &rows {
        assert!(num(&r[3]) <= num(&r[4]));
    }
}

#[test]
fn header_echoes_resolved_config() {
    let text = ok(&["green", "--y", "3,0", "--seed", "9", "--tol", "1e-8"]);
    let head = comments(&text);
    assert!(head[0].starts_with("# orlat "));
    for line in [
        "# command = green",
        "# seed = 9",
        "# horizon = 4096",
        "# tol = 1e-8",
        "# variant = excursion (requested auto)",
        "# format = csv",
        "# route = spectral",
        "# y = 3,0",
    ] {
        assert!(head.contains(&line), "missing {line:?} in {head:?}");
    }
}

#[test]
fn csv_round_trips_and_matches_json() {
    let csv_text = ok(&["green", "--x", "0,1", "--rect", "-2:2,0:1"]);
    let (header, rows) = parse_csv(&csv_text);
    assert_eq!(header, ["y1", "y2", "value", "error", "route"]);
    assert_eq!(rows.len(), 5 * 2);
    let json: Value = serde_json::from_str(&ok(&["green", "--x", "0,1", "--rect", "-2:2,0:1", "--format", "json"])).unwrap();
    let jrows = json["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len());
    for (c, j) in rows.iter().zip(jrows) {
        assert_eq!(num(&c[0]), j["y1"].as_f64().unwrap());
        assert_eq!(num(&c[1]), j["y2"].as_f64().unwrap());
        assert_eq!(num(&c[2]), j["value"].as_f64().unwrap());
        assert_eq!(num(&c[3]), j["error"].as_f64().unwrap());
        assert_eq!(c[4], "spectral");
        assert!(num(&c[2]) > 0.0);
    }
}

#[test]
fn rectangle_row_count_is_its_area() {
    let (_, rows) = parse_csv(&ok(&["green", "--rect", "-3:4,-2:0"]));
    assert_eq!(rows.len(), 8 * 3);
    let (_, rows) = parse_csv(&ok(&["green", "--seq", "lambda=0.5", "--ks", "8:64:4"]));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3][0..2], ["2048".to_string(), "64".to_string()]);
}

#[test]
fn three_routes_agree_within_stated_errors() {
    let value = |route: &str| {
        let (_, rows) = parse_csv(&ok(&["green", "--y", "1,0", "--route", route, "--paths", "20000", "--seed", "3"]));
        assert_eq!(rows[0][4], route);
        (num(&rows[0][2]), num(&rows[0][3]))
    };
    let (s, es) = value("spectral");
    let (o, eo) = value("oracle");
    let (m, em) = value("mc");
    // the oracle value is a truncated sum: below the full Green function
    assert!(o <= s + es);
    assert!(s - o <= eo + es, "{s} {o} {eo}");
    // the simulation truncates at the same horizon as the oracle
    assert!((m - o).abs() <= 3.0 * em, "{m} {o} {em}");
    assert!((m - s).abs() <= 3.0 * em + eo + es);
}

#[test]
fn martin_output_is_deterministic_with_unit_base_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("martin.csv");
    let p = path.to_str().unwrap();
    let args = ["martin", "--xbox", "-1:1", "--seq", "lambda=1", "--ks", "16,32,64", "--out", p];
    let read = |path: &Path| std::fs::read(path).unwrap();
    ok(&args);
    let first = read(&path);
    ok(&args);
    assert_eq!(first, read(&path));
    let text = String::from_utf8(first).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["x1", "x2", "k", "y1", "y2", "K", "error"]);
    assert_eq!(rows.len(), 27);
    for r in &rows {
        if r[0] == "0" && r[1] == "0" {
            assert_eq!(num(&r[5]), 1.0);
            assert_eq!(num(&r[6]), 0.0);
        }
        assert!(num(&r[5]) > 0.0);
    }
    let worst = rows
        .iter()
        .filter(|r| r[2] == "64")
        .map(|r| (num(&r[5]) - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn evolve_and_first_hit_exact_tables() {
    let (header, rows) = parse_csv(&ok(&["evolve", "--horizon", "3", "--mode", "exact", "--x", "1,-1"]));
    assert_eq!(header, ["x1", "x2", "weight_num", "weight_den"]);
    let total: f64 = rows.iter().map(|r| num(&r[2]) / num(&r[3])).sum();
    assert!((total - 1.0).abs() < 1e-15);
    let (header, rows) = parse_csv(&ok(&["evolve", "--horizon", "3", "--x", "1,-1"]));
    assert_eq!(header, ["x1", "x2", "weight_float"]);
    assert!(!rows.is_empty());

    let text = ok(&["first-hit", "--x", "0,1", "--horizon", "3", "--mode", "exact"]);
    let (_, rows) = parse_csv(&text);
    let got: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[1].as_str(), r[2].as_str())).collect();
    assert_eq!(got, [("0", "10", "27"), ("1", "1", "9"), ("2", "1", "27")]);
    assert!(comments(&text).iter().any(|l| l.starts_with("# escaped_mass = 0.48148")));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "seed = 7\nhorizon = 12\nformat = \"json\"\n").unwrap();
    let p = path.to_str().unwrap();
    let v: Value = serde_json::from_str(&ok(&["evolve", "--config", p, "--horizon", "4"])).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["horizon"], 4);
    std::fs::write(&path, "seeds = 7\n").unwrap();
    assert_eq!(code(&["evolve", "--config", p]), 2);
    assert_eq!(code(&["evolve", "--config", "/nonexistent/run.toml"]), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["green", "--y", "1,0", "--route", "teleport"]), 2);
    assert_eq!(code(&["green", "--y", "1"]), 2);
    assert_eq!(code(&["green", "--y", "1,0", "--tol", "-1"]), 2);
    assert_eq!(code(&["green", "--x", "0,1", "--y", "1,0", "--variant", "paper"]), 2);
    assert_eq!(code(&["first-hit", "--x", "4,0"]), 2);
    assert_eq!(code(&["evolve", "--x", "9223372036854775807,0", "--horizon", "3"]), 3);
    assert_eq!(code(&["--help"]), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_orlat"))
        .args(["evolve", "--horizon", "1"])
        .env("ORLAT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_orlat"))
        .args(["evolve", "--horizon", "1"])
        .env("ORLAT_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn kernel_suite_passes_quickly() {
    let start = std::time::Instant::now();
    let v: Value = serde_json::from_str(&ok(&["verify", "--suite", "kernel"])).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(v["failed"], 0);
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["suite"], "kernel");
        assert_eq!(c["criterion"], 1);
        assert!(c.get("elapsed").is_none());
    }
}

#[test]
fn injected_phi_shift_fails_the_spectral_suite() {
    let out = orlat(&["verify", "--suite", "spectral", "--inject-phi-shift", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["failed"].as_u64().unwrap() > 0);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"phi_at_pi"), "{failed:?}");
}
