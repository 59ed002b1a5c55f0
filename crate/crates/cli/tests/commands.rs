use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn delaybeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaybeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(cmd: &str, out: &Path, overrides: &[&str]) {
    let out_s = out.to_str().unwrap();
    let mut args = vec![cmd, "--out", out_s];
    for o in overrides {
        args.extend(["--override", o]);
    }
    let o = delaybeam(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    read_json(&path)
}

fn type_matches(v: &Value, t: &str) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// Checks the keywords used by the shipped schemas: `type`, `const`,
/// `enum`, `required`, `properties`, `additionalProperties: false`, `items`,
/// `minItems`, `maxItems`, `minimum` and local `$ref`s.
fn validate(root: &Value, s: &Value, v: &Value, at: &str) -> Vec<String> {
    let mut errs = Vec::new();
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let target = r
            .trim_start_matches("#/")
            .split('/')
            .fold(root, |node, key| &node[key]);
        return validate(root, target, v, at);
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_matches(v, t),
            Value::Array(ts) => ts.iter().any(|t| type_matches(v, t.as_str().unwrap())),
            _ => false,
        };
        if !ok {
            errs.push(format!("{at}: {v} is not {t}"));
            return errs;
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            errs.push(format!("{at}: expected {c}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errs.push(format!("{at}: {x} < {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = s.get("properties").and_then(Value::as_object);
        for req in s
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            if !obj.contains_key(req.as_str().unwrap()) {
                errs.push(format!("{at}: missing {req}"));
            }
        }
        for (k, val) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => errs.extend(validate(root, sub, val, &format!("{at}.{k}"))),
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{at}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let Some(arr) = v.as_array() {
        if let Some(n) = s.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < n {
                errs.push(format!("{at}: fewer than {n} items"));
            }
        }
        if let Some(n) = s.get("maxItems").and_then(Value::as_u64) {
            if (arr.len() as u64) > n {
                errs.push(format!("{at}: more than {n} items"));
            }
        }
        if let Some(items) = s.get("items") {
            for (i, item) in arr.iter().enumerate() {
                errs.extend(validate(root, items, item, &format!("{at}[{i}]")));
            }
        }
    }
    errs
}

fn assert_schema(name: &str, doc: &Value) {
    let s = schema(name);
    let errs = validate(&s, &s, doc, "$");
    assert!(errs.is_empty(), "{errs:#?}");
}

#[test]
fn simulate_default_run_is_certified_and_decays() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("simulate", dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, ["t", "E", "I1", "I2", "V", "tip_velocity"]);
    assert_eq!(rows.len(), 50 * 64 + 1);
    let summary = read_json(&dir.path().join("summary.json"));
    assert_schema("summary.schema.json", &summary);
    assert_eq!(summary["certificate"]["member"], true);
    assert!(summary["fit"]["rate"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["sandwich_violations"], 0);
    assert!(dir.path().join(delaybeam_cli::RESOLVED_CONFIG).exists());
}

#[test]
fn zero_preset_gives_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "simulate",
        dir.path(),
        &["initial.preset=zero", "grid.N=16", "grid.t_f=8"],
    );
    let (_, rows) = read_csv(&dir.path().join("trace.csv"));
    for row in &rows {
        for v in &row[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
    let summary = read_json(&dir.path().join("summary.json"));
    assert_schema("summary.schema.json", &summary);
    assert_eq!(summary["fully_decayed"], true);
    assert!(summary["fit"].is_null());
}

#[test]
fn conservative_limit_runs_without_weights() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "simulate",
        dir.path(),
        &[
            "beam.tension=0",
            "beam.gain=0",
            "beam.alpha=0",
            "grid.N=32",
            "grid.t_f=4",
        ],
    );
    let summary = read_json(&dir.path().join("summary.json"));
    assert_schema("summary.schema.json", &summary);
    assert!(summary["weights"].is_null());
    assert!(!summary["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    run_ok(
        "simulate",
        a.path(),
        &["beam.alpha=-0.05", "grid.N=32", "grid.t_f=10"],
    );
    let b = tempfile::tempdir().unwrap();
    let echo = a.path().join(delaybeam_cli::RESOLVED_CONFIG);
    let o = delaybeam(&[
        "simulate",
        "--config",
        echo.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for f in ["trace.csv", "summary.json", delaybeam_cli::RESOLVED_CONFIG] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[beam]\ntension = 1.0\ngian = 2.0\n").unwrap();
    let o = delaybeam(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beam.gian"));

    let o = delaybeam(&[
        "region",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "beam.tension=4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = delaybeam(&[
        "simulate",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "grid.N=oops",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.N"));
}

#[test]
fn blowup_exits_3_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = delaybeam(&[
        "simulate",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "beam.alpha=1e300",
        "--override",
        "grid.N=16",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step"));
}

#[test]
fn region_grid_and_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("region", dir.path(), &["region.resolution=21"]);
    let (header, rows) = read_csv(&dir.path().join("region.csv"));
    assert_eq!(header, ["alpha", "xi", "member", "nu"]);
    assert_eq!(rows.len(), 21 * 21);
    assert!(rows.iter().any(|r| r[2] == "true"));
    for i in 0..21 {
        for j in 0..21 {
            let (a, b) = (&rows[i * 21 + j], &rows[(20 - i) * 21 + j]);
            assert_eq!(a[0].parse::<f64>().unwrap(), -b[0].parse::<f64>().unwrap());
            assert_eq!(a[2], b[2]);
        }
    }
    let (header, rows) = read_csv(&dir.path().join("boundaries.csv"));
    assert_eq!(header, ["curve", "alpha", "xi"]);
    assert_eq!(rows.len(), 42);
}

#[test]
fn resolvent_smooth_and_zero_presets() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("resolvent", dir.path(), &[]);
    let (header, rows) = read_csv(&dir.path().join("resolvent.csv"));
    assert_eq!(header, ["x", "y_closed", "y_oracle", "abs_diff"]);
    assert_eq!(rows.len(), 65);
    let s = read_json(&dir.path().join("resolvent_summary.json"));
    assert_schema("resolvent_summary.schema.json", &s);
    let slope = s["convergence"]["slope"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "{slope}");
    assert!(s["boundary_residuals"]["relative"].as_f64().unwrap() <= 1e-8);

    let zero = tempfile::tempdir().unwrap();
    run_ok("resolvent", zero.path(), &["resolvent.preset=zero"]);
    let (_, rows) = read_csv(&zero.path().join("resolvent.csv"));
    for r in rows {
        for v in &r[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
    let s = read_json(&zero.path().join("resolvent_summary.json"));
    assert_schema("resolvent_summary.schema.json", &s);
    assert!(s["convergence"]["slope"].is_null());
}

#[test]
fn resolvent_manufactured_preset_matches_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "resolvent",
        dir.path(),
        &["resolvent.preset=manufactured", "beam.alpha=0.4"],
    );
    let s = read_json(&dir.path().join("resolvent_summary.json"));
    assert!(s["exact_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn single_point_sweep_matches_simulate() {
    let common = [
        "grid.N=32",
        "grid.M=16",
        "grid.t_f=20",
        "beam.alpha=0.05",
        "beam.xi=0.25",
    ];
    let sim = tempfile::tempdir().unwrap();
    run_ok("simulate", sim.path(), &common);
    let mut sweep_args = common.to_vec();
    sweep_args.extend([
        "sweep.alpha_min=0.05",
        "sweep.alpha_max=0.05",
        "sweep.alpha_count=1",
    ]);
    sweep_args.extend(["sweep.xi_min=0.25", "sweep.xi_max=0.25", "sweep.xi_count=1"]);
    let sw = tempfile::tempdir().unwrap();
    run_ok("sweep", sw.path(), &sweep_args);
    let summary = read_json(&sim.path().join("summary.json"));
    let (header, rows) = read_csv(&sw.path().join("sweep.csv"));
    assert_eq!(
        header,
        [
            "alpha",
            "xi",
            "member",
            "nu",
            "fitted_rate",
            "fit_residual",
            "E_final_over_E0",
            "status"
        ]
    );
    assert_eq!(rows.len(), 1);
    let rate: f64 = rows[0][4].parse().unwrap();
    assert_eq!(rate, summary["fit"]["rate"].as_f64().unwrap());
    assert_eq!(rows[0][2], summary["certificate"]["member"].to_string());
    assert_eq!(rows[0][7], "ok");
}

#[test]
fn sweep_rows_are_sorted_and_blowups_recorded() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "sweep",
        dir.path(),
        &[
            "grid.N=16",
            "grid.M=8",
            "grid.t_f=12",
            "sweep.alpha_min=-1e300",
            "sweep.alpha_max=0.1",
            "sweep.alpha_count=2",
            "sweep.xi_count=3",
        ],
    );
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 6);
    let keys: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(keys, sorted);
    for r in &rows[..3] {
        assert_eq!(r[7], "blowup");
        assert_eq!(r[4], "");
    }
    for r in &rows[3..] {
        assert_eq!(r[7], "ok");
    }
}
