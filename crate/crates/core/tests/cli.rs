//! The `polyform` binary end to end: exit codes, files and their formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polyform"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn polyform(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn simulate(name: &str, dir: &Path) -> (Output, PathBuf) {
    let prefix = dir.join(name.trim_end_matches(".json"));
    let o = polyform(&["simulate", scenario(name).to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    (o, prefix)
}

fn read(prefix: &Path, suffix: &str) -> String {
    let mut p = prefix.as_os_str().to_owned();
    p.push(suffix);
    std::fs::read_to_string(PathBuf::from(p)).expect("output file exists")
}

#[test]
fn analyze_regular_hexagon_is_stable() {
    let o = polyform(&["analyze", "--n", "6", "--theta", "regular"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "stable");
    assert!((r["bound"].as_f64().unwrap() - 1.2566).abs() < 1e-4);
    for t in r["theta"].as_array().unwrap() {
        assert!((t.as_f64().unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }
    assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 8);
    assert_eq!(r["closed_form"].as_array().unwrap().len(), 4);
}

#[test]
fn analyze_triangle_is_stable_for_a_wide_angle() {
    let o = polyform(&["analyze", "--n", "3", "--theta", "3.0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["verdict"], "stable");
}

#[test]
fn analyze_beyond_the_bound_is_unstable() {
    let o = polyform(&["analyze", "--n", "6", "--theta", "1.35"]);
    assert_eq!(code(&o), 3);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "unstable");
    assert!(r["min_real"].as_f64().unwrap() < 0.0);
}

#[test]
fn analyze_at_the_bound_is_marginal() {
    let theta = (2.0 * std::f64::consts::PI / 4.0).to_string();
    let o = polyform(&["analyze", "--n", "5", "--theta", &theta]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout_json(&o)["verdict"], "marginal");
}

#[test]
fn analyze_accepts_lists_ratios_and_negative_angles() {
    let o = polyform(&["analyze", "--n", "5", "--theta", "-0.3,0.2,0.4", "--ratios", "1,2,1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["ratios"].as_array().unwrap().len(), 4);
    assert!(r["closed_form"].is_null());
}

#[test]
fn analyze_usage_errors() {
    for args in [
        vec!["analyze", "--n", "6", "--theta", "hexagon"],
        vec!["analyze", "--n", "6", "--theta", "0.1,0.2"],
        vec!["analyze", "--n", "6", "--theta", "4.0"],
        vec!["analyze", "--n", "2", "--theta", "0.1"],
        vec!["analyze", "--n", "6"],
        vec!["analyze", "--n", "6", "--theta", "1", "--ratios", "1,1"],
        vec!["frobnicate"],
    ] {
        let o = polyform(&args);
        assert_eq!(code(&o), 64, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_lists_exit_codes() {
    let o = polyform(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["analyze", "simulate", "sweep", "verify", "Exit codes", "64", "74"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn hexagon_rescales_from_ten_to_thirty() {
    let dir = tempfile::tempdir().unwrap();
    let (o, prefix) = simulate("hexagon.json", dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report: Value = serde_json::from_str(&read(&prefix, ".report.json")).unwrap();
    assert_eq!(report["converged"], true);
    assert_eq!(report["diverged"], false);
    assert_eq!(report["verdict"], "stable");
    for s in report["final_sides"].as_array().unwrap() {
        assert!((s.as_f64().unwrap() - 30.0).abs() < 1e-3);
    }
    let before = &report["events"][0]["sides_before"];
    assert_eq!(before.as_array().unwrap().len(), 6);
    for s in before.as_array().unwrap() {
        assert!((s.as_f64().unwrap() - 10.0).abs() < 1e-3);
    }
    let fit = &report["rigid_fit"];
    assert!(fit["omega"].as_f64().unwrap().abs() > 0.04);

    let csv = read(&prefix, ".csv");
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,x1,y1,x2,y2,x3,y3,x4,y4,x5,y5,x6,y6,e_theta_norm,e_d");
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last.len(), 15);
    assert!(last[14].parse::<f64>().unwrap().abs() < 1e-3);

    let svg = read(&prefix, ".svg");
    let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("version"), Some("1.1"));
    let count = |tag: &str, class: &str| {
        doc.descendants()
            .filter(|n| n.tag_name().name() == tag && n.attribute("class") == Some(class))
            .count()
    };
    assert_eq!(count("polyline", "path"), 6);
    assert_eq!(count("path", "start"), 6);
    assert_eq!(count("circle", "end"), 6);
    let closing: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("closing")).collect();
    assert_eq!(closing.len(), 1);
    assert!(closing[0].attribute("stroke-dasharray").is_some());
    let colors: std::collections::HashSet<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("path"))
        .map(|n| n.attribute("stroke").unwrap().to_string())
        .collect();
    assert_eq!(colors.len(), 6);
}

#[test]
fn hexagon_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let path = scenario("hexagon.json");
    for prefix in [&a, &b] {
        let o = polyform(&["simulate", path.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(read(&a, ".csv").as_bytes(), read(&b, ".csv").as_bytes());
}

#[test]
fn equilibrium_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let (o, prefix) = simulate("equilibrium.json", dir.path());
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_str(&read(&prefix, ".report.json")).unwrap();
    assert_eq!(report["convergence_time"], 0.0);
    assert!(report["e_d_final"].is_null());

    let csv = read(&prefix, ".csv");
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(','), "e_d column is empty: {line}");
    }

    let svg = read(&prefix, ".svg");
    let doc = roxmltree::Document::parse(&svg).unwrap();
    for path in doc.descendants().filter(|n| n.attribute("class") == Some("path")) {
        let points: std::collections::HashSet<_> = path.attribute("points").unwrap().split(' ').collect();
        assert_eq!(points.len(), 1, "agent did not move");
    }
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("start")).count(), 5);
    assert!(!svg.contains("stroke-dasharray"));
}

#[test]
fn unstable_angle_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let (o, prefix) = simulate("unstable.json", dir.path());
    assert_eq!(code(&o), 3);
    let report: Value = serde_json::from_str(&read(&prefix, ".report.json")).unwrap();
    assert_eq!(report["diverged"], true);
    assert_eq!(report["converged"], false);
    assert_eq!(report["verdict"], "unstable");
    assert!(report["diverged_at"].as_f64().unwrap() > 0.0);
}

#[test]
fn short_run_is_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("short");
    let o = polyform(&[
        "simulate",
        scenario("line.json").to_str().unwrap(),
        "--out",
        prefix.to_str().unwrap(),
        "--t-end",
        "1",
        "--dt",
        "0.05",
    ]);
    assert_eq!(code(&o), 1);
    let report: Value = serde_json::from_str(&read(&prefix, ".report.json")).unwrap();
    assert_eq!(report["final_time"], 1.0);
    assert!(report["convergence_time"].is_null());
}

#[test]
fn seed_override_changes_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("line.json");
    let mut firsts = Vec::new();
    for seed in ["1", "2"] {
        let prefix = dir.path().join(seed);
        let o = polyform(&[
            "simulate",
            path.to_str().unwrap(),
            "--out",
            prefix.to_str().unwrap(),
            "--seed",
            seed,
            "--t-end",
            "0.1",
        ]);
        assert_eq!(code(&o), 1);
        firsts.push(read(&prefix, ".csv").lines().nth(1).unwrap().to_string());
    }
    assert_ne!(firsts[0], firsts[1]);
}

#[test]
fn simulate_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyform(&["simulate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 66);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "polygon", "theta": [0.1]}}"#).unwrap();
    let o = polyform(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("law.theta"));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}, "plot": true}"#).unwrap();
    let o = polyform(&["simulate", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("plot"));
}

#[test]
fn simulate_unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("no/such/dir/run");
    let o = polyform(&["simulate", scenario("equilibrium.json").to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    assert_eq!(code(&o), 74);
}

struct SweepRow {
    n: usize,
    theta: f64,
    min_real: f64,
    verdict: String,
    empirical: bool,
}

fn sweep_rows(csv: &str) -> Vec<SweepRow> {
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,theta,min_real,verdict,empirical_converged");
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            SweepRow {
                n: c[0].parse().unwrap(),
                theta: c[1].parse().unwrap(),
                min_real: c[2].parse().unwrap(),
                verdict: c[3].to_string(),
                empirical: c[4].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn sweep_matches_the_bound() {
    let o = bin().args(["sweep", "--n", "3-8"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let rows = sweep_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 6 * 25);

    for r in &rows {
        if r.min_real.abs() > 1e-6 {
            assert_eq!(r.verdict == "stable", r.empirical, "n={} θ={}", r.n, r.theta);
        }
        if r.n == 3 || r.theta == 0.0 {
            assert_eq!(r.verdict, "stable", "n={} θ={}", r.n, r.theta);
        }
    }
    assert!(rows.iter().any(|r| r.theta == 0.0));

    let bound = 2.0 * std::f64::consts::PI / 5.0;
    let six: Vec<_> = rows.iter().filter(|r| r.n == 6 && r.theta > 0.0).collect();
    for pair in six.windows(2) {
        let flips = (pair[0].min_real > 0.0) != (pair[1].min_real > 0.0);
        let straddles = pair[0].theta < bound && pair[1].theta > bound;
        assert_eq!(flips, straddles, "θ {} → {}", pair[0].theta, pair[1].theta);
    }
}

#[test]
fn sweep_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["0", "1", "4"] {
        let path = dir.path().join(format!("sweep{threads}.csv"));
        let o = bin()
            .args(["sweep", "--n", "4,9", "--t-end", "10", "--out", path.to_str().unwrap()])
            .env("POLYFORM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let o = bin().args(["sweep", "--n", "4"]).env("POLYFORM_THREADS", "many").output().unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn sweep_custom_theta_grid() {
    let o = polyform(&["sweep", "--n", "5", "--theta", "-1.0,0.5,1.6"]);
    assert_eq!(code(&o), 0);
    let rows = sweep_rows(&String::from_utf8(o.stdout).unwrap());
    let verdicts: Vec<_> = rows.iter().map(|r| r.verdict.as_str()).collect();
    assert_eq!(verdicts, ["stable", "stable", "unstable"]);
}

#[test]
fn verify_passes_on_bundled_fixtures() {
    let o = polyform(&["verify"]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(code(&o), 0, "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 10);
    assert!(text.contains("10 of 10 criteria passed"));
}

#[test]
fn verify_reads_a_fixture_directory() {
    let o = polyform(&["verify", "--fixtures", scenario("").to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let empty = tempfile::tempdir().unwrap();
    let o = polyform(&["verify", "--fixtures", empty.path().to_str().unwrap()]);
    assert_eq!(code(&o), 66);
}
