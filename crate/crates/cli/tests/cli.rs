use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use boundary_cli::io::read_points_file;
use manifold_boundary::{generate, ManifoldKind, ManifoldSpec};
use serde_json::Value;

fn boundary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundary"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = boundary(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_writes_points_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2.csv");
    ok(&[
        "generate",
        "--kind",
        "sphere",
        "--dprime",
        "2",
        "--n",
        "1000",
        "--seed",
        "7",
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,x3"));
    assert_eq!(lines.clone().count(), 1000);
    assert!(lines.all(|l| l.split(',').count() == 3));
    let side = json(&dir.path().join("s2.json"));
    assert_eq!(side["schema"], 1);
    assert_eq!(side["seed"], 7);
    assert_eq!(side["ground_truth"]["has_boundary"], false);
    assert_eq!(side["spec"]["kind"], "sphere");
}

#[test]
fn generate_is_byte_identical_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for f in [&a, &b] {
        ok(&[
            "generate",
            "--kind",
            "moebius",
            "--n",
            "500",
            "--seed",
            "3",
            "--out",
            p(f),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );

    let parsed = read_points_file(&a, 2).unwrap();
    let (direct, _) = generate(&ManifoldSpec::new(ManifoldKind::DEFAULT_MOEBIUS, 500, 3)).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(parsed.coords()), bits(direct.coords()));
}

#[test]
fn torus_radii_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = boundary(&[
        "generate",
        "--kind",
        "torus",
        "--R",
        "1",
        "--r",
        "2",
        "--n",
        "10",
        "--out",
        p(&dir.path().join("t.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R > r"));
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn bad_flags_exit_nonzero() {
    assert_eq!(
        boundary(&["generate", "--kind", "klein", "--n", "10", "--out", "x.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        boundary(&["test", "nowhere.csv", "--dprime", "1", "--k", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        boundary(&["test", "nowhere.csv", "--dprime", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(boundary(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn test_rejects_on_half_circle_and_not_on_circle() {
    let dir = tempfile::tempdir().unwrap();
    let half = dir.path().join("half.csv");
    let full = dir.path().join("full.csv");
    ok(&[
        "generate",
        "--kind",
        "half_sphere",
        "--dprime",
        "1",
        "--n",
        "2000",
        "--seed",
        "11",
        "--out",
        p(&half),
    ]);
    ok(&[
        "generate",
        "--kind",
        "S1",
        "--n",
        "2000",
        "--seed",
        "11",
        "--out",
        p(&full),
    ]);

    let report = dir.path().join("half.report.json");
    ok(&[
        "test",
        p(&half),
        "--dprime",
        "1",
        "--k",
        "40",
        "--alpha",
        "0.05",
        "--out",
        p(&report),
    ]);
    let r = json(&report);
    assert_eq!(r["reject"], true);
    assert_eq!(r["n"], 2000);
    assert_eq!(r["d"], 2);
    assert_eq!(r["deltas"].as_array().unwrap().len(), 2000);
    assert!(r["p_value_bound"].as_f64().unwrap() <= 0.05);
    assert!(!r["boundary_points"].as_array().unwrap().is_empty());
    assert!(r["level_diagnostic"].is_number());
    assert!(r.get("selection").is_none());

    // the decision is in the report, never in the exit code
    let stdout = ok(&["test", p(&full), "--dprime", "1", "--k", "40"]).stdout;
    let r: Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(r["reject"], false);
    assert_eq!(r["rule"], "threshold");
}

#[test]
fn auto_k_report_carries_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("s1.csv");
    ok(&[
        "generate",
        "--kind",
        "sphere",
        "--dprime",
        "1",
        "--n",
        "3000",
        "--seed",
        "2",
        "--out",
        p(&pts),
    ]);
    let stdout = ok(&["test", p(&pts), "--dprime", "1", "--auto-k"]).stdout;
    let r: Value = serde_json::from_slice(&stdout).unwrap();
    let trace = &r["selection"];
    let k = r["k"].as_u64().unwrap();
    assert_eq!(trace["chosen_k"].as_u64().unwrap(), k);
    let cands = trace["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 20);
    let chosen = cands.iter().find(|c| c["k"].as_u64() == Some(k)).unwrap();
    assert!(chosen["p_value_bound"].as_f64().unwrap() >= 0.05);

    let sel = dir.path().join("sel.json");
    ok(&[
        "select-k",
        p(&pts),
        "--dprime",
        "1",
        "--grid",
        "10,20,30",
        "--out",
        p(&sel),
    ]);
    let s = json(&sel);
    assert_eq!(s["trace"]["candidates"].as_array().unwrap().len(), 3);
}

#[test]
fn consistent_rule_reports_its_window() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("h.csv");
    ok(&[
        "generate",
        "--kind",
        "S1+",
        "--n",
        "2000",
        "--seed",
        "4",
        "--out",
        p(&pts),
    ]);
    let stdout = ok(&[
        "test",
        p(&pts),
        "--dprime",
        "1",
        "--k",
        "60",
        "--rule",
        "consistent",
    ])
    .stdout;
    let r: Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(r["rule"], "consistent");
    assert_eq!(r["consistent"]["boundary"], true);
    assert_eq!(r["reject"], true);

    let out = boundary(&[
        "test",
        p(&pts),
        "--dprime",
        "1",
        "--k",
        "40",
        "--rule",
        "consistent",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("raise k"));
}

#[test]
fn parse_errors_name_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.csv");
    fs::write(&f, "x1,x2\n0,1\n1,zero\n").unwrap();
    let out = boundary(&["test", p(&f), "--dprime", "1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3, column 2"));
}

#[test]
fn degenerate_samples_exit_three_with_point_index() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("dup.csv");
    let mut text = String::from("x1,x2\n");
    for i in 0..20 {
        text.push_str(&format!("{},{}\n", i as f64, (i * i) as f64 * 0.01));
    }
    for _ in 0..6 {
        text.push_str("100,100\n");
    }
    fs::write(&f, text).unwrap();
    let out = boundary(&["test", p(&f), "--dprime", "1", "--k", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("point 20"), "{err}");
}

#[test]
fn flag_boundary_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("h.csv");
    let idx = dir.path().join("idx.csv");
    let plot = dir.path().join("plot.csv");
    ok(&[
        "generate",
        "--kind",
        "S1+",
        "--n",
        "2000",
        "--seed",
        "9",
        "--out",
        p(&pts),
    ]);
    ok(&[
        "flag-boundary",
        p(&pts),
        "--dprime",
        "1",
        "--k",
        "40",
        "--out",
        p(&idx),
        "--plot",
        p(&plot),
    ]);
    let flagged: Vec<usize> = fs::read_to_string(&idx)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(!flagged.is_empty());
    let plot = fs::read_to_string(&plot).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("x1,x2,delta,flagged"));
    let marks: Vec<usize> = lines
        .enumerate()
        .filter(|(_, l)| l.ends_with(",1"))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(marks, flagged);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        boundary(&["flag-boundary", p(&empty), "--dprime", "1", "--k", "5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn experiment_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("rep.json");
    let table = dir.path().join("table.csv");
    ok(&[
        "experiment",
        "--kind",
        "S1,S1+",
        "--n",
        "300,600",
        "--k",
        "15,20",
        "--replications",
        "8",
        "--seed",
        "5",
        "--out",
        p(&rep),
        "--table",
        p(&table),
    ]);
    let r = json(&rep);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["base_seed"], 5);
    assert!(r["seed_rule"].as_str().unwrap().contains("splitmix64"));
    let cells = r["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        assert_eq!(c["details"].as_array().unwrap().len(), 8);
        let rate = c["rejection_rate"].as_f64().unwrap();
        assert_eq!(rate, c["rejections"].as_f64().unwrap() / 8.0);
        assert!(c.get("wall_time_secs").is_none());
    }
    let t = fs::read_to_string(&table).unwrap();
    assert!(t.starts_with("kind,n=300,n=600\nS1,"));
    assert!(t.lines().nth(2).unwrap().starts_with("S1+,"));

    let bad = boundary(&[
        "experiment",
        "--kind",
        "S1",
        "--n",
        "300",
        "--k",
        "15,20",
        "--replications",
        "2",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
