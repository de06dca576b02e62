use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use mgspec_core::isoperimetric::BoundReport;
use mgspec_core::MetricGraph;
use serde_json::Value;

fn mgspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgspec"))
        .args(args)
        .env_remove("MGSPEC_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = mgspec(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn generate(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let path = path.to_str().unwrap().to_string();
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    ok(&full);
    path
}

#[derive(Debug, PartialEq, serde::Deserialize)]
struct Row {
    index: usize,
    mu: f64,
    mult: usize,
    error: f64,
    mu_fem: Option<f64>,
    mult_fem: Option<usize>,
    discrepancy: Option<f64>,
}

fn json_rows(text: &str) -> Vec<Row> {
    let v: Value = serde_json::from_str(text).unwrap();
    serde_json::from_value(v["rows"].clone()).unwrap()
}

#[test]
fn generated_extremal_star_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "s.json", &["extremal-star", "--k", "2", "--length", "1"]);
    let g = MetricGraph::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut l = g.lengths();
    l.sort_by(|a, b| b.total_cmp(a));
    for (x, y) in l.iter().zip([0.6, 0.2, 0.2]) {
        assert!((x - y).abs() < 1e-15);
    }
    assert_eq!(g.edge_count(), 3);
}

#[test]
fn extremal_star_spectrum_has_double_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "s.json", &["extremal-star", "--k", "2"]);
    let rows = json_rows(&ok(&["spectrum", &path, "--count", "5", "--format", "json"]));
    let double = rows.iter().find(|r| r.mult == 2).expect("a double eigenvalue");
    assert!((double.mu - 25.0 * PI * PI / 4.0).abs() < 1e-9 * double.mu);
    assert!((double.mu - 61.685).abs() < 1e-3);
    assert_eq!(rows.iter().map(|r| r.mult).sum::<usize>(), 5);
}

#[test]
fn interval_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "p.json", &["path", "--length", "1"]);
    let rows = json_rows(&ok(&["spectrum", &path, "--count", "3", "--format", "json"]));
    let mu: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    assert_eq!(mu.len(), 3);
    assert_eq!(mu[0], 0.0);
    assert!((mu[1] - PI * PI).abs() < 1e-10 * PI * PI);
    assert!((mu[2] - 4.0 * PI * PI).abs() < 1e-10 * 4.0 * PI * PI);
}

#[test]
fn both_methods_agree_on_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "t.json", &["random-tree", "--edges", "5", "--seed", "3"]);
    let text = ok(&["spectrum", &path, "--count", "8", "--method", "both", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["counts_agree"], Value::Bool(true));
    for r in json_rows(&text) {
        assert_eq!(r.mult_fem, Some(r.mult));
        assert!(r.discrepancy.unwrap() < 1e-5, "{r:?}");
    }
}

#[test]
fn fem_method_alone() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "p.json", &["path", "--length", "2"]);
    let rows = json_rows(&ok(&["spectrum", &path, "--count", "3", "--method", "fem", "--format", "json"]));
    assert!((rows[1].mu - PI * PI / 4.0).abs() < 1e-6);
}

#[test]
fn malformed_graph_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"vertex_count\": 2, \"edges\": [").unwrap();
    let o = mgspec(&["spectrum", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
    let o = mgspec(&["spectrum", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_graph_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(&path, r#"{"vertex_count": 2, "edges": [{"u": 0, "v": 1, "length": -1.0}]}"#).unwrap();
    assert_eq!(mgspec(&["bound", path.to_str().unwrap(), "--k", "1"]).status.code(), Some(1));
}

#[test]
fn bound_equality_on_extremal_star() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "s.json", &["extremal-star", "--k", "2"]);
    let r: BoundReport = serde_json::from_str(&ok(&["bound", &path, "--k", "2", "--format", "json"])).unwrap();
    assert!(r.is_equality);
    assert!((r.product - 25.0 * PI * PI / 36.0).abs() < 1e-9);
}

#[test]
fn bound_gap_positive_on_random_tree() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(
        dir.path(),
        "t.json",
        &["random-tree", "--edges", "6", "--seed", "11", "--series-reduced"],
    );
    for k in ["1", "2", "3"] {
        let r: BoundReport = serde_json::from_str(&ok(&["bound", &path, "--k", k, "--format", "json"])).unwrap();
        assert!(r.gap > 0.0 && !r.is_equality, "{r:?}");
    }
}

#[test]
fn degree_two_vertex_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(
        &path,
        r#"{"vertex_count": 5, "edges": [
            {"u": 0, "v": 1, "length": 0.3}, {"u": 1, "v": 2, "length": 0.2},
            {"u": 1, "v": 3, "length": 0.1}, {"u": 3, "v": 4, "length": 0.4}]}"#,
    )
    .unwrap();
    let o = mgspec(&["bound", path.to_str().unwrap(), "--k", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree two"));
}

#[test]
fn csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "t.json", &["random-tree", "--edges", "4", "--seed", "5"]);

    let json = json_rows(&ok(&["spectrum", &path, "--count", "6", "--method", "both", "--format", "json"]));
    let csv_text = ok(&["spectrum", &path, "--count", "6", "--method", "both", "--format", "csv"]);
    assert!(!csv_text.contains('\r'));
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let rows: Vec<Row> = rd.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows, json);

    let star = generate(dir.path(), "s.json", &["extremal-star", "--k", "3"]);
    let json: BoundReport = serde_json::from_str(&ok(&["bound", &star, "--k", "3", "--format", "json"])).unwrap();
    let csv_text = ok(&["bound", &star, "--k", "3", "--format", "csv"]);
    let mut lines = csv_text.lines();
    assert_eq!(lines.next(), Some(BoundReport::CSV_HEADER));
    assert_eq!(BoundReport::from_csv_row(lines.next().unwrap()).unwrap(), json);
}

#[test]
fn table_rounds_to_ten_digits() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "s.json", &["extremal-star", "--k", "2"]);
    let t = ok(&["spectrum", &path, "--count", "5"]);
    assert!(t.contains("61.68502751"), "{t}");
}

#[test]
fn restarts_zero_is_usage_error() {
    let o = mgspec(&["optimize", "--k", "2", "--restarts", "0"]);
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(mgspec(&["optimize", "--k", "2", "--edges", "2..5"]).status.code(), Some(64));
    assert_eq!(mgspec(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(mgspec(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_jobs_env_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_mgspec"))
        .args(["generate", "path"])
        .env("MGSPEC_JOBS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn random_tree_is_reproducible_and_valid() {
    let a = ok(&["generate", "random-tree", "--edges", "6", "--seed", "7"]);
    let b = ok(&["generate", "random-tree", "--edges", "6", "--seed", "7"]);
    assert_eq!(a, b);
    let g = MetricGraph::from_json(&a).unwrap();
    let s = mgspec_core::graph::summarize(&g);
    assert_eq!(s.edge_count, 6);
    assert!(s.is_tree);
    assert!((s.total_length - 1.0).abs() < 1e-12);
    assert_ne!(a, ok(&["generate", "random-tree", "--edges", "6", "--seed", "8"]));
}

#[test]
fn optimize_recovers_three_star_for_k2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("search.csv");
    let text = ok(&[
        "optimize",
        "--k",
        "2",
        "--edges",
        "3..5",
        "--restarts",
        "8",
        "--seed",
        "42",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let w = &v["results"][v["winner"].as_u64().unwrap() as usize];
    let mut l: Vec<f64> = serde_json::from_value(w["best_lengths"].clone()).unwrap();
    l.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(l.len(), 3);
    for (x, y) in l.iter().zip([0.6, 0.2, 0.2]) {
        assert!((x - y).abs() < 1e-3, "{l:?}");
    }
    assert_eq!(v["matches_prediction"], Value::Bool(true));
    let csv_text = std::fs::read_to_string(out).unwrap();
    assert!(csv_text.starts_with("edges,code,lengths,product,bound,gap,converged,landscape_margin,winner\n"));
    assert_eq!(csv_text.lines().count(), 1 + v["results"].as_array().unwrap().len());
}

#[test]
fn optimize_reaches_bound_for_k4_three_stars() {
    let text = ok(&["optimize", "--k", "4", "--edges", "3..3", "--restarts", "8", "--seed", "1", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let w = &v["results"][0];
    let product = w["best_product"].as_f64().unwrap();
    let bound = 81.0 * PI * PI / 36.0;
    assert!((product - bound).abs() < 1e-6 * bound);
    // the (7,1,1)/9 star attains the bound, but so do other odd splittings of 9
    assert_eq!(v["prediction_near_optimal"], Value::Bool(true));
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["optimize", "--k", "3", "--edges", "3..4", "--restarts", "4", "--seed", "9", "--format", "csv"];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let a = ok(&one);
    let b = Command::new(env!("CARGO_BIN_EXE_mgspec"))
        .args(args)
        .env("MGSPEC_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(a, String::from_utf8(b.stdout).unwrap());
}

#[test]
fn surgery_demos() {
    let dir = tempfile::tempdir().unwrap();
    let star = generate(dir.path(), "s.json", &["star", "--lengths", "0.5,0.3,0.2"]);
    let out = dir.path().join("cut.json");
    let text = ok(&[
        "surgery",
        "remove-pendant",
        &star,
        "--edge",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    for r in v["rows"].as_array().unwrap() {
        assert!(r["before"].as_f64().unwrap() <= r["after"].as_f64().unwrap() + 1e-8);
    }
    let cut = MetricGraph::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(cut.edge_count(), 2);

    let v: Value = serde_json::from_str(&ok(&["surgery", "equilateral", &star, "--format", "json"])).unwrap();
    assert!((v["alpha"].as_f64().unwrap() - 0.6).abs() < 1e-12);

    let tree = generate(dir.path(), "t.json", &["random-tree", "--edges", "7", "--seed", "2", "--series-reduced"]);
    let v: Value = serde_json::from_str(&ok(&["surgery", "extract", &tree, "--format", "json"])).unwrap();
    assert_eq!(v["extraction"]["average_bound_exact"], Value::Bool(true));

    let o = mgspec(&["surgery", "remove-pendant", &tree, "--edge", "99"]);
    assert_eq!(o.status.code(), Some(1));
}
