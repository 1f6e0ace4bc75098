use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flipqi::harness::export::EXPORT_FILES;
use flipqi::harness::{fixture, Instance};

fn fixture_path(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(file)
}

fn flipqi(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flipqi"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Parses the `a -- b` edges and node ids of an undirected DOT graph.
fn parse_dot(text: &str) -> (HashSet<usize>, Vec<(usize, usize)>) {
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("graph ") && head.ends_with('{'), "{head}");
    assert_eq!(text.trim_end().lines().last(), Some("}"));
    let mut nodes = HashSet::new();
    let mut edges = Vec::new();
    for line in lines.filter(|l| l.trim() != "}") {
        let line = line.trim().strip_suffix(';').expect("statement ends with ;");
        let stmt = line.split(" [").next().unwrap();
        match stmt.split_once(" -- ") {
            Some((a, b)) => edges.push((a.parse().unwrap(), b.parse().unwrap())),
            None => {
                nodes.insert(stmt.parse().unwrap());
            }
        }
    }
    (nodes, edges)
}

fn is_tree(nodes: &HashSet<usize>, edges: &[(usize, usize)]) -> bool {
    if edges.len() + 1 != nodes.len() {
        return false;
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let start = *nodes.iter().next().unwrap();
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == nodes.len()
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&flipqi(&["invariants"], None, dir.path())), 2);
    assert_eq!(code(&flipqi(&["frobnicate"], None, dir.path())), 2);
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture_path("instance_a.json")).unwrap();
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, text.replacen('{', "{\"colour\": 3,", 1)).unwrap();
    assert_eq!(code(&flipqi(&["generate"], Some(&unknown), dir.path())), 2);
    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, text.replace("\"seed\"", "\"sead\"")).unwrap();
    assert_eq!(code(&flipqi(&["generate"], Some(&missing), dir.path())), 2);
    assert_eq!(code(&flipqi(&["generate"], Some(&dir.path().join("nope.json")), dir.path())), 2);
    let a = fixture_path("instance_a.json");
    assert_eq!(code(&flipqi(&["distortion", "--radii-scale", "0.5"], Some(&a), dir.path())), 2);
}

#[test]
fn valid_fixtures_pass_invariants() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["instance_a.json", "instance_b.json", "path_chain.json", "pants_a.json"] {
        let o = flipqi(&["invariants"], Some(&fixture_path(f)), dir.path());
        assert_eq!(code(&o), 0, "{f}: {}", String::from_utf8_lossy(&o.stdout));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("invariants.json")).unwrap()).unwrap();
        assert_eq!(report["schema_version"], 1);
    }
}

#[test]
fn negative_controls_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = flipqi(&["invariants"], Some(&fixture_path("broken_shadow.json")), dir.path());
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL quotient_treeness_t1"), "{stdout}");
    let o = flipqi(&["invariants"], Some(&fixture_path("missing_gluing.json")), dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL flip_involution"));
    assert_eq!(code(&flipqi(&["generate"], Some(&fixture_path("broken_shadow.json")), dir.path())), 1);
}

#[test]
fn distortion_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = flipqi(&["distortion", "--pairs", "60", "--seed", "9"], Some(&fixture_path("instance_a.json")), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("distortion.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        "x,y,d,d0,d1,d2,d_l1,bound,slack,path_status,path_length,path_bound,violations".split(',').collect::<Vec<_>>()
    );
    let rows = rdr.records().count();
    assert!(rows >= 60);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("distortion.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["pairs"], rows);
    assert_eq!(summary["total_violations"], 0);
}

#[test]
fn export_is_deterministic_and_parses() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = fixture_path("instance_b.json");
    assert_eq!(code(&flipqi(&["export"], Some(&cfg), a.path())), 0);
    assert_eq!(code(&flipqi(&["export"], Some(&cfg), b.path())), 0);
    for f in EXPORT_FILES {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let inst = Instance::build(&fixture("instance-b").unwrap()).unwrap();
    let (t1, t2) = inst.quotients.as_ref().unwrap();
    for (file, len) in [("t0.dot", inst.complex.bs().len()), ("t1.dot", t1.len()), ("t2.dot", t2.len())] {
        let (nodes, edges) = parse_dot(&std::fs::read_to_string(a.path().join(file)).unwrap());
        assert_eq!(nodes.len(), len, "{file}");
        assert!(is_tree(&nodes, &edges), "{file}");
    }
    let edge_lines = std::fs::read_to_string(a.path().join("complex.edges")).unwrap();
    assert_eq!(edge_lines.lines().filter(|l| !l.starts_with('#')).count(), inst.complex.edge_count());
}

#[test]
fn bench_and_generate_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_path("instance_a.json");
    assert_eq!(code(&flipqi(&["bench", "--pairs", "10"], Some(&cfg), dir.path())), 0);
    let bench: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert_eq!(bench["queries"], 10);
    assert_eq!(code(&flipqi(&["generate"], Some(&cfg), dir.path())), 0);
    assert!(dir.path().join("build_log.json").exists());
}
