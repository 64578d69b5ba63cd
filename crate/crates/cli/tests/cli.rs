use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).display().to_string()
}

fn iakrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iakrc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = iakrc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Relative path to file bytes, for whole-tree comparison.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn repeated_runs_write_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let maze = scenario("maze32.txt");
    for dir in [&a, &b] {
        let d = dir.display().to_string();
        ok(&[
            "run",
            "--scenario",
            &maze,
            "--algo",
            "iakrc",
            "--steps",
            "500",
            "--seed",
            "7",
            "--out",
            &d,
            "--emit-heatmaps",
        ]);
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 4 + 500);
    assert!(ta.contains_key(Path::new("heatmaps/step_00000.csv")));
    assert!(ta == tb, "output trees differ");

    let log = read_json(&a.join("episode.json"));
    assert_eq!(log["records"].as_array().unwrap().len(), 500);
    let csv = fs::read_to_string(a.join("structure.csv")).unwrap();
    assert!(csv.starts_with("algo,iso_rate,lambda2_mean,lambda2_var,snapshots\niakrc,"));
}

#[test]
fn wall_pair_grouped_only_by_straight_line_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let wall = scenario("wall.txt");
    let mut first = BTreeMap::new();
    for algo in ["euclid", "iakrc"] {
        let d = tmp.path().join(algo).display().to_string();
        ok(&["run", "--scenario", &wall, "--algo", algo, "--steps", "5", "--out", &d]);
        let log = read_json(&tmp.path().join(algo).join("episode.json"));
        first.insert(algo, log["records"][0].clone());
    }
    assert_eq!(first["euclid"]["group_sizes"], serde_json::json!([2]));
    assert_eq!(first["euclid"]["unassigned"], 0);
    assert_eq!(first["iakrc"]["group_sizes"], serde_json::json!([1]));
    assert_eq!(first["iakrc"]["unassigned"], 1);
}

#[test]
fn wall_detour_counts_once_horizon_covers_it() {
    let wall = scenario("wall.txt");
    let grouped = |k: &str| {
        let v: Value = serde_json::from_str(&ok(&["group", "--scenario", &wall, "--k", k])).unwrap();
        v["unassigned"].as_array().unwrap().is_empty()
    };
    assert!(!grouped("9"));
    assert!(!grouped("21"));
    assert!(grouped("22"));
}

#[test]
fn disabled_interference_leaves_unit_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().display().to_string();
    ok(&["run", "--scenario", &scenario("maze32.txt"), "--steps", "40", "--interference-enabled=false", "--out", &d]);
    let dump = read_json(&tmp.path().join("layers.json"));
    assert_eq!(dump["weight_histogram"]["above_unit"], 0);
    assert!(dump["weight_histogram"]["unit"].as_u64().unwrap() > 0);
    for w in dump["weights"].as_array().unwrap() {
        assert_eq!(w["weight"], "inf");
    }

    ok(&["run", "--scenario", &scenario("maze32.txt"), "--steps", "40", "--out", &d]);
    let dump = read_json(&tmp.path().join("layers.json"));
    assert!(dump["weight_histogram"]["above_unit"].as_u64().unwrap() > 0);
}

#[test]
fn zero_horizon_reaches_only_the_source() {
    let v: Value =
        serde_json::from_str(&ok(&["reach", "--scenario", &scenario("maze32.txt"), "--agent", "0", "--k", "0"]))
            .unwrap();
    assert_eq!(v["members"], serde_json::json!([v["source"].clone()]));
    assert_eq!(v["dist"].as_object().unwrap().len(), 1);
    assert_eq!(v["K"], 0.0);
}

#[test]
fn reach_ascii_marks_source_and_wall() {
    let out = ok(&["reach", "--scenario", &scenario("wall.txt"), "--agent", "0", "--ascii"]);
    let ascii: Vec<&str> = out.lines().rev().take(8).collect::<Vec<_>>().into_iter().rev().collect();
    assert_eq!(&ascii[0][..11], "654321S123#");
    assert!(ascii.iter().all(|row| row.len() == 21));
}

#[test]
fn bench_emits_one_row_per_size() {
    let csv = ok(&["bench-scale", "--scenario", &scenario("field64.txt"), "--sizes", "4,8,16,32,64"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,total,per_agent");
    assert_eq!(lines.len(), 6);
}

#[test]
fn training_on_line_data_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = tmp.path().join("net.json");
    let csv = ok(&[
        "train-intent",
        "--data",
        &scenario("lines.csv"),
        "--epochs",
        "200",
        "--out",
        &weights.display().to_string(),
    ]);
    let last = csv.lines().last().unwrap();
    let loss: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(loss < 0.1, "final loss {loss}");
    assert_eq!(csv.lines().count(), 201);

    // Trained weights load back into a run.
    let out = tmp.path().join("run").display().to_string();
    ok(&[
        "run",
        "--scenario",
        &scenario("wall.txt"),
        "--steps",
        "2",
        "--intent-net",
        &weights.display().to_string(),
        "--out",
        &out,
    ]);
}

#[test]
fn compare_prints_a_diff_table() {
    let out = ok(&["compare", "--scenario", &scenario("maze32.txt"), "--algos", "iakrc,vision", "--steps", "100"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "metric,iakrc,vision,delta");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("iso_rate,"));
}

#[test]
fn parallel_episodes_match_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let maze = scenario("maze32.txt");
    let par = tmp.path().join("par").display().to_string();
    ok(&["run", "--scenario", &maze, "--steps", "60", "--seed", "3", "--parallel-episodes", "3", "--out", &par]);
    for seed in ["3", "5"] {
        let single = tmp.path().join(format!("single{seed}")).display().to_string();
        ok(&["run", "--scenario", &maze, "--steps", "60", "--seed", seed, "--out", &single]);
        let a = tree(Path::new(&single));
        let b = tree(&tmp.path().join("par").join(format!("seed_{seed}")));
        assert!(a == b, "seed {seed} differs");
    }
}

#[test]
fn exit_codes_follow_error_class() {
    let maze = scenario("maze32.txt");
    let code = |args: &[&str]| iakrc(args).status.code();
    assert_eq!(code(&["run", "--scenario", "/nonexistent/map.txt"]), Some(3));
    assert_eq!(code(&["run", "--scenario", &maze, "--set", "no_such_key=1"]), Some(2));
    assert_eq!(code(&["run", "--scenario", &maze, "--set", "k=-1"]), Some(2));
    assert_eq!(code(&["run", "--scenario", &maze, "--algo", "telepathy"]), Some(2));
    assert_eq!(code(&["reach", "--scenario", &maze, "--agent", "9999"]), Some(2));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "ally 0,0\n.#\n#\n").unwrap();
    assert_eq!(code(&["run", "--scenario", &bad.display().to_string()]), Some(3));
}
