use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn srwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srwlab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = srwlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_round_trips_through_file_graph() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("line.graph");
    ok(&["gen", "--graph", "geometric-line", "--base", "2", "--radius", "5", "--out", file.to_str().unwrap()]);
    let text = fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("vertices 6 boundary 1"), "{text}");

    let a = ok(&["voltage", "--graph", "file", "--file", file.to_str().unwrap()]);
    let b = ok(&["voltage", "--graph", "geometric-line", "--base", "2", "--radius", "5"]);
    assert_eq!(a, b);
}

#[test]
fn walk_is_seeded() {
    let args = ["walk", "--graph", "lattice", "--radius", "5", "--seed", "11", "--steps", "50"];
    assert_eq!(ok(&args), ok(&args));
    let other = ok(&["walk", "--graph", "lattice", "--radius", "5", "--seed", "12", "--steps", "50"]);
    assert_ne!(ok(&args), other);
}

#[test]
fn walk_requires_seed() {
    let out = srwlab(&["walk", "--graph", "tree", "--radius", "4"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn resist_series_line() {
    // e_i = 1, 2: resistance root-to-boundary is 1 + 1/2.
    let text = ok(&["resist", "--graph", "line", "--multiplicities", "1,2"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["resistance"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn resist_on_walk_path() {
    let text = ok(&["resist", "--graph", "lattice", "--radius", "30", "--path-steps", "200", "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["max_pair_resistance"].as_f64().unwrap() >= 1.0);
}

#[test]
fn lemmas_from_flags_and_manifest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    ok(&[
        "lemmas", "--graph", "geometric-line", "--radius", "20", "--seed", "7", "--trials", "300",
        "--lemmas", "energy,cut_edge", "--out", a.to_str().unwrap(),
    ]);
    for f in ["lemmas.jsonl", "resistance.csv", "summary.json"] {
        assert!(a.join(f).exists(), "missing {f}");
    }

    let b = dir.path().join("b");
    let manifest = dir.path().join("m.toml");
    fs::write(
        &manifest,
        format!(
            "seed = 7\ntrials = 300\nlemmas = [\"energy\", \"cut_edge\"]\noutput_dir = {:?}\n\n[graph]\nkind = \"geometric_line\"\nbase = 3\nradius = 20\n",
            b.to_str().unwrap()
        ),
    )
    .unwrap();
    ok(&["lemmas", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(read(&a, "lemmas.jsonl"), read(&b, "lemmas.jsonl"));
    assert_eq!(read(&a, "resistance.csv"), read(&b, "resistance.csv"));
}

fn read(dir: &Path, f: &str) -> String {
    fs::read_to_string(dir.join(f)).unwrap()
}

#[test]
fn lemmas_reject_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = srwlab(&["lemmas", "--seed", "1", "--trials", "0", "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn lemmas_radius_doubling_reports() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&[
        "lemmas", "--graph", "tree", "--radius", "8", "--seed", "5", "--trials", "200",
        "--check-radius-doubling", "--out", dir.path().join("t").to_str().unwrap(),
    ]);
    assert!(text.contains("radius 8 vs 10"), "{text}");
}

#[test]
fn growth_csv() {
    let text = ok(&["growth", "--graph", "lattice", "--radius", "60", "--seed", "9", "--checkpoints", "1,100,1000", "--pairs", "8"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,r_n,log_sq_n,ratio,vertices,edges,pair_a,pair_b,fixed_pair_r");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,1.0"), "{}", lines[1]);
}

#[test]
fn growth_rejects_unsorted_checkpoints() {
    let out = srwlab(&["growth", "--graph", "lattice", "--radius", "10", "--seed", "1", "--checkpoints", "100,10"]);
    assert!(!out.status.success());
}
