use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use forcing_lab::gen::{self, rng};
use forcing_lab::schema::{parse_object, Object, Schema};
use forcing_lab::side::PCondition;
use forcing_lab::universe::default_universe;
use lab_cli::corpus::{parse_corpus, Instance};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lab-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_is_reproducible_and_verifies() {
    let a = lab(&["gen", "tree", "--count", "10", "--seed", "1"]);
    let b = lab(&["gen", "tree", "--count", "10", "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 10);
    assert_ne!(a.stdout, lab(&["gen", "tree", "--count", "10", "--seed", "2"]).stdout);

    let dir = scratch("gen");
    let file = dir.join("split.txt");
    let out = lab(&["gen", "split-family", "--count", "20", "--seed", "4", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    let corpus = parse_corpus(&fs::read_to_string(&file).unwrap()).unwrap();
    assert!(corpus.iter().all(|i| matches!(i, Instance::SplitFamily { .. })));
    let v = lab(&["verify", "--config", file.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stdout(&v));
    assert!(stdout(&v).ends_with("20 instances, 0 violations\n"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lab(&["gen", "forest"]).status.code(), Some(2));
    assert_eq!(lab(&["run", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(lab(&["verify", "--config", "/nonexistent/corpus"]).status.code(), Some(2));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    let dir = scratch("usage");
    let f = dir.join("t.txt");
    fs::write(&f, "(tree)").unwrap();
    assert_eq!(lab(&["export", "--config", f.to_str().unwrap(), "--format", "svg"]).status.code(), Some(2));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn planted_violations_give_a_counterexample_and_exit_one() {
    let dir = scratch("verify");
    let f = dir.join("bad.txt");
    let good = lab(&["gen", "p", "--count", "3", "--seed", "9"]);
    let mut text = stdout(&good);
    // Node w^1*2 sits above w^1*1 but the subtree holds only the top one.
    text.push_str("(p (pstar (tree (0) (w^1*1 0) (w^1*2 0 w^1*1)) (w (w^0*3 w^1*2)) (d)) (a))\n");
    fs::write(&f, text).unwrap();
    let v = lab(&["verify", "--config", f.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    let s = stdout(&v);
    assert!(s.contains("counterexample at instance 4"), "{s}");
    assert!(s.ends_with("4 instances, 1 violations\n"));

    fs::write(&f, "").unwrap();
    assert!(lab(&["verify", "--config", f.to_str().unwrap()]).status.success());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn export_round_trips_text_and_renders_dot() {
    let dir = scratch("export");
    let f = dir.join("obj.txt");
    let u = default_universe();
    let mut r = rng(12);
    for _ in 0..1000 {
        let p = gen::random_p(&mut r, &u, 10, 4, 3);
        let back = PCondition::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
    }
    let p = gen::random_valid_p(&mut r, &u, 10, 4, 3);
    fs::write(&f, p.to_text()).unwrap();
    let text = lab(&["export", "--config", f.to_str().unwrap(), "--format", "text"]);
    assert!(text.status.success());
    assert_eq!(parse_object(stdout(&text).trim()).unwrap(), Object::P(p.clone()));
    let dot = lab(&["export", "--config", f.to_str().unwrap(), "--format", "dot"]);
    assert!(stdout(&dot).starts_with("digraph tree {"));
    fs::write(&f, "(tree)").unwrap();
    let empty = stdout(&lab(&["export", "--config", f.to_str().unwrap(), "--format", "dot"]));
    assert!(empty.contains("empty [label=\"∅\""));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn run_and_simulate_from_files() {
    let dir = scratch("run");
    let m = dir.join("manifest.txt");
    fs::write(&m, "(manifest (version 1) (suite split) (seed 5) (scale 1))").unwrap();
    let a = lab(&["run", "--config", m.to_str().unwrap()]);
    assert!(a.status.success());
    let s = stdout(&a);
    assert!(s.starts_with("manifest (manifest (version 1) (suite split) (seed 5) (scale 1))\n"));
    assert!(s.contains("(result (suite split) (criterion 2) (checked 100) (failed 0) (verdict pass))"));
    assert_eq!(lab(&["run", "--config", m.to_str().unwrap()]).stdout, a.stdout);

    let sim = lab(&["simulate", "--seed", "2"]);
    assert!(sim.status.success());
    let s = stdout(&sim);
    assert_eq!(s.matches("certified true").count(), 28);
    assert!(!s.contains("failure "));
    let dot = lab(&["simulate", "--seed", "2", "--format", "dot"]);
    assert!(stdout(&dot).contains("subgraph cluster_legend"));
    fs::remove_dir_all(dir).unwrap();
}
