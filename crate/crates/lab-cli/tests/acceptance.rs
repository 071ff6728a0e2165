//! Runs every acceptance criterion at its stated size and prints one
//! pass/fail line each. Exits nonzero if any criterion fails.

#[path = "../../forcing-lab/tests/oracle/mod.rs"]
mod oracle;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use forcing_lab::ccc::{is_e_separated, EFunction};
use forcing_lab::gen::{self, rng};
use forcing_lab::pstar::{amalgamate_split_family, is_split_pair, is_valid_pstar, leq_failure};
use forcing_lab::quotient::project_theta;
use forcing_lab::side::{is_valid_p, leq_p_failure, normalize_p};
use forcing_lab::tree::validate_tree;
use forcing_lab::universe::{default_universe, gap_universe};
use lab_cli::manifest::Manifest;
use lab_cli::report::SuiteReport;
use lab_cli::suites::{self, run_manifest};
use rand::Rng;

const SEED: u64 = 20_261_017;

struct Line {
    criterion: u32,
    name: &'static str,
    ok: bool,
    detail: String,
}

/// Library verdicts against the naive oracles on 10^5 instances in total.
fn oracle_equivalence() -> Line {
    let start = Instant::now();
    let (mut compared, mut disagreements) = (0usize, Vec::<String>::new());
    let mut check = |same: bool, what: &str| {
        compared += 1;
        if !same && disagreements.len() < 3 {
            disagreements.push(what.to_string());
        }
        same
    };
    let du = default_universe();
    let gu = gap_universe();
    let pool = gen::key_pool(&du);
    let mut r = rng(SEED);
    const EACH: usize = 100_000 / 7;
    for _ in 0..EACH {
        let t = gen::random_raw_tree(&mut r, 10);
        let rep = validate_tree(&t);
        check((rep.is_standard, rep.is_downwards_closed, rep.has_minimal_splits) == oracle::tree_report(&t), "validate_tree");
    }
    for _ in 0..EACH {
        let p = gen::random_pstar(&mut r, &pool, 10, 4);
        check(is_valid_pstar(&p) == oracle::pstar_valid(&p), "validate_pstar");
    }
    let mut leq_pstar = 0;
    while leq_pstar < EACH {
        let t = gen::random_tree(&mut r, 10, 2);
        let p = gen::random_pstar_on(&mut r, &t, &pool, 4);
        let q = gen::random_extension(&mut r, &p, &pool);
        if oracle::pstar_valid(&q) {
            leq_pstar += 1;
            check(leq_failure(&q, &p).is_none() == oracle::leq_pstar(&q, &p), "leq_pstar");
        }
    }
    for i in 0..EACH {
        let u = if i % 2 == 0 { &du } else { &gu };
        let p = gen::random_p(&mut r, u, 10, 4, 3);
        check(is_valid_p(u, &p) == oracle::p_valid(u, &p), "validate_p");
    }
    let mut leq_p = 0;
    while leq_p < EACH {
        let u = if leq_p % 2 == 0 { &du } else { &gu };
        let p = gen::random_valid_p(&mut r, u, 10, 4, 3);
        let q = gen::random_extension_p(&mut r, u, &p);
        if oracle::p_valid(u, &q) {
            leq_p += 1;
            check(leq_p_failure(&q, &p).is_none() == oracle::leq_p(&q, &p), "leq_p");
        }
    }
    for _ in 0..EACH {
        let (mut parts, levels) = gen::split_family(&mut r, &du, 2);
        if r.gen_bool(0.5) {
            parts[1] = gen::random_extension(&mut r, &parts[1], &pool);
        }
        let got = is_split_pair(&parts[0], &parts[1], &levels[0], &levels[1]).unwrap_or(false);
        check(got == oracle::split_pair(&parts[0], &parts[1], &levels[0], &levels[1]), "is_split_pair");
    }
    for _ in 0..100_000 - 6 * EACH {
        let t = gen::random_tree(&mut r, 10, 1);
        let p = gen::random_pstar_on(&mut r, &t, &pool, 4);
        let keys: Vec<_> = p.w.keys().cloned().collect();
        let e = if r.gen_bool(0.1) { EFunction::constant_top() } else { gen::random_e(&mut r, &keys, 0.3) };
        check(is_e_separated(&p.w, &e) == oracle::e_separated(&p.w, &e), "is_e_separated");
    }
    let took = start.elapsed();
    let ok = disagreements.is_empty() && compared >= 100_000 && took < Duration::from_secs(60);
    Line {
        criterion: 1,
        name: "oracle equivalence",
        ok,
        detail: format!(
            "{compared} comparisons, {} disagreements{}, {:.1} s",
            disagreements.len(),
            if disagreements.is_empty() { String::new() } else { format!(" ({})", disagreements.join(", ")) },
            took.as_secs_f64()
        ),
    }
}

/// Oracle re-checks of a sample of suite outputs, independent of the
/// library's own certificates.
fn cross_check(criterion: u32) -> Result<(), String> {
    let mut r = rng(SEED ^ criterion as u64);
    match criterion {
        2 => {
            let u = default_universe();
            for _ in 0..1000 {
                let d = r.gen_range(2..=4);
                let (parts, levels) = gen::split_family(&mut r, &u, d);
                for i in 0..d {
                    for j in i + 1..d {
                        if !oracle::split_pair(&parts[i], &parts[j], &levels[i], &levels[j]) {
                            return Err(format!("generated parts {i}, {j} are not split"));
                        }
                    }
                }
                let (a, _) = amalgamate_split_family(&parts, &levels).map_err(|e| e.to_string())?;
                if !oracle::pstar_valid(&a) || !parts.iter().all(|p| oracle::leq_pstar(&a, p)) {
                    return Err("oracle rejects an amalgam".into());
                }
            }
        }
        3 => {
            let u = default_universe();
            for _ in 0..1000 {
                let p = gen::random_valid_p(&mut r, &u, 10, 4, 3);
                let q = normalize_p(&u, &p).map_err(|e| e.to_string())?;
                let tree_ok = oracle::tree_report(&q.base.tree) == (true, true, true);
                let closures = p.base.w.iter().all(|(k, w)| q.base.w[k] == oracle::closure(&q.base.tree, w));
                if !tree_ok || !closures || !oracle::p_valid(&u, &q) || !oracle::leq_p(&q, &p) {
                    return Err("oracle rejects a normal form".into());
                }
            }
        }
        8 => {
            let u = gap_universe();
            for i in 0..1000 {
                let theta = [4, 12, 19][i % 3];
                let p = gen::random_valid_p(&mut r, &u, 8, 4, 3);
                let pi = project_theta(&u, &p, theta).map_err(|e| e.to_string())?;
                if pi != oracle::project(&p, theta) || !oracle::p_valid(&u, &pi) || !oracle::leq_p(&p, &pi) {
                    return Err("projection disagrees with its definition".into());
                }
            }
        }
        _ => {}
    }
    Ok(())
}

fn suite_line(rep: &SuiteReport, took: Option<Duration>) -> Line {
    let cross = cross_check(rep.criterion);
    let mut ok = rep.passed() && cross.is_ok();
    let mut detail = format!("{} checked, {} failed", rep.checked, rep.failed);
    if let Some(t) = took {
        ok &= t < Duration::from_secs(30);
        detail.push_str(&format!(", {:.1} s", t.as_secs_f64()));
    }
    if let Err(e) = &cross {
        detail.push_str(&format!(", oracle cross-check: {e}"));
    }
    if let Some(c) = rep.counterexamples.first() {
        detail.push_str(&format!(", first counterexample: {c}"));
    }
    Line { criterion: rep.criterion, name: rep.suite, ok, detail }
}

/// Replays the manifest through the binary twice and compares both runs
/// with the in-process report.
fn determinism(manifest: &Manifest, in_process: &str) -> Line {
    let dir = std::env::temp_dir().join(format!("lab-acceptance-{}", std::process::id()));
    let _ = std::fs::create_dir_all(&dir);
    let path = dir.join("manifest.txt");
    let write = std::fs::write(&path, forcing_lab::schema::Schema::to_text(manifest));
    let replay = || -> Option<Vec<u8>> {
        let out = Command::new(env!("CARGO_BIN_EXE_lab")).arg("run").arg("--config").arg(&path).output().ok()?;
        out.status.success().then_some(out.stdout)
    };
    let (a, b) = (replay(), replay());
    let _ = std::fs::remove_dir_all(&dir);
    let ok = write.is_ok() && a.is_some() && a == b && a.as_deref() == Some(in_process.as_bytes());
    let detail = match &a {
        Some(bytes) => format!("two replays of {} bytes, identical to each other and to the in-process run: {ok}", bytes.len()),
        None => "replay failed".to_string(),
    };
    Line { criterion: 11, name: "determinism", ok, detail }
}

fn main() -> ExitCode {
    let mut lines = vec![oracle_equivalence()];

    let manifest = Manifest::new("all", SEED);
    let start = Instant::now();
    let report = run_manifest(&manifest).expect("every suite is known");
    let all_took = start.elapsed();
    for rep in &report.suites {
        let took = (rep.criterion == 5).then(|| {
            let t = Instant::now();
            suites::run_suite(suites::find("simulate").expect("listed"), SEED, 100);
            t.elapsed()
        });
        lines.push(suite_line(rep, took));
    }
    lines.push(determinism(&manifest, &report.render()));

    for l in &lines {
        println!("criterion {:>2} {:<20} {}  {}", l.criterion, l.name, if l.ok { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} of {} criteria pass (suites ran in {:.1} s)", lines.len() - failed, lines.len(), all_took.as_secs_f64());
    for rep in &report.suites {
        for n in &rep.notes {
            println!("  {} note: {n}", rep.suite);
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
