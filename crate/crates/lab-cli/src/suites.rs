//! The acceptance suites. Each takes a seed and a scale and returns a
//! report; nothing here reads the clock, so a manifest replays exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use forcing_lab::ccc::{
    check_strong_almost_disjoint, derive_triple_family, find_compatible_pair, is_valid_pprime, simulate_generic_pprime,
    verify_weak_rho, RhoVerdict, SimConfig,
};
use forcing_lab::gen::{self, rng, EKind, PlantedClause, GAP_THETA, PROFILES};
use forcing_lab::ordinal::{h_of, Ordinal};
use forcing_lab::pstar::{amalgamate_split_family, delta_system_root, is_valid_pstar, leq_failure};
use forcing_lab::quotient::{
    dtheta_check, dtheta_densify, in_p_theta, project_theta, quotient_add_model, quotient_amalgamate,
    quotient_membership, quotient_multi_amalgamate, FilterApprox, MultiAmalgam, QuotientError,
};
use forcing_lab::schema::Schema;
use forcing_lab::side::{
    add_model, amalgamate_fingerprint, amalgamate_models, is_valid_p, leq_p_failure, normalize_p, oplus_p, reflect_generic,
    PCondition, SideError,
};
use forcing_lab::tree::validate_tree;
use forcing_lab::universe::{
    default_universe, gap_universe, union_adequacy_check, KappaOrdinal, ModelSet, Station, Universe, Verdict,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::manifest::{scaled, Manifest};
use crate::report::{RunReport, SuiteReport};
use crate::shrink::shrink_p;

/// Search budget handed to every bounded search.
const BUDGET: usize = 500;
/// Chain height bound for the multi-pool amalgamation.
const MAX_CHAIN: usize = 64;

pub struct Suite {
    pub name: &'static str,
    pub criterion: u32,
    pub run: fn(u64, u64) -> SuiteReport,
}

pub const SUITES: [Suite; 9] = [
    Suite { name: "split", criterion: 2, run: split },
    Suite { name: "normalize", criterion: 3, run: normalize },
    Suite { name: "ccc", criterion: 4, run: ccc },
    Suite { name: "simulate", criterion: 5, run: simulate },
    Suite { name: "profiles", criterion: 6, run: profiles },
    Suite { name: "fingerprint", criterion: 7, run: fingerprint },
    Suite { name: "projection", criterion: 8, run: projection },
    Suite { name: "search", criterion: 9, run: search },
    Suite { name: "quotient", criterion: 10, run: quotient },
];

pub fn find(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

/// Each suite draws from its own stream so selecting one suite or all of
/// them gives it the same instances.
pub fn suite_seed(seed: u64, criterion: u32) -> u64 {
    seed ^ (criterion as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn run_suite(s: &Suite, seed: u64, scale: u64) -> SuiteReport {
    (s.run)(suite_seed(seed, s.criterion), scale)
}

/// Runs the manifest's suites in parallel and merges in list order.
pub fn run_manifest(m: &Manifest) -> Result<RunReport, String> {
    let chosen: Vec<&Suite> = if m.suite == "all" {
        SUITES.iter().collect()
    } else {
        vec![find(&m.suite).ok_or_else(|| format!("unknown suite `{}`", m.suite))?]
    };
    let suites = thread::scope(|sc| {
        let handles: Vec<_> = chosen.iter().map(|s| sc.spawn(move || run_suite(s, m.seed, m.scale))).collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    Ok(RunReport { manifest: m.to_text(), suites })
}

fn below_all(q: &PCondition, parts: &[&PCondition]) -> bool {
    parts.iter().all(|p| leq_p_failure(q, p).is_none())
}

// ---------------------------------------------------------------------------

fn split(seed: u64, scale: u64) -> SuiteReport {
    let u = default_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("split", 2);
    let mut by_d = [0usize; 3];
    for i in 0..scaled(10_000, scale) {
        let d = 2 + i % 3;
        by_d[d - 2] += 1;
        let (parts, levels) = gen::split_family(&mut r, &u, d);
        let outcome = amalgamate_split_family(&parts, &levels);
        let ok = match &outcome {
            Ok((a, cert)) => cert.extends_all && is_valid_pstar(a) && parts.iter().all(|p| leq_failure(a, p).is_none()),
            Err(_) => false,
        };
        rep.record(ok, || {
            let why = outcome.err().map_or("amalgam not below every part".to_string(), |e| e.to_string());
            let levels: Vec<String> = levels.iter().map(Ordinal::to_string).collect();
            let parts: Vec<String> = parts.iter().map(Schema::to_text).collect();
            format!("{why}; levels [{}]; parts {}", levels.join(" "), parts.join(" "))
        });
    }
    rep.note(format!("families by size: d=2 {}, d=3 {}, d=4 {}", by_d[0], by_d[1], by_d[2]));
    rep
}

/// The clauses `normalize_p` misses on `p`.
pub fn normalize_failures(u: &Universe, p: &PCondition) -> Vec<&'static str> {
    let q = match normalize_p(u, p) {
        Ok(q) => q,
        Err(_) => return vec!["normalize refused a valid condition"],
    };
    let mut out = Vec::new();
    let (pb, qb) = (&p.base, &q.base);
    if !validate_tree(&qb.tree).all() {
        out.push("tree is not downwards closed with minimal splits");
    }
    if !is_valid_p(u, &q) {
        out.push("output is not a condition");
    }
    if leq_p_failure(&q, p).is_some() {
        out.push("output does not extend the input");
    }
    if qb.d != pb.d || q.a != p.a || !qb.w.keys().eq(pb.w.keys()) {
        out.push("commitments, side condition or domain changed");
    }
    if pb.w.iter().any(|(k, w)| qb.w[k] != qb.tree.downward_closure(w)) {
        out.push("subtree is not the closure of the input subtree");
    }
    let witnessed = qb.w.iter().all(|(a, wa)| {
        qb.w.iter().filter(|(b, _)| a < *b).all(|(b, wb)| {
            wa.intersection(wb).all(|x| pb.w[a].intersection(&pb.w[b]).any(|z| qb.tree.leq(x, z)))
        })
    });
    if !witnessed {
        out.push("a new shared node has no shared node above it");
    }
    if normalize_p(u, &q).as_ref() != Ok(&q) {
        out.push("not idempotent");
    }
    out
}

fn normalize(seed: u64, scale: u64) -> SuiteReport {
    let u = default_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("normalize", 3);
    for _ in 0..scaled(10_000, scale) {
        let p = gen::random_valid_p(&mut r, &u, 10, 4, 3);
        let f = normalize_failures(&u, &p);
        rep.record(f.is_empty(), || {
            let small = shrink_p(&p, |c| is_valid_p(&u, c) && !normalize_failures(&u, c).is_empty());
            format!("{}: {}", f.join(", "), small.to_text())
        });
    }
    rep
}

const COPIES: usize = 200;

fn ccc(seed: u64, scale: u64) -> SuiteReport {
    let u = default_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("ccc", 4);
    let gammas = [Ordinal::ch_point(1), Ordinal::ch_point(COPIES as u64 + 2)];
    let mut pairs = BTreeMap::new();
    for run in 0..scaled(20, scale) {
        let kind = if run % 2 == 0 { EKind::ConstantTop } else { EKind::RandomHigh };
        let (placed, e) = gen::translated_copies(&mut r, &u, COPIES, kind);
        let rho = verify_weak_rho(&e, &[gen::private_blocks(&placed)], &gammas);
        if rho != Ok(RhoVerdict::Holds) {
            rep.fail(format!("run {run} ({kind:?}): e fails the weak ρ check on the copy blocks: {rho:?}"));
            continue;
        }
        match find_compatible_pair(&placed, &e) {
            Ok(pair) => {
                let ok = pair.i != pair.j
                    && is_valid_pprime(&pair.amalgam, &e)
                    && leq_failure(&pair.amalgam, &placed[pair.i].cond).is_none()
                    && leq_failure(&pair.amalgam, &placed[pair.j].cond).is_none();
                *pairs.entry((pair.i, pair.j)).or_insert(0) += 1;
                rep.record(ok, || format!("run {run} ({kind:?}): amalgam of {} and {} is not certified", pair.i, pair.j));
            }
            Err(err) => rep.fail(format!("run {run} ({kind:?}): {err}")),
        }
    }
    rep.note(format!("{COPIES} copies per run; chosen pairs {pairs:?}"));
    rep
}

/// Criterion 5 for one simulator run; returns the failed checks.
pub fn simulation_failures(cfg: &SimConfig) -> Result<Vec<String>, String> {
    let g = simulate_generic_pprime(cfg).map_err(|e| e.to_string())?;
    let t = g.tree();
    let mut out = Vec::new();
    if !validate_tree(t).all() {
        out.push("final tree fails a validation flag".to_string());
    }
    let want: BTreeSet<Ordinal> = (0..cfg.height).map(Ordinal::nat).collect();
    if t.heights() != want || t.nodes().any(|x| h_of(x) != Ordinal::nat(t.preds_of(x).len() as u64)) {
        out.push("heights disagree with levels".to_string());
    }
    if let Some((k, _)) = g.subtrees().iter().find(|(_, w)| !t.is_downward_closed_set(w)) {
        out.push(format!("W({}) is not downward closed", k.to_text()));
    }
    let sad = check_strong_almost_disjoint(&g);
    let committed = sad.pairs.iter().filter(|c| c.committed_at.is_some()).count();
    if committed != cfg.pairs.len() || !sad.all_committed_certified() {
        out.push(format!("{committed} of {} pairs committed, certified: {}", cfg.pairs.len(), sad.all_committed_certified()));
    }
    let certs: BTreeMap<_, _> = sad.pairs.iter().map(|c| ((c.pair.0.clone(), c.pair.1.clone()), c)).collect();
    let triples = derive_triple_family(t, g.subtrees());
    for (a, b, _) in &triples.intersections {
        let Some(cert) = certs.get(&(a.clone(), b.clone())) else {
            out.push(format!("no certificate for ({}, {})", a.to_text(), b.to_text()));
            continue;
        };
        let (wa, wb) = (&g.subtrees()[a], &g.subtrees()[b]);
        let inside = triples.families[a].intersection(&triples.families[b]).all(|tr| {
            tr.nodes().iter().all(|x| wa.contains(*x) && wb.contains(*x) && cert.generators.iter().any(|z| t.leq(x, z)))
        });
        if !inside {
            out.push(format!("shared triples of ({}, {}) leave the generated region", a.to_text(), b.to_text()));
        }
    }
    Ok(out)
}

pub fn criterion_five_config(seed: u64) -> SimConfig {
    SimConfig::new((1..=8).map(KappaOrdinal::nat).collect(), 12, seed).commit_all()
}

fn simulate(seed: u64, scale: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("simulate", 5);
    for k in 0..scaled(5, scale) as u64 {
        let cfg = criterion_five_config(seed.wrapping_add(k));
        match simulation_failures(&cfg) {
            Ok(f) => rep.record(f.is_empty(), || format!("seed {}: {}", cfg.seed, f.join("; "))),
            Err(e) => rep.fail(format!("seed {}: {e}", cfg.seed)),
        }
    }
    rep.note("8 indices, height 12, all 28 pairs committed");
    rep
}

fn profiles(seed: u64, scale: u64) -> SuiteReport {
    let u = default_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("profiles", 6);
    let target = scaled(10_000, scale);
    let mut held = [0usize; PROFILES.len()];
    let mut draws = 0;
    while held.iter().sum::<usize>() < target && draws < 20 * target {
        let i = draws % PROFILES.len();
        draws += 1;
        let Some(p) = gen::profile_instance(&mut r, &u, PROFILES[i]) else { continue };
        match union_adequacy_check(&u, &p) {
            Verdict::Holds => {
                held[i] += 1;
                rep.checked += 1;
            }
            Verdict::Counterexample(c) => rep.fail(format!("{}: {c}: {p:?}", PROFILES[i])),
            Verdict::HypothesesFail(_) => {}
        }
    }
    if held.iter().sum::<usize>() < target {
        rep.fail(format!("only {} hypothesis-satisfying instances in {draws} draws", held.iter().sum::<usize>()));
    }
    let per: Vec<String> = PROFILES.iter().zip(held).map(|(n, h)| format!("{n} {h}")).collect();
    rep.note(format!("instances meeting the hypotheses: {}", per.join(", ")));
    rep
}

fn fingerprint(seed: u64, scale: u64) -> SuiteReport {
    let u = default_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("fingerprint", 7);
    let stations: Vec<Station> = (0..u.station_count()).collect();
    let mut planted: BTreeMap<PlantedClause, usize> = BTreeMap::new();
    for i in 0..scaled(1000, scale) {
        let t = gen::copy_tuple(&mut r, &u, 2 + i % 2, &stations);
        let parts = t.parts();
        let conds = t.conditions();
        let refs: Vec<&PCondition> = conds.iter().collect();
        let by_fp = amalgamate_fingerprint(&u, &parts);
        let by_maps = amalgamate_models(&u, &conds, &t.models(), &t.maps());
        match (&by_fp, &by_maps) {
            (Ok((q, cert)), Ok((q2, _))) => {
                let doms: Vec<_> = conds.iter().map(PCondition::dom).collect();
                let ok = q == q2
                    && is_valid_p(&u, q)
                    && below_all(q, &refs)
                    && cert.model.extends_all
                    && delta_system_root(&doms).as_ref() == Ok(&cert.dom_root);
                rep.record(ok, || format!("tuple {i}: amalgam not certified"));
            }
            _ => rep.fail(format!("tuple {i}: {:?} / {:?}", by_fp.err(), by_maps.err())),
        }
        for c in PlantedClause::ALL {
            let Some(bad) = gen::plant_violation(&u, &t, c) else { continue };
            *planted.entry(c).or_insert(0) += 1;
            let named = matches!(
                amalgamate_models(&u, &bad.conditions(), &bad.models(), &bad.maps()),
                Err(SideError::Clause { clause, .. }) if clause == c.amalgam_clause()
            );
            let field = matches!(
                amalgamate_fingerprint(&u, &bad.parts()),
                Err(SideError::FingerprintMismatch { field, .. }) if field == c.fingerprint_field()
            );
            rep.record(named && field, || format!("tuple {i}: plant {c:?} not rejected with its clause"));
        }
    }
    for c in PlantedClause::ALL {
        if !planted.contains_key(&c) {
            rep.fail(format!("clause {c:?} was never planted"));
        }
    }
    let counts: Vec<String> = planted.iter().map(|(c, n)| format!("{c:?} {n}")).collect();
    rep.note(format!("plants: {}", counts.join(", ")));
    rep
}

/// `s` with some indices and models dropped; still in `P_θ` when `s` is.
fn weaken(r: &mut ChaCha8Rng, s: &PCondition) -> PCondition {
    let mut w = s.clone();
    let keys: Vec<_> = w.base.w.keys().cloned().collect();
    for k in keys {
        if r.gen_bool(0.3) {
            w.base.w.remove(&k);
            w.base.d.retain(|(a, b)| *a != k && *b != k);
        }
    }
    w.a.retain(|_| r.gen_bool(0.7));
    w
}

/// The projection laws for one `(p, q, θ)`; returns the failed law.
pub fn projection_law_failure(
    u: &Universe,
    p: &PCondition,
    q: &PCondition,
    s: &PCondition,
    theta: Station,
) -> Option<&'static str> {
    let pi = project_theta(u, p, theta).ok()?;
    if !is_valid_p(u, &pi) || !in_p_theta(u, &pi, theta) || leq_p_failure(p, &pi).is_some() {
        return Some("projection is not a weaker condition in the θ-part");
    }
    if project_theta(u, &pi, theta).as_ref() != Ok(&pi) {
        return Some("projection is not idempotent");
    }
    if !is_valid_p(u, q) || leq_p_failure(q, p).is_some() {
        return None;
    }
    let pq = project_theta(u, q, theta).ok()?;
    if leq_p_failure(&pq, &pi).is_some() {
        return Some("projection is not monotone");
    }
    if in_p_theta(u, s, theta) && leq_p_failure(q, s).is_none() && leq_p_failure(&pq, s).is_some() {
        return Some("projection is not the least θ-part above");
    }
    let both = oplus_p(&[p, q]);
    if is_valid_p(u, &both) && project_theta(u, &both, theta).ok()? != oplus_p(&[&pi, &pq]) {
        return Some("projection does not distribute over the union");
    }
    None
}

fn projection(seed: u64, scale: u64) -> SuiteReport {
    let u = gap_universe();
    let sigma: Vec<Station> = u.sigma_stations().collect();
    let all: Vec<Station> = (0..u.station_count()).collect();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("projection", 8);
    let laws = scaled(10_000, scale);
    for i in 0..laws {
        let theta = sigma[i % sigma.len()];
        let p = gen::random_valid_p(&mut r, &u, 8, 4, 3);
        let q = gen::random_extension_p(&mut r, &u, &p);
        let s = weaken(&mut r, &project_theta(&u, &p, theta).expect("θ is in Σ"));
        let f = projection_law_failure(&u, &p, &q, &s, theta);
        rep.record(f.is_none(), || {
            let small = shrink_p(&p, |c| is_valid_p(&u, c) && projection_law_failure(&u, c, &q, &s, theta).is_some());
            format!("θ={theta}: {}: p = {}, q = {}", f.unwrap_or_default(), small.to_text(), q.to_text())
        });
    }
    let tuples = scaled(1000, scale);
    for i in 0..tuples {
        let theta = sigma[i % sigma.len()];
        let d = r.gen_range(2..=3);
        let t = gen::copy_tuple(&mut r, &u, d, &all);
        let parts = t.conditions();
        let refs: Vec<&PCondition> = parts.iter().collect();
        let pis: Vec<PCondition> = parts.iter().filter_map(|p| project_theta(&u, p, theta).ok()).collect();
        let pi_refs: Vec<&PCondition> = pis.iter().collect();
        let ok = project_theta(&u, &oplus_p(&refs), theta).ok() == Some(oplus_p(&pi_refs));
        rep.record(ok, || format!("θ={theta}: projection does not distribute over a tuple"));
    }
    let pairs = scaled(1000, scale);
    for _ in 0..pairs {
        let (p, s) = gen::projection_pair(&mut r, &u);
        match quotient_amalgamate(&u, &p, &s, GAP_THETA, &[], BUDGET) {
            Ok(q) => rep.record(is_valid_p(&u, &q) && below_all(&q, &[&p, &s]), || {
                format!("amalgam of {} and {} not below both", p.to_text(), s.to_text())
            }),
            Err(e) => rep.fail(format!("{e}: p = {}, s = {}", p.to_text(), s.to_text())),
        }
    }
    rep.note(format!("{laws} law samples, {tuples} tuple samples, {pairs} planted amalgamations"));
    rep
}

/// Outcomes on free instances, reported but never failed.
#[derive(Default)]
struct Rate {
    solved: usize,
    reasons: BTreeMap<String, usize>,
}

impl Rate {
    fn add<T, E: std::fmt::Display>(&mut self, out: Result<T, E>) {
        match out {
            Ok(_) => self.solved += 1,
            Err(e) => *self.reasons.entry(e.to_string()).or_insert(0) += 1,
        }
    }

    fn text(&self, what: &str) -> String {
        let failed: usize = self.reasons.values().sum();
        let mut s = format!("{what}: {}/{} free instances solved", self.solved, self.solved + failed);
        if failed > 0 {
            let why: Vec<String> = self.reasons.iter().map(|(r, n)| format!("{r} ×{n}")).collect();
            s.push_str(&format!("; honest failures: {}", why.join(", ")));
        }
        s
    }
}

fn search(seed: u64, scale: u64) -> SuiteReport {
    let du = default_universe();
    let gu = gap_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("search", 9);
    let planted = scaled(500, scale);
    let free = scaled(200, scale);
    let mut after_formula = 0;

    for _ in 0..planted {
        let (q, n) = gen::reflection_instance(&mut r, &du);
        match reflect_generic(&du, &q, &n, &|_| true, 2000) {
            Ok(out) => {
                after_formula += out.rejected_after_formula;
                let ok = is_valid_p(&du, &out.amalgam) && below_all(&out.amalgam, &[&q, &out.q_bar]);
                rep.record(ok, || format!("reflection of {} over {}: amalgam not certified", q.to_text(), n.to_text()));
            }
            Err(e) => rep.fail(format!("reflection of {} over {}: {e}", q.to_text(), n.to_text())),
        }
    }
    for _ in 0..planted {
        let q = gen::mirror_instance(&mut r, &gu);
        match dtheta_densify(&gu, &q, GAP_THETA, None, BUDGET) {
            Ok(d) => {
                after_formula += d.rejected_after_formula;
                let ok = is_valid_p(&gu, &d.r)
                    && below_all(&d.r, &[&q])
                    && dtheta_check(&d.r, GAP_THETA, BUDGET).witness().is_some();
                rep.record(ok, || format!("densifying {}: output not certified", q.to_text()));
            }
            Err(e) => rep.fail(format!("densifying {}: {e}", q.to_text())),
        }
    }
    for _ in 0..planted {
        let sc = gen::add_model_scenario(&mut r, &gu);
        let out = FilterApprox::from_generator(&gu, GAP_THETA, sc.generator.clone())
            .and_then(|mut h| quotient_add_model(&gu, &sc.p, &sc.n, &mut h, BUDGET));
        match out {
            Ok(a) => {
                let ok = is_valid_p(&gu, &a.v) && below_all(&a.v, &[&a.stage, &a.p_plus_n]) && a.v.a.contains(&sc.n);
                rep.record(ok, || format!("adding {} to {}: output not certified", sc.n.to_text(), sc.p.to_text()));
            }
            Err(e) => rep.fail(format!("adding {} to {}: {e}", sc.n.to_text(), sc.p.to_text())),
        }
    }
    for i in 0..planted {
        let sc = gen::pool_scenario(&mut r, &gu, 2 + i % 2, false);
        let out = FilterApprox::from_generator(&gu, GAP_THETA, sc.generator.clone())
            .and_then(|h| quotient_multi_amalgamate(&gu, &sc.pools, &h, MAX_CHAIN, BUDGET));
        match out {
            Ok(m) => rep.record(m.membership.member, || format!("pool scenario {i}: amalgam not in the quotient")),
            Err(e) => rep.fail(format!("pool scenario {i}: {e}")),
        }
    }

    let (mut refl, mut dens, mut add, mut multi) = (Rate::default(), Rate::default(), Rate::default(), Rate::default());
    for _ in 0..free {
        if let Some((q, n)) = gen::free_reflection_instance(&mut r, &du) {
            refl.add(reflect_generic(&du, &q, &n, &|_| true, 2000));
        }
        let q = gen::free_mirror_instance(&mut r, &gu);
        dens.add(dtheta_densify(&gu, &q, GAP_THETA, None, BUDGET));
        // A dense-set member with an unplanned model holding θ.
        let p = gen::etheta_member(&mut r, &gu);
        let n = free_model(&mut r, &gu);
        let out = project_theta(&gu, &p, GAP_THETA)
            .map(|pi| add_model(&gu, &pi, &n.cut(GAP_THETA)).unwrap_or(pi))
            .and_then(|t| FilterApprox::from_generator(&gu, GAP_THETA, t))
            .and_then(|mut h| quotient_add_model(&gu, &p, &n, &mut h, BUDGET));
        add.add(out);
        // Pools drawn from two unrelated scenarios under their joint generator.
        let (a, b) = (gen::pool_scenario(&mut r, &gu, 2, false), gen::pool_scenario(&mut r, &gu, 2, false));
        let pools = vec![a.pools[0].clone(), b.pools[1].clone()];
        let out = FilterApprox::from_generator(&gu, GAP_THETA, oplus_p(&[&a.generator, &b.generator]))
            .and_then(|h| quotient_multi_amalgamate(&gu, &pools, &h, MAX_CHAIN, BUDGET));
        multi.add(out.and_then(|m| if m.membership.member { Ok(m) } else { Err(QuotientError::NotInQuotient) }));
    }
    rep.note(format!("{planted} planted instances per search"));
    rep.note(refl.text("reflection"));
    rep.note(dens.text("density below θ"));
    rep.note(add.text("adding a model in the quotient"));
    rep.note(multi.text("multi-pool amalgamation across unrelated scenarios"));
    rep.note(format!("candidates rejected after passing the formula: {after_formula}"));
    rep
}

fn free_model(r: &mut ChaCha8Rng, u: &Universe) -> ModelSet {
    let mut m = gen::random_model(r, u, 4);
    let mut stations = m.stations.clone();
    stations.insert(GAP_THETA);
    u.close_stations(&mut stations);
    m.stations = stations;
    m
}

/// The incomparability criterion for a multi-pool amalgam, checked from
/// scratch: the private nodes of the chosen representatives are pairwise
/// incomparable in `T_H`, and the amalgam extends each of them.
pub fn multi_criterion_failure(pools: &[Vec<(PCondition, ModelSet)>], m: &MultiAmalgam, h: &FilterApprox) -> Option<String> {
    let d = pools.len();
    if m.chosen_rows.len() != d {
        return Some(format!("{} rows chosen for {d} pools", m.chosen_rows.len()));
    }
    let mut chosen: Vec<&PCondition> = Vec::new();
    for (i, &row) in m.chosen_rows.iter().enumerate() {
        let Some(&entry) = m.rows.get(row).and_then(|r| r.get(i)) else {
            return Some(format!("pool {i} points at a missing row"));
        };
        chosen.push(&pools[i].get(entry)?.0);
    }
    let th = h.tree_h();
    let private: Vec<BTreeSet<&Ordinal>> = (0..d)
        .map(|i| {
            chosen[i].tree().nodes().filter(|x| (0..d).all(|j| j == i || !chosen[j].tree().contains(x))).collect()
        })
        .collect();
    for i in 0..d {
        if let Some(x) = private[i].iter().find(|x| !th.contains(x)) {
            return Some(format!("private node {x} of pool {i} is not in T_H"));
        }
        for j in i + 1..d {
            for x in &private[i] {
                if let Some(y) = private[j].iter().find(|y| th.comparable(x, y)) {
                    return Some(format!("{x} (pool {i}) and {y} (pool {j}) are comparable in T_H"));
                }
            }
        }
    }
    if !below_all(&m.q, &chosen) {
        return Some("amalgam does not extend the chosen representatives".into());
    }
    (!m.membership.member).then(|| "criterion holds but the amalgam is not in the quotient".into())
}

fn quotient(seed: u64, scale: u64) -> SuiteReport {
    let u = gap_universe();
    let mut r = rng(seed);
    let mut rep = SuiteReport::new("quotient", 10);
    rep.note("filter surrogate: the upward closure of one generator condition in the θ-part");

    let (_, _, generator, p) = gen::clashing_model_scenario();
    let outcome = FilterApprox::from_generator(&u, GAP_THETA, generator).map(|h| quotient_membership(&u, &p, &h));
    let exact = matches!(&outcome, Ok(m) if !m.member && m.projection_in_filter)
        && project_theta(&u, &p, GAP_THETA) == Ok(PCondition::empty());
    rep.record(exact, || format!("clashing-model example not reproduced: {outcome:?}"));

    let runs = scaled(200, scale);
    for i in 0..runs {
        let sc = gen::pool_scenario(&mut r, &u, 2 + i % 2, false);
        let h = match FilterApprox::from_generator(&u, GAP_THETA, sc.generator.clone()) {
            Ok(h) => h,
            Err(e) => {
                rep.fail(format!("pool scenario {i}: generator rejected: {e}"));
                continue;
            }
        };
        match quotient_multi_amalgamate(&u, &sc.pools, &h, MAX_CHAIN, BUDGET) {
            Ok(m) => {
                let f = multi_criterion_failure(&sc.pools, &m, &h);
                rep.record(f.is_none(), || format!("pool scenario {i}: {}", f.unwrap_or_default()));
            }
            Err(e) => rep.fail(format!("pool scenario {i}: {e}")),
        }
    }
    let chains = scaled(50, scale);
    for i in 0..chains {
        let sc = gen::pool_scenario(&mut r, &u, 2 + i % 2, true);
        let out = FilterApprox::from_generator(&u, GAP_THETA, sc.generator.clone())
            .and_then(|h| quotient_multi_amalgamate(&u, &sc.pools, &h, MAX_CHAIN, BUDGET));
        let refused = matches!(out, Err(QuotientError::NoIncomparableFamily));
        rep.record(refused, || format!("chain scenario {i}: expected no incomparable family, got {:?}", out.map(|m| m.q.to_text())));
    }
    rep.note(format!("{runs} multi-pool amalgams checked, {chains} chain-shaped plants refused"));
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_at_small_scale() {
        for s in &SUITES {
            let rep = run_suite(s, 1, 1);
            assert!(rep.passed(), "{}", rep.render());
            assert!(rep.checked > 0, "{}", s.name);
        }
    }

    #[test]
    fn unknown_suites_are_refused() {
        assert!(run_manifest(&Manifest::new("nope", 0)).is_err());
    }
}
