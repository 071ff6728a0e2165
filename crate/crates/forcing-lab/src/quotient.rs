//! Projection to the θ-part, the dense set of conditions that mirror their
//! high part below θ, and the quotient forcing read against a finite filter
//! surrogate: the upward closure of one generator condition in `P ∩ Sk(θ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ccc::{simulate_generic_pprime, SimConfig, SimError};
use crate::ordinal::Ordinal;
use crate::pstar::{commit, Key, PStarCondition};
use crate::side::{
    add_model, amalgamate_fingerprint, certify_below, ensure_valid, fingerprint_w, in_fingerprint_domain,
    is_bijection, is_valid_p, leq_p_failure, oplus_p, Fingerprint, FingerprintCertificate, PCondition,
    SideError,
};
use crate::tree::{find_incomparable_family, FamilySearch, NodeSet, TreeError};
use crate::universe::{
    close_beta, close_n, is_beta_closed, is_n_closed, model_less, sk_contains, Hull, KappaOrdinal,
    ModelSet, Station, Supported, Universe, UniverseError,
};

/// The five hypotheses of the cross-θ amalgamation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrossClause {
    FixesLowKeys,
    FixesLowModels,
    SameSubtrees,
    TraceAndCut,
    Membership,
}

impl fmt::Display for CrossClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrossClause::FixesLowKeys => "maps fix the indices below θ",
            CrossClause::FixesLowModels => "maps fix the models below θ",
            CrossClause::SameSubtrees => "matched indices have equal subtrees",
            CrossClause::TraceAndCut => "matched models share their trace below θ",
            CrossClause::Membership => "maps preserve model membership",
        })
    }
}

/// What a θ-witness must satisfy, starting with the shape of its maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WitnessClause {
    Shape,
    SameSubtree,
    TraceFits,
    Membership,
    LowCommitments,
    HighCommitments,
    ModelInclusion,
}

impl fmt::Display for WitnessClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WitnessClause::Shape => "shape",
            WitnessClause::SameSubtree => "high index keeps its subtree",
            WitnessClause::TraceFits => "high model keeps its trace",
            WitnessClause::Membership => "membership is preserved",
            WitnessClause::LowCommitments => "commitments to low indices are copied",
            WitnessClause::HighCommitments => "commitments among high indices are copied",
            WitnessClause::ModelInclusion => "model inclusion is preserved",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QuotientError {
    #[error("station {0} is not in Σ")]
    NotSigma(Station),
    #[error("condition is not in P ∩ Sk(θ)")]
    NotInPTheta,
    #[error("side condition is not θ-closed")]
    NotThetaClosed,
    #[error("s is not below the projection of p")]
    NotBelowProjection,
    #[error("p is not in E_θ")]
    NotInE,
    #[error("p is not in D_θ")]
    NotInD,
    #[error("p has an empty side condition")]
    EmptySide,
    #[error("condition is not in the quotient")]
    NotInQuotient,
    #[error("model is not in the pool of the filter")]
    NotInPool,
    #[error("θ is not a station of N")]
    ThetaOutsideModel,
    #[error("N is not in A_p")]
    ModelNotInSide,
    #[error("hypothesis {0} fails")]
    Cross(CrossClause),
    #[error("chain step {0} does not descend")]
    NotDescending(usize),
    #[error("pools need at least one entry each")]
    EmptyPool,
    #[error("θ-fingerprints differ between pool entries")]
    FingerprintMismatch,
    #[error("only {rows} nested rows could be formed, {needed} needed")]
    TooFewRows { rows: usize, needed: usize },
    #[error("no T_H-incomparable family of the requested size")]
    NoIncomparableFamily,
    #[error("certification failed: {0}")]
    Uncertified(String),
    #[error("search exhausted after {0} candidates")]
    Exhausted(usize),
    #[error(transparent)]
    Side(#[from] SideError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn require_sigma(u: &Universe, theta: Station) -> Result<(), QuotientError> {
    if u.is_sigma(theta) {
        Ok(())
    } else {
        Err(QuotientError::NotSigma(theta))
    }
}

fn uncertified(e: SideError) -> QuotientError {
    match e {
        SideError::Uncertified(s) => QuotientError::Uncertified(s),
        other => QuotientError::Side(other),
    }
}

/// Whether a condition lies in `P ∩ Sk(θ)`.
pub fn in_p_theta(u: &Universe, p: &PCondition, theta: Station) -> bool {
    is_valid_p(u, p) && sk_contains(Hull::Below(theta), p)
}

/// The truncation of `p` to its θ-part; the tree is kept whole.
pub fn project_theta(u: &Universe, p: &PCondition, theta: Station) -> Result<PCondition, QuotientError> {
    require_sigma(u, theta)?;
    let base = PStarCondition {
        tree: p.base.tree.clone(),
        w: p.base.w.iter().filter(|(k, _)| k.below_station(theta)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        d: p.base.d.iter().filter(|(a, b)| a.below_station(theta) && b.below_station(theta)).cloned().collect(),
    };
    let a = p.a.iter().filter(|m| sk_contains(Hull::Below(theta), *m)).cloned().collect();
    Ok(PCondition { base, a })
}

/// Maps sending the part of `p` above θ onto its part below θ.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaWitness {
    pub f: BTreeMap<Key, Key>,
    pub g: BTreeMap<ModelSet, ModelSet>,
}

fn split_dom(p: &PCondition, theta: Station) -> (Vec<Key>, Vec<Key>) {
    p.dom().into_iter().partition(|k| !k.below_station(theta))
}

fn split_side(p: &PCondition, theta: Station) -> (Vec<ModelSet>, Vec<ModelSet>) {
    p.a.iter().cloned().partition(|m| !sk_contains(Hull::Below(theta), m))
}

fn trace_fits(m: &ModelSet, k: &ModelSet, theta: Station) -> bool {
    m.delta == k.delta && m.cut(theta).stations.is_subset(&k.stations)
}

/// Every witness clause violated by `w` for `p`; the shape check covers
/// domains and codomains of both maps.
pub fn witness_failures(p: &PCondition, theta: Station, w: &ThetaWitness) -> Vec<WitnessClause> {
    let (high, low) = split_dom(p, theta);
    let (high_m, low_m) = split_side(p, theta);
    let low_set: BTreeSet<&Key> = low.iter().collect();
    let low_m_set: BTreeSet<&ModelSet> = low_m.iter().collect();
    let shape = w.f.keys().eq(high.iter())
        && w.f.values().all(|v| low_set.contains(v))
        && w.g.keys().eq(high_m.iter())
        && w.g.values().all(|v| low_m_set.contains(v));
    if !shape {
        return vec![WitnessClause::Shape];
    }
    let mut out = Vec::new();
    let d = &p.base.d;
    if high.iter().any(|k| p.base.w_of(k) != p.base.w_of(&w.f[k])) {
        out.push(WitnessClause::SameSubtree);
    }
    if high_m.iter().any(|m| !trace_fits(m, &w.g[m], theta)) {
        out.push(WitnessClause::TraceFits);
    }
    if high.iter().any(|k| high_m.iter().any(|m| m.contains_kappa(k) != w.g[m].contains_kappa(&w.f[k]))) {
        out.push(WitnessClause::Membership);
    }
    let low_commits = high.iter().all(|k| {
        low.iter().all(|x| !d.contains(&commit(k.clone(), x.clone())) || d.contains(&commit(w.f[k].clone(), x.clone())))
    });
    if !low_commits {
        out.push(WitnessClause::LowCommitments);
    }
    let high_commits = high.iter().all(|a| {
        high.iter().all(|b| {
            a == b || !d.contains(&commit(a.clone(), b.clone())) || d.contains(&commit(w.f[a].clone(), w.f[b].clone()))
        })
    });
    if !high_commits {
        out.push(WitnessClause::HighCommitments);
    }
    let inclusion = high_m.iter().all(|k| high_m.iter().all(|m| !k.is_subset(m) || w.g[k].is_subset(&w.g[m])));
    if !inclusion {
        out.push(WitnessClause::ModelInclusion);
    }
    out
}

/// Outcome of the witness search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DThetaOutcome {
    Member(ThetaWitness),
    NotThetaClosed,
    /// No witness exists; `blocked_by` is the clause that rejected the last
    /// candidate at the deepest level the search reached.
    NoWitness { blocked_by: Option<WitnessClause> },
    Exhausted(usize),
}

impl DThetaOutcome {
    pub fn witness(&self) -> Option<&ThetaWitness> {
        match self {
            DThetaOutcome::Member(w) => Some(w),
            _ => None,
        }
    }
}

struct WitnessSearch<'a> {
    p: &'a PCondition,
    high: Vec<Key>,
    low: Vec<Key>,
    key_cands: Vec<Vec<Key>>,
    high_m: Vec<ModelSet>,
    model_cands: Vec<Vec<ModelSet>>,
    f: Vec<Key>,
    g: Vec<ModelSet>,
    visited: usize,
    budget: usize,
    deepest: usize,
    blocked_by: Option<WitnessClause>,
}

impl WitnessSearch<'_> {
    fn note(&mut self, depth: usize, c: WitnessClause) {
        if depth >= self.deepest {
            self.deepest = depth;
            self.blocked_by = Some(c);
        }
    }

    fn key_ok(&self, i: usize, cand: &Key) -> Option<WitnessClause> {
        let d = &self.p.base.d;
        let eta = &self.high[i];
        for x in &self.low {
            if d.contains(&commit(eta.clone(), x.clone())) && !d.contains(&commit(cand.clone(), x.clone())) {
                return Some(WitnessClause::LowCommitments);
            }
        }
        for j in 0..i {
            if d.contains(&commit(self.high[j].clone(), eta.clone()))
                && !d.contains(&commit(self.f[j].clone(), cand.clone()))
            {
                return Some(WitnessClause::HighCommitments);
            }
        }
        None
    }

    fn model_ok(&self, l: usize, cand: &ModelSet) -> Option<WitnessClause> {
        let m = &self.high_m[l];
        for (k, eta) in self.high.iter().enumerate() {
            if m.contains_kappa(eta) != cand.contains_kappa(&self.f[k]) {
                return Some(WitnessClause::Membership);
            }
        }
        for j in 0..l {
            let other = &self.high_m[j];
            if (other.is_subset(m) && !self.g[j].is_subset(cand)) || (m.is_subset(other) && !cand.is_subset(&self.g[j])) {
                return Some(WitnessClause::ModelInclusion);
            }
        }
        None
    }

    /// Depth-first in (f, g) order; the first hit is the least witness.
    fn run(&mut self) -> Result<bool, usize> {
        let depth = self.f.len() + self.g.len();
        if self.f.len() < self.high.len() {
            let i = self.f.len();
            for cand in self.key_cands[i].clone() {
                self.visited += 1;
                if self.visited > self.budget {
                    return Err(self.visited);
                }
                if let Some(c) = self.key_ok(i, &cand) {
                    self.note(depth, c);
                    continue;
                }
                self.f.push(cand);
                if self.run()? {
                    return Ok(true);
                }
                self.f.pop();
            }
            if self.key_cands[i].is_empty() {
                self.note(depth, WitnessClause::SameSubtree);
            }
            return Ok(false);
        }
        if self.g.len() < self.high_m.len() {
            let l = self.g.len();
            for cand in self.model_cands[l].clone() {
                self.visited += 1;
                if self.visited > self.budget {
                    return Err(self.visited);
                }
                if let Some(c) = self.model_ok(l, &cand) {
                    self.note(depth, c);
                    continue;
                }
                self.g.push(cand);
                if self.run()? {
                    return Ok(true);
                }
                self.g.pop();
            }
            if self.model_cands[l].is_empty() {
                self.note(depth, WitnessClause::TraceFits);
            }
            return Ok(false);
        }
        Ok(true)
    }
}

/// Decides membership in D_θ: θ-closedness, then a backtracking search for
/// the least witness in the canonical orders of keys and models.
pub fn dtheta_check(p: &PCondition, theta: Station, budget: usize) -> DThetaOutcome {
    if !is_beta_closed(&p.a, theta) {
        return DThetaOutcome::NotThetaClosed;
    }
    let (high, low) = split_dom(p, theta);
    let (high_m, low_m) = split_side(p, theta);
    let key_cands = high
        .iter()
        .map(|k| low.iter().filter(|x| p.base.w_of(x) == p.base.w_of(k)).cloned().collect())
        .collect();
    let model_cands =
        high_m.iter().map(|m| low_m.iter().filter(|k| trace_fits(m, k, theta)).cloned().collect()).collect();
    let mut s = WitnessSearch {
        p,
        high,
        low,
        key_cands,
        high_m,
        model_cands,
        f: Vec::new(),
        g: Vec::new(),
        visited: 0,
        budget,
        deepest: 0,
        blocked_by: None,
    };
    match s.run() {
        Ok(true) => DThetaOutcome::Member(ThetaWitness {
            f: s.high.iter().cloned().zip(s.f.iter().cloned()).collect(),
            g: s.high_m.iter().cloned().zip(s.g.iter().cloned()).collect(),
        }),
        Ok(false) => DThetaOutcome::NoWitness { blocked_by: s.blocked_by },
        Err(n) => DThetaOutcome::Exhausted(n),
    }
}

/// `q̄ ⊕ q` for a mirror `q̄ ∈ Sk(θ)` of a θ-closed `q`, after checking the
/// five hypotheses on the bijections `f: dom(W) → dom(W̄)`, `g: A → Ā`.
pub fn cross_theta_amalgamate(
    u: &Universe,
    q_bar: &PCondition,
    q: &PCondition,
    theta: Station,
    f: &BTreeMap<Key, Key>,
    g: &BTreeMap<ModelSet, ModelSet>,
) -> Result<PCondition, QuotientError> {
    require_sigma(u, theta)?;
    ensure_valid(u, q)?;
    ensure_valid(u, q_bar)?;
    if !is_beta_closed(&q.a, theta) {
        return Err(QuotientError::NotThetaClosed);
    }
    if !sk_contains(Hull::Below(theta), q_bar) || q_bar.tree() != q.tree() {
        return Err(QuotientError::NotInPTheta);
    }
    if !is_bijection(f, &q.dom(), &q_bar.dom()) || !is_bijection(g, &q.a, &q_bar.a) {
        return Err(QuotientError::Uncertified("maps are not bijections".into()));
    }
    if f.iter().any(|(k, v)| k.below_station(theta) && k != v) {
        return Err(QuotientError::Cross(CrossClause::FixesLowKeys));
    }
    if g.iter().any(|(m, v)| sk_contains(Hull::Below(theta), m) && m != v) {
        return Err(QuotientError::Cross(CrossClause::FixesLowModels));
    }
    if f.iter().any(|(k, v)| q.base.w_of(k) != q_bar.base.w_of(v)) {
        return Err(QuotientError::Cross(CrossClause::SameSubtrees));
    }
    if g.iter().any(|(m, v)| !trace_fits(m, v, theta)) {
        return Err(QuotientError::Cross(CrossClause::TraceAndCut));
    }
    if f.iter().any(|(k, fk)| g.iter().any(|(m, gm)| m.contains_kappa(k) != gm.contains_kappa(fk))) {
        return Err(QuotientError::Cross(CrossClause::Membership));
    }
    let r = oplus_p(&[q_bar, q]);
    certify_below(u, &r, &[q_bar, q]).map_err(uncertified)?;
    Ok(r)
}

/// A certified member of D_θ below the input, with the mirror used when the
/// closed input was not already a member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Densified {
    pub r: PCondition,
    pub witness: ThetaWitness,
    pub mirror: Option<PCondition>,
    pub stations: BTreeMap<Station, Station>,
    pub candidates_tried: usize,
    /// Candidates meeting every formula clause that still failed to
    /// amalgamate into a D_θ member. Nonzero is a fidelity finding.
    pub rejected_after_formula: usize,
}

/// Station maps for the mirror: uniform translations first (nearest
/// first), then strictly increasing attribute-preserving maps into unused
/// stations below θ.
fn mirror_maps(
    u: &Universe,
    theta: Station,
    fixed: &BTreeSet<Station>,
    movers: &BTreeSet<Station>,
    limit: usize,
) -> Vec<BTreeMap<Station, Station>> {
    let mut out: Vec<BTreeMap<Station, Station>> = Vec::new();
    if let (Some(&lo), Some(&hi)) = (movers.first(), movers.last()) {
        for d in (hi + 1 - theta)..=lo {
            let map: BTreeMap<Station, Station> = movers.iter().map(|&s| (s, s - d)).collect();
            if map.iter().all(|(&s, &t)| t < theta && !fixed.contains(&t) && u.attrs(s) == u.attrs(t)) {
                out.push(map);
            }
        }
    }
    let targets: BTreeSet<Station> = (0..theta).filter(|s| !fixed.contains(s)).collect();
    for m in crate::side::station_maps(u, fixed, movers, &targets, limit) {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out.truncate(limit);
    out
}

/// A clause of the mirror formula checked for each candidate image below θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MirrorClause {
    SameSubtrees,
    TraceFits,
    Membership,
    Commitments,
    ModelInclusion,
    /// Read for the image models below `N` only.
    CutsBelowModel,
}

/// The mirror clauses failing for a candidate built by a station map. The
/// remaining requirements hold by construction or are checked by the caller.
pub fn mirror_failures(
    q: &PCondition,
    q_bar: &PCondition,
    theta: Station,
    f: &BTreeMap<Key, Key>,
    g: &BTreeMap<ModelSet, ModelSet>,
    n: Option<&ModelSet>,
) -> Vec<MirrorClause> {
    let mut out = Vec::new();
    if f.iter().any(|(k, v)| q.base.w_of(k) != q_bar.base.w_of(v)) {
        out.push(MirrorClause::SameSubtrees);
    }
    if g.iter().any(|(m, v)| !trace_fits(m, v, theta)) {
        out.push(MirrorClause::TraceFits);
    }
    if f.iter().any(|(k, fk)| g.iter().any(|(m, gm)| m.contains_kappa(k) != gm.contains_kappa(fk))) {
        out.push(MirrorClause::Membership);
    }
    let dom: Vec<&Key> = f.keys().collect();
    let commits = dom.iter().all(|a| {
        dom.iter().all(|b| {
            a == b || q.base.d.contains(&commit((*a).clone(), (*b).clone())) == q_bar.base.d.contains(&commit(f[*a].clone(), f[*b].clone()))
        })
    });
    if !commits {
        out.push(MirrorClause::Commitments);
    }
    if g.iter().any(|(k, gk)| g.iter().any(|(m, gm)| k.is_subset(m) != gk.is_subset(gm))) {
        out.push(MirrorClause::ModelInclusion);
    }
    if let Some(n) = n {
        let n_low = n.cut(theta);
        if g.values().filter(|k| model_less(k, n)).any(|k| !q_bar.a.contains(&k.intersect(&n_low))) {
            out.push(MirrorClause::CutsBelowModel);
        }
    }
    out
}

/// Extends `q` into D_θ: close under `N` (when given) and θ, then mirror the
/// high part below θ and amalgamate. The result is N-closed when `N` is
/// given.
pub fn dtheta_densify(
    u: &Universe,
    q: &PCondition,
    theta: Station,
    n: Option<&ModelSet>,
    budget: usize,
) -> Result<Densified, QuotientError> {
    require_sigma(u, theta)?;
    ensure_valid(u, q)?;
    let mut a = q.a.clone();
    if let Some(n) = n {
        if !a.contains(n) {
            return Err(QuotientError::ModelNotInSide);
        }
        a = close_n(u, &a, n)?;
    }
    a = close_beta(u, &a, theta)?;
    let q1 = PCondition { base: q.base.clone(), a };
    certify_below(u, &q1, &[q]).map_err(uncertified)?;
    let n_closed = |p: &PCondition| n.map_or(true, |n| is_n_closed(&p.a, n));
    if !n_closed(&q1) {
        return Err(QuotientError::Uncertified("θ-closure lost N-closure".into()));
    }
    if let DThetaOutcome::Member(w) = dtheta_check(&q1, theta, budget) {
        return Ok(Densified {
            r: q1,
            witness: w,
            mirror: None,
            stations: BTreeMap::new(),
            candidates_tried: 0,
            rejected_after_formula: 0,
        });
    }

    let mut used: BTreeSet<Station> = BTreeSet::new();
    for k in q1.dom() {
        if let KappaOrdinal::Station(s) = k {
            used.insert(s);
        }
    }
    for m in &q1.a {
        used.extend(m.stations.iter().copied());
    }
    let fixed: BTreeSet<Station> = used.range(..theta).copied().collect();
    let movers: BTreeSet<Station> = used.range(theta..).copied().collect();
    let mut tried = 0usize;
    let mut rejected = 0usize;
    for sigma in mirror_maps(u, theta, &fixed, &movers, budget) {
        tried += 1;
        let st = |s: Station| sigma.get(&s).copied().unwrap_or(s);
        let key = |k: &Key| match k {
            KappaOrdinal::Station(s) => KappaOrdinal::Station(st(*s)),
            other => other.clone(),
        };
        let f: BTreeMap<Key, Key> = q1.dom().iter().map(|k| (k.clone(), key(k))).collect();
        let g: BTreeMap<ModelSet, ModelSet> = q1
            .a
            .iter()
            .map(|m| {
                let img = if sk_contains(Hull::Below(theta), m) {
                    m.clone()
                } else {
                    ModelSet { delta: m.delta.clone(), stations: m.stations.iter().map(|&s| st(s)).collect() }
                };
                (m.clone(), img)
            })
            .collect();
        let q_bar = PCondition {
            base: PStarCondition {
                tree: q1.base.tree.clone(),
                w: q1.base.w.iter().map(|(k, v)| (f[k].clone(), v.clone())).collect(),
                d: q1.base.d.iter().map(|(a, b)| commit(f[a].clone(), f[b].clone())).collect(),
            },
            a: g.values().cloned().collect(),
        };
        let injective = q_bar.base.w.len() == q1.base.w.len() && q_bar.a.len() == q1.a.len();
        if !injective || !in_p_theta(u, &q_bar, theta) {
            continue;
        }
        if !mirror_failures(&q1, &q_bar, theta, &f, &g, n).is_empty() {
            continue;
        }
        let Ok(r) = cross_theta_amalgamate(u, &q_bar, &q1, theta, &f, &g) else {
            rejected += 1;
            continue;
        };
        let w0 = ThetaWitness {
            f: f.iter().filter(|(k, _)| !k.below_station(theta)).map(|(k, v)| (k.clone(), v.clone())).collect(),
            g: g.iter().filter(|(m, _)| !sk_contains(Hull::Below(theta), *m)).map(|(m, v)| (m.clone(), v.clone())).collect(),
        };
        if !is_beta_closed(&r.a, theta) || !witness_failures(&r, theta, &w0).is_empty() || !n_closed(&r) {
            rejected += 1;
            continue;
        }
        certify_below(u, &r, &[q]).map_err(uncertified)?;
        return Ok(Densified {
            r,
            witness: w0,
            mirror: Some(q_bar),
            stations: sigma,
            candidates_tried: tried,
            rejected_after_formula: rejected,
        });
    }
    Err(QuotientError::Exhausted(tried))
}

/// The fingerprint together with the restrictions of the least witness.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaFingerprint {
    pub base: Fingerprint,
    pub f_in: BTreeMap<Key, Key>,
    pub g_in: BTreeMap<ModelSet, ModelSet>,
}

pub fn fingerprint_theta(
    p: &PCondition,
    n: &ModelSet,
    theta: Station,
    budget: usize,
) -> Result<ThetaFingerprint, QuotientError> {
    in_fingerprint_domain(p, n)?;
    let w = match dtheta_check(p, theta, budget) {
        DThetaOutcome::Member(w) => w,
        DThetaOutcome::Exhausted(k) => return Err(QuotientError::Exhausted(k)),
        _ => return Err(QuotientError::NotInD),
    };
    Ok(ThetaFingerprint {
        base: fingerprint_w(p, n)?,
        f_in: w.f.into_iter().filter(|(k, _)| n.contains_kappa(k)).collect(),
        g_in: w.g.into_iter().filter(|(m, _)| sk_contains(Hull::Model(n), m)).collect(),
    })
}

/// A membership-transfer conclusion for θ-matched pairs with `p ∈ Sk(N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transfer {
    /// High models of `p` pull back the images of `q`'s indices.
    IntoP,
    /// High models of `q` below `N` pull back the images of `p`'s indices.
    IntoQ,
}

/// The failing membership-transfer conclusions.
pub fn transfer_failures(
    p: &PCondition,
    wp: &ThetaWitness,
    q: &PCondition,
    n: &ModelSet,
    wq: &ThetaWitness,
    theta: Station,
) -> Vec<Transfer> {
    let mut out = Vec::new();
    let high_p: Vec<&ModelSet> = p.a.iter().filter(|k| !sk_contains(Hull::Below(theta), *k)).collect();
    let high_q: Vec<&ModelSet> = q.a.iter().filter(|k| !sk_contains(Hull::Below(theta), *k)).collect();
    let one = wq.f.iter().all(|(eta, f_eta)| high_p.iter().all(|k| !k.contains_kappa(eta) || wp.g[*k].contains_kappa(f_eta)));
    if !one {
        out.push(Transfer::IntoP);
    }
    let two = wp.f.iter().all(|(eta, f_eta)| {
        high_q.iter().filter(|k| model_less(k, n)).all(|k| !k.contains_kappa(eta) || wq.g[*k].contains_kappa(f_eta))
    });
    if !two {
        out.push(Transfer::IntoQ);
    }
    out
}

/// How E_θ membership was established.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EThetaHow {
    Direct(ThetaWitness),
    /// Indices into the supplied pool, in amalgamation order.
    Decomposed(Vec<usize>),
    NotFound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EThetaReport {
    pub member: bool,
    pub how: EThetaHow,
}

fn is_component(part: &PCondition, p: &PCondition) -> bool {
    part.a.is_subset(&p.a)
        && part.base.d.is_subset(&p.base.d)
        && part.base.w.iter().all(|(k, v)| p.base.w.get(k) == Some(v))
        && part.tree().nodes().all(|x| p.tree().contains(x))
}

/// Membership in E_θ. Besides direct D_θ membership, decompositions are
/// looked for among `pool` (recorded provenance): entries are bucketed by
/// θ-fingerprint and nested chains of length ≥ 2 are tried in order.
pub fn etheta_check(
    u: &Universe,
    p: &PCondition,
    theta: Station,
    pool: &[(PCondition, ModelSet)],
    budget: usize,
) -> EThetaReport {
    let none = EThetaReport { member: false, how: EThetaHow::NotFound };
    if !u.is_sigma(theta) || !is_valid_p(u, p) {
        return none;
    }
    if !p.a.is_empty() {
        if let DThetaOutcome::Member(w) = dtheta_check(p, theta, budget) {
            return EThetaReport { member: true, how: EThetaHow::Direct(w) };
        }
    }
    let mut buckets: BTreeMap<ThetaFingerprint, Vec<usize>> = BTreeMap::new();
    for (i, (part, n)) in pool.iter().enumerate() {
        if !is_component(part, p) || !is_valid_p(u, part) {
            continue;
        }
        if let Ok(fp) = fingerprint_theta(part, n, theta, budget) {
            buckets.entry(fp).or_default().push(i);
        }
    }
    let mut steps = 0usize;
    for idx in buckets.values() {
        let mut idx = idx.clone();
        idx.sort_by(|&i, &j| pool[i].1.delta.cmp(&pool[j].1.delta).then(i.cmp(&j)));
        let mut chain = Vec::new();
        if let Some(found) = nested_cover(pool, &idx, 0, p, &mut chain, &mut steps, budget) {
            return EThetaReport { member: true, how: EThetaHow::Decomposed(found) };
        }
    }
    none
}

fn nested_cover(
    pool: &[(PCondition, ModelSet)],
    idx: &[usize],
    start: usize,
    p: &PCondition,
    chain: &mut Vec<usize>,
    steps: &mut usize,
    budget: usize,
) -> Option<Vec<usize>> {
    if chain.len() >= 2 {
        let parts: Vec<&PCondition> = chain.iter().map(|&i| &pool[i].0).collect();
        if &oplus_p(&parts) == p {
            return Some(chain.clone());
        }
    }
    for pos in start..idx.len() {
        *steps += 1;
        if *steps > budget {
            return None;
        }
        let j = idx[pos];
        if chain.iter().all(|&i| sk_contains(Hull::Model(&pool[j].1), &pool[i].0)) {
            chain.push(j);
            if let Some(found) = nested_cover(pool, idx, pos + 1, p, chain, steps, budget) {
                return Some(found);
            }
            chain.pop();
        }
    }
    None
}

/// `(T_s, Y, D_s ∪ D_p, A_s ∪ A_p)`: `Y` keeps `W_s` on its domain and takes
/// downward closures in `T_s` of the other values of `W_p`. Not checked.
pub fn y_construction(p: &PCondition, s: &PCondition) -> PCondition {
    let mut w = s.base.w.clone();
    for (k, v) in &p.base.w {
        if !w.contains_key(k) {
            w.insert(k.clone(), s.tree().downward_closure(v));
        }
    }
    PCondition {
        base: PStarCondition {
            tree: s.base.tree.clone(),
            w,
            d: s.base.d.union(&p.base.d).cloned().collect(),
        },
        a: s.a.union(&p.a).cloned().collect(),
    }
}

/// The common extension of `p ∈ E_θ` and `s ≤ π_θ(p)` in `P_θ`.
/// `parts` is the provenance used when `p` is not itself in D_θ.
pub fn quotient_amalgamate(
    u: &Universe,
    p: &PCondition,
    s: &PCondition,
    theta: Station,
    parts: &[(PCondition, ModelSet)],
    budget: usize,
) -> Result<PCondition, QuotientError> {
    require_sigma(u, theta)?;
    ensure_valid(u, p)?;
    if !in_p_theta(u, s, theta) {
        return Err(QuotientError::NotInPTheta);
    }
    if !etheta_check(u, p, theta, parts, budget).member {
        return Err(QuotientError::NotInE);
    }
    if leq_p_failure(s, &project_theta(u, p, theta)?).is_some() {
        return Err(QuotientError::NotBelowProjection);
    }
    let r = y_construction(p, s);
    certify_below(u, &r, &[p, s]).map_err(uncertified)?;
    Ok(r)
}

/// A finite descending chain in `P_θ`; the filter is the upward closure of
/// its last element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterApprox {
    pub theta: Station,
    pub chain: Vec<PCondition>,
}

impl FilterApprox {
    pub fn from_generator(u: &Universe, theta: Station, t: PCondition) -> Result<Self, QuotientError> {
        require_sigma(u, theta)?;
        if !in_p_theta(u, &t, theta) {
            return Err(QuotientError::NotInPTheta);
        }
        Ok(FilterApprox { theta, chain: vec![t] })
    }

    pub fn generator(&self) -> &PCondition {
        self.chain.last().expect("chains are never empty")
    }

    /// The tree of the filter, i.e. the tree of the generator.
    pub fn tree_h(&self) -> &crate::tree::Tree {
        self.generator().tree()
    }

    /// Membership in the filter: the generator extends `s`.
    pub fn contains(&self, s: &PCondition) -> bool {
        leq_p_failure(self.generator(), s).is_none()
    }

    /// Models whose θ-trace is a side model of the filter.
    pub fn in_pool(&self, n: &ModelSet) -> bool {
        self.generator().a.contains(&n.cut(self.theta))
    }

    pub fn extend(&mut self, u: &Universe, t: PCondition) -> Result<(), QuotientError> {
        if !in_p_theta(u, &t, self.theta) {
            return Err(QuotientError::NotInPTheta);
        }
        if leq_p_failure(&t, self.generator()).is_some() {
            return Err(QuotientError::NotDescending(self.chain.len()));
        }
        self.chain.push(t);
        Ok(())
    }

    /// Every chain element is valid, in `P_θ`, and below its predecessor.
    pub fn check(&self, u: &Universe) -> Result<(), QuotientError> {
        for (i, c) in self.chain.iter().enumerate() {
            if !in_p_theta(u, c, self.theta) {
                return Err(QuotientError::NotInPTheta);
            }
            if i > 0 && leq_p_failure(c, &self.chain[i - 1]).is_some() {
                return Err(QuotientError::NotDescending(i));
            }
        }
        Ok(())
    }
}

/// The tree-forcing simulator restricted to indices below θ, interleaved
/// with model-addition moves on top of the current condition.
#[derive(Clone, Debug, PartialEq)]
pub struct PThetaConfig {
    pub sim: SimConfig,
    pub model_moves: usize,
    /// Chance that a station below θ joins a new model beyond those forced.
    pub station_density: f64,
}

pub fn simulate_ptheta_filter(u: &Universe, theta: Station, cfg: &PThetaConfig) -> Result<FilterApprox, QuotientError> {
    require_sigma(u, theta)?;
    if cfg.sim.indices.iter().any(|k| !k.below_station(theta)) {
        return Err(QuotientError::NotInPTheta);
    }
    let g = simulate_generic_pprime(&cfg.sim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed ^ 0x7e7a);
    let len = g.chain.len();
    let slots: BTreeSet<usize> = (1..=cfg.model_moves).map(|j| j * len / (cfg.model_moves + 1)).collect();
    let mut a = BTreeSet::new();
    let mut chain: Vec<PCondition> = Vec::new();
    let mut added = 0u64;
    for (i, base) in g.chain.iter().enumerate() {
        let cur = PCondition { base: base.clone(), a: a.clone() };
        if chain.last() != Some(&cur) {
            chain.push(cur.clone());
        }
        if slots.contains(&i) {
            let mut stations: BTreeSet<Station> = cur.atoms().stations;
            let below: Vec<Station> = (0..theta).collect();
            for &s in &below {
                if rng.gen_bool(cfg.station_density) {
                    stations.insert(s);
                }
            }
            if stations.is_empty() {
                stations.insert(*below.choose(&mut rng).expect("θ > 0"));
            }
            u.close_stations(&mut stations);
            let top = cur.a.iter().map(|m| m.delta.omega_coefficient()).max().unwrap_or(0).max(added);
            let n = ModelSet { delta: Ordinal::ch_point(top + 1), stations };
            if let Ok(next) = add_model(u, &cur, &n) {
                added = top + 1;
                a = next.a.clone();
                chain.push(next);
            }
        }
    }
    let h = FilterApprox { theta, chain };
    h.check(u)?;
    Ok(h)
}


/// The surrogate quotient test for one condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipReport {
    pub member: bool,
    /// A common extension of `p` and the generator, when found.
    pub witness: Option<PCondition>,
    pub strategy: Option<&'static str>,
    /// The generator extends `π_θ(p)`.
    pub projection_in_filter: bool,
    /// Membership implies the projection lies in the filter.
    pub projection_consistent: bool,
}

/// Bounded search for a common extension of `p` and the generator.
pub fn quotient_membership(u: &Universe, p: &PCondition, h: &FilterApprox) -> MembershipReport {
    let t = h.generator();
    let projection_in_filter =
        project_theta(u, p, h.theta).map(|pi| leq_p_failure(t, &pi).is_none()).unwrap_or(false);
    let mut found = None;
    if is_valid_p(u, p) {
        let candidates: [(&'static str, PCondition); 4] = [
            ("p extends the generator", p.clone()),
            ("generator extends p", t.clone()),
            ("componentwise union", oplus_p(&[t, p])),
            ("closure into the generator tree", y_construction(p, t)),
        ];
        for (name, r) in candidates {
            if certify_below(u, &r, &[p, t]).is_ok() {
                found = Some((name, r));
                break;
            }
        }
    }
    let member = found.is_some();
    let (strategy, witness) = match found {
        Some((s, r)) => (Some(s), Some(r)),
        None => (None, None),
    };
    MembershipReport {
        member,
        witness,
        strategy,
        projection_in_filter,
        projection_consistent: !member || projection_in_filter,
    }
}

/// The extensions built while adding a model inside the quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientAddition {
    pub p_plus_n: PCondition,
    /// The filter element `t ≤ π_θ(p)` used for the construction.
    pub stage: PCondition,
    pub u: PCondition,
    pub v: PCondition,
}

/// Adds `N` to `p` inside the quotient. When the generator does not yet
/// extend `π_θ(p)`, the filter is extended by the projection of a common
/// extension first.
pub fn quotient_add_model(
    u: &Universe,
    p: &PCondition,
    n: &ModelSet,
    h: &mut FilterApprox,
    budget: usize,
) -> Result<QuotientAddition, QuotientError> {
    let theta = h.theta;
    ensure_valid(u, p)?;
    if dtheta_check(p, theta, budget).witness().is_none() {
        return Err(QuotientError::NotInD);
    }
    if p.a.is_empty() {
        return Err(QuotientError::EmptySide);
    }
    let report = quotient_membership(u, p, h);
    let Some(common) = report.witness else {
        return Err(QuotientError::NotInQuotient);
    };
    if !h.in_pool(n) {
        return Err(QuotientError::NotInPool);
    }
    if !n.stations.contains(&theta) {
        return Err(QuotientError::ThetaOutsideModel);
    }
    let p_plus_n = add_model(u, p, n).map_err(|e| match e {
        SideError::NotInHull => QuotientError::Side(SideError::NotInHull),
        other => uncertified(other),
    })?;
    let pi = project_theta(u, p, theta)?;
    if leq_p_failure(h.generator(), &pi).is_some() {
        let next = project_theta(u, &common, theta)?;
        h.extend(u, next)?;
    }
    let t = h.generator().clone();
    let u_cond = quotient_amalgamate(u, p, &t, theta, &[], budget)?;
    let v = u_cond.plus(n);
    certify_below(u, &v, &[&t, &p_plus_n]).map_err(uncertified)?;
    Ok(QuotientAddition { p_plus_n, stage: t, u: u_cond, v })
}

/// An amalgam of representatives drawn from θ-matched pools.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiAmalgam {
    pub q: PCondition,
    /// Per row, the entry index chosen from each pool.
    pub rows: Vec<Vec<usize>>,
    /// Row used for pool `i`.
    pub chosen_rows: Vec<usize>,
    pub certificate: Option<FingerprintCertificate>,
    pub membership: MembershipReport,
}

/// Picks nested rows from the pools, finds rows whose private nodes are
/// pairwise incomparable in `T_H`, amalgamates one representative per pool
/// and checks the result lies in the quotient.
pub fn quotient_multi_amalgamate(
    u: &Universe,
    pools: &[Vec<(PCondition, ModelSet)>],
    h: &FilterApprox,
    max_chain: usize,
    budget: usize,
) -> Result<MultiAmalgam, QuotientError> {
    let theta = h.theta;
    let d = pools.len();
    if d == 0 || pools.iter().any(|p| p.is_empty()) {
        return Err(QuotientError::EmptyPool);
    }
    let mut reference: Option<ThetaFingerprint> = None;
    for pool in pools {
        for (p, n) in pool {
            ensure_valid(u, p)?;
            let fp = fingerprint_theta(p, n, theta, budget)?;
            match &reference {
                None => reference = Some(fp),
                Some(r) if r != &fp => return Err(QuotientError::FingerprintMismatch),
                _ => {}
            }
            if !quotient_membership(u, p, h).member {
                return Err(QuotientError::NotInQuotient);
            }
        }
    }
    if d == 1 {
        let q = pools[0][0].0.clone();
        let membership = quotient_membership(u, &q, h);
        return Ok(MultiAmalgam { q, rows: vec![vec![0]], chosen_rows: vec![0], certificate: None, membership });
    }

    let order: Vec<Vec<usize>> = pools
        .iter()
        .map(|pool| {
            let mut ix: Vec<usize> = (0..pool.len()).collect();
            ix.sort_by(|&a, &b| pool[a].1.delta.cmp(&pool[b].1.delta).then(a.cmp(&b)));
            ix
        })
        .collect();
    let mut cursor = vec![0usize; d];
    let mut rows: Vec<Vec<usize>> = Vec::new();
    'rows: loop {
        let mut row = Vec::with_capacity(d);
        for i in 0..d {
            let pick = order[i][cursor[i]..].iter().position(|&e| {
                rows.iter().all(|r| (0..d).all(|j| sk_contains(Hull::Model(&pools[i][e].1), &pools[j][r[j]].0)))
            });
            let Some(off) = pick else { break 'rows };
            row.push(order[i][cursor[i] + off]);
            cursor[i] += off + 1;
        }
        rows.push(row);
        if cursor.iter().zip(&order).any(|(c, o)| *c >= o.len()) {
            break;
        }
    }
    if rows.len() < d {
        return Err(QuotientError::TooFewRows { rows: rows.len(), needed: d });
    }
    let blocks: Vec<NodeSet> = rows
        .iter()
        .map(|r| {
            (0..d)
                .flat_map(|i| {
                    let (p, n) = &pools[i][r[i]];
                    p.tree().nodes().filter(|x| !n.contains_countable(x)).cloned().collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let chosen_rows = match find_incomparable_family(h.tree_h(), &blocks, d, max_chain)? {
        FamilySearch::Found(ix) => ix,
        FamilySearch::NotFound => return Err(QuotientError::NoIncomparableFamily),
    };
    let parts: Vec<(PCondition, ModelSet)> =
        (0..d).map(|i| pools[i][rows[chosen_rows[i]][i]].clone()).collect();
    let (q, cert) = amalgamate_fingerprint(u, &parts).map_err(uncertified)?;
    let membership = quotient_membership(u, &q, h);
    if !membership.member {
        return Err(QuotientError::Uncertified("amalgam of incomparable parts left the quotient".into()));
    }
    Ok(MultiAmalgam { q, rows, chosen_rows, certificate: Some(cert), membership })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{node, node_above, Tree};
    use crate::universe::gap_universe;

    const THETA: Station = 12;

    fn key(n: u64) -> Key {
        KappaOrdinal::nat(n)
    }

    fn st(s: Station) -> Key {
        KappaOrdinal::Station(s)
    }

    fn model(c: u64, st: &[Station]) -> ModelSet {
        ModelSet::new(Ordinal::ch_point(c), st.iter().copied())
    }

    fn set(xs: &[Ordinal]) -> NodeSet {
        xs.iter().cloned().collect()
    }

    fn low() -> Vec<Station> {
        vec![0, 1, 3, 5, 6]
    }

    /// One high key (station 13) in one high model; nothing below θ shares
    /// its subtree, so membership in D_θ needs a mirror.
    fn high_condition() -> PCondition {
        let t = Tree::chain([Ordinal::zero(), node(1, 0)]);
        let base = PStarCondition {
            tree: t,
            w: [(key(1), set(&[Ordinal::zero()])), (st(13), set(&[Ordinal::zero(), node(1, 0)]))]
                .into_iter()
                .collect(),
            d: BTreeSet::new(),
        };
        let mut k = low();
        k.push(13);
        PCondition::new(base, [model(1, &k)].into_iter().collect())
    }

    /// A copy in `Sk(θ)` with a private node and key in block `c`.
    fn copy(c: u64) -> (PCondition, ModelSet) {
        let n = model(c, &[0]);
        let private = node_above(c, 1, 0);
        let t = Tree::from_pairs(
            [Ordinal::zero(), node(1, 0), private.clone()],
            [(Ordinal::zero(), node(1, 0)), (Ordinal::zero(), private.clone()), (node(1, 0), private.clone())],
        );
        let pk = KappaOrdinal::Countable(node_above(c, 0, 5));
        let base = PStarCondition {
            tree: t,
            w: [
                (key(1), set(&[Ordinal::zero(), node(1, 0)])),
                (pk.clone(), set(&[Ordinal::zero(), node(1, 0), private])),
            ]
            .into_iter()
            .collect(),
            d: [commit(key(1), pk)].into_iter().collect(),
        };
        (PCondition::new(base, [n.clone()].into_iter().collect()), n)
    }

    #[test]
    fn projection_truncates_and_is_weaker() {
        let u = gap_universe();
        assert_eq!(project_theta(&u, &PCondition::empty(), THETA).unwrap(), PCondition::empty());
        let (p, _) = copy(1);
        assert_eq!(project_theta(&u, &p, THETA).unwrap(), p);
        let q = high_condition();
        let pi = project_theta(&u, &q, THETA).unwrap();
        assert!(in_p_theta(&u, &pi, THETA));
        assert!(!pi.base.w.contains_key(&st(13)) && pi.a.is_empty());
        assert!(leq_p_failure(&q, &pi).is_none());
        assert_eq!(project_theta(&u, &q, 11), Err(QuotientError::NotSigma(11)));
    }

    #[test]
    fn low_condition_has_the_empty_witness() {
        let (p, _) = copy(1);
        assert_eq!(dtheta_check(&p, THETA, 1000), DThetaOutcome::Member(ThetaWitness::default()));
        assert_eq!(dtheta_check(&high_condition(), THETA, 1000), DThetaOutcome::NotThetaClosed);
    }

    #[test]
    fn uncommitted_images_block_the_witness() {
        let x = node(1, 0);
        let y = node(1, 1);
        let t = Tree::from_pairs([Ordinal::zero(), x.clone(), y.clone()], [(Ordinal::zero(), x.clone()), (Ordinal::zero(), y.clone())]);
        let wx = set(&[Ordinal::zero(), x]);
        let wy = set(&[Ordinal::zero(), y]);
        let mut p = PCondition::new(
            PStarCondition {
                tree: t,
                w: [(st(7), wx.clone()), (st(8), wy.clone()), (st(13), wx), (st(14), wy)].into_iter().collect(),
                d: [commit(st(13), st(14))].into_iter().collect(),
            },
            BTreeSet::new(),
        );
        assert!(is_valid_p(&gap_universe(), &p));
        assert_eq!(dtheta_check(&p, THETA, 1000), DThetaOutcome::NoWitness { blocked_by: Some(WitnessClause::HighCommitments) });
        p.base.d.insert(commit(st(7), st(8)));
        let w = dtheta_check(&p, THETA, 1000).witness().cloned().expect("member once committed");
        assert_eq!(w.f, BTreeMap::from([(st(13), st(7)), (st(14), st(8))]));
        assert!(witness_failures(&p, THETA, &w).is_empty());
    }

    #[test]
    fn densify_mirrors_the_high_part() {
        let u = gap_universe();
        let q = high_condition();
        let d = dtheta_densify(&u, &q, THETA, None, 500).unwrap();
        assert!(leq_p_failure(&d.r, &q).is_none() && is_valid_p(&u, &d.r));
        assert_eq!(d.witness.f, BTreeMap::from([(st(13), st(11))]));
        assert_eq!(d.rejected_after_formula, 0);
        assert!(dtheta_check(&d.r, THETA, 1000).witness().is_some());

        let n = q.a.iter().next().unwrap().clone();
        let dn = dtheta_densify(&u, &q, THETA, Some(&n), 500).unwrap();
        assert!(is_n_closed(&dn.r.a, &n));
    }

    #[test]
    fn densify_of_a_low_condition_is_the_closure() {
        let u = gap_universe();
        let (p, _) = copy(1);
        let d = dtheta_densify(&u, &p, THETA, None, 10).unwrap();
        assert_eq!(d.r, p);
        assert!(d.mirror.is_none());
    }

    #[test]
    fn densify_fails_without_room_below_theta() {
        // Station 18 drags in the Λ₀ station 17, which has no image below θ.
        let u = gap_universe();
        let mut q = high_condition();
        let mut k = low();
        k.extend([17, 18]);
        q.a = [model(1, &k)].into_iter().collect();
        q.base.w.remove(&st(13));
        q.base.w.insert(st(18), set(&[Ordinal::zero(), node(1, 0)]));
        assert!(is_valid_p(&u, &q));
        let got = dtheta_densify(&u, &q, THETA, None, 500);
        assert!(matches!(got, Err(QuotientError::Exhausted(_))), "{got:?}");
    }

    #[test]
    fn cross_amalgamation_names_a_broken_trace() {
        let u = gap_universe();
        let q = high_condition();
        let d = dtheta_densify(&u, &q, THETA, None, 500).unwrap();
        let q1 = PCondition { base: q.base.clone(), a: close_beta(&u, &q.a, THETA).unwrap() };
        let mut q_bar = d.mirror.clone().unwrap();
        let f: BTreeMap<Key, Key> = q1.dom().into_iter().map(|k| {
            let v = if k == st(13) { st(11) } else { k.clone() };
            (k, v)
        }).collect();
        let high = q.a.iter().next().unwrap().clone();
        let image = q_bar.a.iter().find(|m| m.stations.contains(&11)).unwrap().clone();
        let g: BTreeMap<ModelSet, ModelSet> =
            q1.a.iter().map(|m| (m.clone(), if *m == high { image.clone() } else { m.clone() })).collect();
        assert_eq!(cross_theta_amalgamate(&u, &q_bar, &q1, THETA, &f, &g).unwrap(), d.r);

        // Lift the image one block: still a condition, but the traces differ.
        let lifted = ModelSet { delta: Ordinal::ch_point(2), stations: image.stations.clone() };
        q_bar.a.remove(&image);
        q_bar.a.insert(lifted.clone());
        assert!(is_valid_p(&u, &q_bar));
        let g2: BTreeMap<ModelSet, ModelSet> =
            g.into_iter().map(|(m, v)| (m, if v == image { lifted.clone() } else { v })).collect();
        assert_eq!(
            cross_theta_amalgamate(&u, &q_bar, &q1, THETA, &f, &g2),
            Err(QuotientError::Cross(CrossClause::TraceAndCut))
        );
    }

    #[test]
    fn theta_fingerprints() {
        let (p, n) = copy(1);
        let fp = fingerprint_theta(&p, &n, THETA, 100).unwrap();
        assert!(fp.f_in.is_empty() && fp.g_in.is_empty());
        let (_, other) = copy(3);
        assert!(matches!(fingerprint_theta(&p, &other, THETA, 100), Err(QuotientError::Side(_))));
        let (q, m) = copy(3);
        assert_eq!(fingerprint_theta(&q, &m, THETA, 100).unwrap(), fp);
    }

    #[test]
    fn e_theta_membership() {
        let u = gap_universe();
        let (p0, n0) = copy(1);
        let (p1, n1) = copy(3);
        assert!(etheta_check(&u, &p0, THETA, &[], 100).member);
        let bare = PCondition::new(p0.base.clone(), BTreeSet::new());
        assert!(!etheta_check(&u, &bare, THETA, &[], 100).member);
        let pool = vec![(p0.clone(), n0.clone()), (p1.clone(), n1.clone())];
        let (q, _) = amalgamate_fingerprint(&u, &pool).unwrap();
        let report = etheta_check(&u, &q, THETA, &pool, 100);
        assert!(report.member);
    }

    #[test]
    fn quotient_amalgam_below_both() {
        let u = gap_universe();
        let (p, _) = copy(1);
        assert_eq!(quotient_amalgamate(&u, &p, &p, THETA, &[], 100).unwrap(), p);

        let r = dtheta_densify(&u, &high_condition(), THETA, None, 500).unwrap().r;
        let mut s = project_theta(&u, &r, THETA).unwrap();
        let x = node(2, 0);
        s.base.tree.attach_above(Some(&node(1, 0)), x.clone()).unwrap();
        s.base.w.get_mut(&st(11)).unwrap().insert(x);
        let amalgam = quotient_amalgamate(&u, &r, &s, THETA, &[], 100).unwrap();
        assert!(leq_p_failure(&amalgam, &r).is_none() && leq_p_failure(&amalgam, &s).is_none());

        assert_eq!(
            quotient_amalgamate(&u, &r, &PCondition::empty(), THETA, &[], 100),
            Err(QuotientError::NotBelowProjection)
        );
    }

    #[test]
    fn filter_simulation() {
        let u = gap_universe();
        let trivial = PThetaConfig { sim: SimConfig::new(vec![key(1)], 0, 1), model_moves: 0, station_density: 0.0 };
        assert_eq!(simulate_ptheta_filter(&u, THETA, &trivial).unwrap().chain.len(), 1);
        let cfg = PThetaConfig {
            sim: SimConfig::new(vec![key(1), key(2), st(2)], 4, 7).commit_all(),
            model_moves: 2,
            station_density: 0.3,
        };
        let h = simulate_ptheta_filter(&u, THETA, &cfg).unwrap();
        h.check(&u).unwrap();
        assert!(h.tree_h().validate().all());
        assert_eq!(h.generator().a.len(), 2);
        assert_eq!(h.generator().base.d.len(), 3);
        let bad = PThetaConfig { sim: SimConfig::new(vec![st(13)], 2, 1), ..cfg };
        assert_eq!(simulate_ptheta_filter(&u, THETA, &bad), Err(QuotientError::NotInPTheta));
    }

    #[test]
    fn membership_and_the_clashing_model() {
        let u = gap_universe();
        let (p, _) = copy(1);
        let h = FilterApprox::from_generator(&u, THETA, p.clone()).unwrap();
        assert!(quotient_membership(&u, &p, &h).member);

        let m = model(1, &[0, 1, 2, 3]);
        let n = model(2, &[0, 1, 3, 5, 6, 13]);
        let only_m = PCondition::new(PStarCondition::empty(), [m].into_iter().collect());
        let only_n = PCondition::new(PStarCondition::empty(), [n].into_iter().collect());
        let h = FilterApprox::from_generator(&u, THETA, only_m).unwrap();
        let report = quotient_membership(&u, &only_n, &h);
        assert!(!report.member && report.projection_in_filter && report.projection_consistent);
    }

    #[test]
    fn model_addition_inside_the_quotient() {
        let u = gap_universe();
        let (p, _) = copy(1);
        let n = model(5, &[0, 1, 3, 5, 6, 12]);
        let t = add_model(&u, &p, &n.cut(THETA)).unwrap();
        let mut h = FilterApprox::from_generator(&u, THETA, t).unwrap();
        let out = quotient_add_model(&u, &p, &n, &mut h, 100).unwrap();
        assert!(out.v.a.contains(&n));
        assert!(leq_p_failure(&out.v, &out.p_plus_n).is_none());

        let stray = model(5, &[0, 1, 3, 5, 6, 8, 12]);
        assert_eq!(quotient_add_model(&u, &p, &stray, &mut h, 100), Err(QuotientError::NotInPool));
    }

    fn four_copies() -> (Vec<Vec<(PCondition, ModelSet)>>, PCondition) {
        let cs: Vec<(PCondition, ModelSet)> = [1, 3, 5, 7].into_iter().map(copy).collect();
        let pools = vec![vec![cs[0].clone(), cs[2].clone()], vec![cs[1].clone(), cs[3].clone()]];
        let all: Vec<&PCondition> = cs.iter().map(|(p, _)| p).collect();
        (pools, oplus_p(&all))
    }

    #[test]
    fn multi_amalgam_of_incomparable_rows() {
        let u = gap_universe();
        let (pools, gen) = four_copies();
        let h = FilterApprox::from_generator(&u, THETA, gen).unwrap();
        let out = quotient_multi_amalgamate(&u, &pools, &h, 16, 1000).unwrap();
        assert_eq!(out.chosen_rows, vec![0, 1]);
        assert!(out.membership.member);
        let single = quotient_multi_amalgamate(&u, &pools[..1], &h, 16, 1000).unwrap();
        assert_eq!(single.q, pools[0][0].0);
    }

    #[test]
    fn multi_amalgam_fails_on_one_chain() {
        let u = gap_universe();
        let (pools, _) = four_copies();
        let chain = Tree::chain(
            [Ordinal::zero(), node(1, 0)].into_iter().chain([1, 3, 5, 7].into_iter().map(|c| node_above(c, 1, 0))),
        );
        let gen = PCondition::new(PStarCondition { tree: chain, ..PStarCondition::empty() }, BTreeSet::new());
        let h = FilterApprox::from_generator(&u, THETA, gen).unwrap();
        assert_eq!(quotient_multi_amalgamate(&u, &pools, &h, 16, 1000), Err(QuotientError::NoIncomparableFamily));
    }
}
