//! The side-condition poset: a tree-poset working part together with an
//! adequate set of models. Also the amalgamation theory over models: the
//! explicit map-family criterion, fingerprints, and the reflection search
//! that stands in for elementarity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ordinal::{is_in_ch, Ordinal, OrdinalError};
use crate::pstar::{
    leq_failure, normalize, oplus_pstar, validate_pstar, Key, LeqClause, PStarCondition,
    PStarError, PStarViolation,
};
use crate::tree::{NodeSet, Tree};
use crate::universe::{
    adequate, close_beta, close_n, is_n_closed, model_less, sk_contains, Atoms, Hull,
    KappaOrdinal, ModelSet, Station, Supported, Universe, UniverseError, Verdict,
};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PCondition {
    pub base: PStarCondition,
    pub a: BTreeSet<ModelSet>,
}

impl PCondition {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(base: PStarCondition, a: BTreeSet<ModelSet>) -> Self {
        PCondition { base, a }
    }

    pub fn tree(&self) -> &Tree {
        &self.base.tree
    }

    pub fn dom(&self) -> BTreeSet<Key> {
        self.base.dom()
    }

    /// The raw quadruple `p + N`, unchecked.
    pub fn plus(&self, n: &ModelSet) -> PCondition {
        let mut out = self.clone();
        out.a.insert(n.clone());
        out
    }
}

impl Supported for PCondition {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.base.collect_atoms(acc);
        self.a.collect_atoms(acc);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PViolation {
    Base(PStarViolation),
    NotAdequate,
    /// `node ∈ W(a) ∩ W(b)` with `a, b ∈ model` but `node ∉ model`.
    NotSeparated { model: ModelSet, keys: (Key, Key), node: Ordinal },
}

/// Which hypothesis of a model amalgamation failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AmalgamClause {
    ModelInSide,
    Closed,
    Hull,
    Bijective,
    Commutative,
    Restriction,
    DomainTrace,
    Membership,
    SubtreeTrace,
    HullTrace,
    SmallModels,
}

impl fmt::Display for AmalgamClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AmalgamClause::ModelInSide => "N_i ∈ A_i",
            AmalgamClause::Closed => "A_i is N_i-closed",
            AmalgamClause::Hull => "p_i ∈ Sk(N_j)",
            AmalgamClause::Bijective => "bijective maps",
            AmalgamClause::Commutative => "commutative maps",
            AmalgamClause::Restriction => "trees agree below the models",
            AmalgamClause::DomainTrace => "maps fix the indices in the models",
            AmalgamClause::Membership => "maps preserve model membership",
            AmalgamClause::SubtreeTrace => "subtrees agree below the models",
            AmalgamClause::HullTrace => "side conditions agree inside the models",
            AmalgamClause::SmallModels => "smaller models are matched",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SideError {
    #[error("invalid condition: {0:?}")]
    Invalid(Vec<PViolation>),
    #[error("condition is not in Sk(N)")]
    NotInHull,
    #[error("model is not in the side condition")]
    NotMember,
    #[error("need at least two parts, got {0}")]
    TooFewParts(usize),
    #[error("hypothesis {clause} fails for parts {i} and {j}")]
    Clause { clause: AmalgamClause, i: usize, j: usize },
    #[error("fingerprints of parts {i} and {j} differ in {field}")]
    FingerprintMismatch { i: usize, j: usize, field: &'static str },
    #[error("(p, N) is outside the fingerprint domain: {0}")]
    OutsideDomain(&'static str),
    #[error("amalgam failed certification: {0}")]
    Uncertified(String),
    #[error("remap: {0}")]
    Remap(String),
    #[error("search exhausted after {0} candidates")]
    Exhausted(usize),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    PStar(#[from] PStarError),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

fn clause(clause: AmalgamClause, i: usize, j: usize) -> SideError {
    SideError::Clause { clause, i, j }
}

/// Every A-separation failure, one per offending key pair.
pub fn separation_failures(w: &BTreeMap<Key, NodeSet>, a: &BTreeSet<ModelSet>) -> Vec<PViolation> {
    let mut out = Vec::new();
    for m in a {
        let keys: Vec<&Key> = w.keys().filter(|k| m.contains_kappa(k)).collect();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                let meet = w[keys[i]].intersection(&w[keys[j]]);
                if let Some(x) = meet.filter(|x| !m.contains_countable(x)).next() {
                    out.push(PViolation::NotSeparated {
                        model: m.clone(),
                        keys: (keys[i].clone(), keys[j].clone()),
                        node: x.clone(),
                    });
                }
            }
        }
    }
    out
}

pub fn validate_p(u: &Universe, c: &PCondition) -> Vec<PViolation> {
    let mut out: Vec<PViolation> = validate_pstar(&c.base).into_iter().map(PViolation::Base).collect();
    if !adequate(u, &c.a) {
        out.push(PViolation::NotAdequate);
    }
    out.extend(separation_failures(&c.base.w, &c.a));
    out
}

pub fn is_valid_p(u: &Universe, c: &PCondition) -> bool {
    validate_p(u, c).is_empty()
}

pub(crate) fn ensure_valid(u: &Universe, c: &PCondition) -> Result<(), SideError> {
    let v = validate_p(u, c);
    if v.is_empty() {
        Ok(())
    } else {
        Err(SideError::Invalid(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PLeqClause {
    Base(LeqClause),
    SideGrowth,
}

/// The first failing order clause for `q ≤ p`; inputs are not validated.
pub fn leq_p_failure(q: &PCondition, p: &PCondition) -> Option<PLeqClause> {
    if let Some(c) = leq_failure(&q.base, &p.base) {
        return Some(PLeqClause::Base(c));
    }
    if !p.a.is_subset(&q.a) {
        return Some(PLeqClause::SideGrowth);
    }
    None
}

pub fn leq_p(u: &Universe, q: &PCondition, p: &PCondition) -> Result<bool, SideError> {
    ensure_valid(u, q)?;
    ensure_valid(u, p)?;
    Ok(leq_p_failure(q, p).is_none())
}

/// Validates `r` and checks `r ≤ p`; used to certify every constructed
/// extension.
pub(crate) fn certify_below(u: &Universe, r: &PCondition, parts: &[&PCondition]) -> Result<(), SideError> {
    let v = validate_p(u, r);
    if !v.is_empty() {
        return Err(SideError::Uncertified(format!("{v:?}")));
    }
    for (i, p) in parts.iter().enumerate() {
        if let Some(c) = leq_p_failure(r, p) {
            return Err(SideError::Uncertified(format!("does not extend part {i}: {c:?}")));
        }
    }
    Ok(())
}

/// Normalizes the working part (downwards closed, minimal splits) and keeps
/// the side condition; the output is re-certified A-separated.
pub fn normalize_p(u: &Universe, p: &PCondition) -> Result<PCondition, SideError> {
    ensure_valid(u, p)?;
    let out = PCondition { base: normalize(&p.base)?, a: p.a.clone() };
    certify_below(u, &out, &[p])?;
    Ok(out)
}

/// `p + N` for `p ∈ Sk(N)`.
pub fn add_model(u: &Universe, p: &PCondition, n: &ModelSet) -> Result<PCondition, SideError> {
    ensure_valid(u, p)?;
    u.validate_model(n)?;
    if !sk_contains(Hull::Model(n), p) {
        return Err(SideError::NotInHull);
    }
    let out = p.plus(n);
    certify_below(u, &out, &[p])?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosureTarget {
    Model(ModelSet),
    Station(Station),
}

/// Replaces `A_p` by its N-closure or β-closure. In the β case every model
/// `N` for which `A_p` was N-closed stays so.
pub fn closure_extend(
    u: &Universe,
    p: &PCondition,
    target: &ClosureTarget,
) -> Result<PCondition, SideError> {
    ensure_valid(u, p)?;
    let a = match target {
        ClosureTarget::Model(n) => close_n(u, &p.a, n)?,
        ClosureTarget::Station(beta) => close_beta(u, &p.a, *beta)?,
    };
    let out = PCondition { base: p.base.clone(), a };
    certify_below(u, &out, &[p])?;
    if let ClosureTarget::Station(_) = target {
        if let Some(n) = p.a.iter().find(|n| is_n_closed(&p.a, n) && !is_n_closed(&out.a, n)) {
            return Err(SideError::Uncertified(format!("β-closure lost closure under {n:?}")));
        }
    }
    Ok(out)
}

/// Componentwise union; not necessarily a condition.
pub fn oplus_p(parts: &[&PCondition]) -> PCondition {
    let bases: Vec<&PStarCondition> = parts.iter().map(|p| &p.base).collect();
    let a = parts.iter().flat_map(|p| p.a.iter().cloned()).collect();
    PCondition { base: oplus_pstar(&bases), a }
}

/// The criterion for `r ≤ p_0 ⊕ … ⊕ p_{d-1}`: if the amalgam is a condition
/// below every part, `r` is below every part, and `r` keeps private nodes of
/// different parts incomparable, then `r` is below the amalgam.
pub fn oplus_leq_criterion(
    u: &Universe,
    parts: &[&PCondition],
    r: &PCondition,
) -> Result<Verdict, SideError> {
    if parts.len() < 2 {
        return Err(SideError::TooFewParts(parts.len()));
    }
    let sum = oplus_p(parts);
    if certify_below(u, &sum, parts).is_err() {
        return Ok(Verdict::HypothesesFail("amalgam is not a condition below the parts".into()));
    }
    if !is_valid_p(u, r) {
        return Ok(Verdict::HypothesesFail("r is not a condition".into()));
    }
    if parts.iter().any(|p| leq_p_failure(r, p).is_some()) {
        return Ok(Verdict::HypothesesFail("r is not below every part".into()));
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let (ti, tj) = (parts[i].tree(), parts[j].tree());
            for x in ti.nodes().filter(|x| !tj.contains(x)) {
                if tj.nodes().filter(|y| !ti.contains(y)).any(|y| r.tree().comparable(x, y)) {
                    return Ok(Verdict::HypothesesFail("r makes private nodes comparable".into()));
                }
            }
        }
    }
    Ok(match leq_p_failure(r, &sum) {
        None => Verdict::Holds,
        Some(c) => Verdict::Counterexample(format!("r is not below the amalgam: {c:?}")),
    })
}

/// `f[(j, i)]` maps `dom(W_j)` onto `dom(W_i)` and `g[(j, i)]` maps `A_j`
/// onto `A_i`, for `i < j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MapFamily {
    pub f: BTreeMap<(usize, usize), BTreeMap<Key, Key>>,
    pub g: BTreeMap<(usize, usize), BTreeMap<ModelSet, ModelSet>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelCertificate {
    pub pairs_checked: usize,
    pub extends_all: bool,
}

pub(crate) fn is_bijection<T: Ord + Clone>(map: &BTreeMap<T, T>, dom: &BTreeSet<T>, cod: &BTreeSet<T>) -> bool {
    let keys: BTreeSet<T> = map.keys().cloned().collect();
    let vals: BTreeSet<T> = map.values().cloned().collect();
    &keys == dom && &vals == cod && vals.len() == map.len()
}

fn commutes<T: Ord>(fji: &BTreeMap<T, T>, fkj: &BTreeMap<T, T>, fki: &BTreeMap<T, T>) -> bool {
    fkj.iter().all(|(x, y)| fji.get(y).is_some_and(|z| fki.get(x) == Some(z)))
}

fn nodes_below(s: &NodeSet, d: &Ordinal) -> NodeSet {
    s.range(..d.clone()).cloned().collect()
}

fn hull_part(a: &BTreeSet<ModelSet>, n: &ModelSet) -> BTreeSet<ModelSet> {
    a.iter().filter(|m| sk_contains(Hull::Model(n), *m)).cloned().collect()
}

pub(crate) fn keys_in(dom: &BTreeSet<Key>, n: &ModelSet) -> BTreeSet<Key> {
    dom.iter().filter(|k| n.contains_kappa(k)).cloned().collect()
}

/// Amalgamation over models with explicit commutative map families. Every
/// hypothesis is checked and a failure names its clause; on success the
/// amalgam is validated and checked below every part.
pub fn amalgamate_models(
    u: &Universe,
    parts: &[PCondition],
    models: &[ModelSet],
    maps: &MapFamily,
) -> Result<(PCondition, ModelCertificate), SideError> {
    let d = parts.len();
    if d < 2 || models.len() != d {
        return Err(SideError::TooFewParts(d.min(models.len())));
    }
    for p in parts {
        ensure_valid(u, p)?;
    }
    for i in 0..d {
        if !parts[i].a.contains(&models[i]) {
            return Err(clause(AmalgamClause::ModelInSide, i, i));
        }
        if !is_n_closed(&parts[i].a, &models[i]) {
            return Err(clause(AmalgamClause::Closed, i, i));
        }
    }
    for j in 0..d {
        for i in 0..j {
            if !sk_contains(Hull::Model(&models[j]), &parts[i]) {
                return Err(clause(AmalgamClause::Hull, i, j));
            }
        }
    }
    let doms: Vec<BTreeSet<Key>> = parts.iter().map(|p| p.dom()).collect();
    let empty_f = BTreeMap::new();
    let empty_g = BTreeMap::new();
    let f = |j: usize, i: usize| maps.f.get(&(j, i)).unwrap_or(&empty_f);
    let g = |j: usize, i: usize| maps.g.get(&(j, i)).unwrap_or(&empty_g);
    for j in 0..d {
        for i in 0..j {
            if !is_bijection(f(j, i), &doms[j], &doms[i]) || !is_bijection(g(j, i), &parts[j].a, &parts[i].a)
            {
                return Err(clause(AmalgamClause::Bijective, i, j));
            }
        }
    }
    for k in 0..d {
        for j in 0..k {
            for i in 0..j {
                if !commutes(f(j, i), f(k, j), f(k, i)) || !commutes(g(j, i), g(k, j), g(k, i)) {
                    return Err(clause(AmalgamClause::Commutative, i, k));
                }
            }
        }
    }
    let mut pairs_checked = 0;
    for j in 0..d {
        for i in 0..j {
            hypotheses_for_pair(parts, models, &doms, f(j, i), g(j, i), i, j)?;
            pairs_checked += 1;
        }
    }
    let refs: Vec<&PCondition> = parts.iter().collect();
    let r = oplus_p(&refs);
    certify_below(u, &r, &refs)?;
    Ok((r, ModelCertificate { pairs_checked, extends_all: true }))
}

fn hypotheses_for_pair(
    parts: &[PCondition],
    models: &[ModelSet],
    doms: &[BTreeSet<Key>],
    f: &BTreeMap<Key, Key>,
    g: &BTreeMap<ModelSet, ModelSet>,
    i: usize,
    j: usize,
) -> Result<(), SideError> {
    let (pi, pj) = (&parts[i], &parts[j]);
    let (ni, nj) = (&models[i], &models[j]);
    let (di, dj) = (&ni.delta, &nj.delta);
    if pi.tree().restrict(di) != pj.tree().restrict(dj) {
        return Err(clause(AmalgamClause::Restriction, i, j));
    }
    let shared = keys_in(&doms[j], nj);
    if keys_in(&doms[i], ni) != shared || shared.iter().any(|k| f.get(k) != Some(k)) {
        return Err(clause(AmalgamClause::DomainTrace, i, j));
    }
    for eta in &doms[j] {
        for m in &pj.a {
            if m.contains_kappa(eta) != g[m].contains_kappa(&f[eta]) {
                return Err(clause(AmalgamClause::Membership, i, j));
            }
        }
    }
    for eta in &doms[j] {
        if nodes_below(pi.base.w_of(&f[eta]), di) != nodes_below(pj.base.w_of(eta), dj) {
            return Err(clause(AmalgamClause::SubtreeTrace, i, j));
        }
    }
    let hull = hull_part(&pj.a, nj);
    if hull_part(&pi.a, ni) != hull || hull.iter().any(|m| g.get(m) != Some(m)) {
        return Err(clause(AmalgamClause::HullTrace, i, j));
    }
    for m in pj.a.iter().filter(|m| &m.delta < dj) {
        let image = &g[m];
        if image.delta != m.delta || !m.intersect(nj).is_subset(image) {
            return Err(clause(AmalgamClause::SmallModels, i, j));
        }
    }
    Ok(())
}

/// The tuple `w(p, N)` with indices taken in the canonical orders: keys by
/// the order of κ, models by the derived order on `ModelSet`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint {
    pub t: Tree,
    pub a: BTreeSet<Key>,
    pub b: BTreeSet<ModelSet>,
    pub m: usize,
    pub n: usize,
    pub w: Vec<NodeSet>,
    pub u0: BTreeSet<usize>,
    pub u1: BTreeSet<usize>,
    pub u2: BTreeSet<usize>,
    pub u3: BTreeSet<(usize, usize)>,
    pub h0: BTreeMap<usize, Ordinal>,
    pub h1: BTreeMap<usize, ModelSet>,
}

impl Fingerprint {
    /// The name of the first component where the two differ.
    pub fn first_difference(&self, other: &Fingerprint) -> Option<&'static str> {
        [
            (self.t == other.t, "t"),
            (self.a == other.a, "a"),
            (self.b == other.b, "b"),
            (self.m == other.m, "m"),
            (self.n == other.n, "n"),
            (self.w == other.w, "w"),
            (self.u0 == other.u0, "U0"),
            (self.u1 == other.u1, "U1"),
            (self.u2 == other.u2, "U2"),
            (self.u3 == other.u3, "U3"),
            (self.h0 == other.h0, "h0"),
            (self.h1 == other.h1, "h1"),
        ]
        .into_iter()
        .find(|(same, _)| !same)
        .map(|(_, name)| name)
    }
}

impl Supported for Fingerprint {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.t.collect_atoms(acc);
        self.a.collect_atoms(acc);
        self.b.collect_atoms(acc);
        self.w.collect_atoms(acc);
        self.h0.collect_atoms(acc);
        self.h1.collect_atoms(acc);
    }
}

pub fn in_fingerprint_domain(p: &PCondition, n: &ModelSet) -> Result<(), SideError> {
    if !p.a.contains(n) {
        return Err(SideError::OutsideDomain("N ∉ A_p"));
    }
    if !is_n_closed(&p.a, n) {
        return Err(SideError::OutsideDomain("A_p is not N-closed"));
    }
    Ok(())
}

pub fn fingerprint_w(p: &PCondition, n: &ModelSet) -> Result<Fingerprint, SideError> {
    in_fingerprint_domain(p, n)?;
    let delta = &n.delta;
    let keys: Vec<&Key> = p.base.w.keys().collect();
    let models: Vec<&ModelSet> = p.a.iter().collect();
    let small = |m: &ModelSet| &m.delta < delta;
    let u2: BTreeSet<usize> = (0..models.len()).filter(|&l| small(models[l])).collect();
    Ok(Fingerprint {
        t: p.tree().restrict(delta),
        a: keys_in(&p.dom(), n),
        b: hull_part(&p.a, n),
        m: keys.len(),
        n: models.len(),
        w: keys.iter().map(|k| nodes_below(&p.base.w[*k], delta)).collect(),
        u0: (0..keys.len()).filter(|&k| n.contains_kappa(keys[k])).collect(),
        u1: (0..models.len()).filter(|&l| sk_contains(Hull::Model(n), models[l])).collect(),
        u3: (0..keys.len())
            .flat_map(|k| (0..models.len()).map(move |l| (k, l)))
            .filter(|&(k, l)| models[l].contains_kappa(keys[k]))
            .collect(),
        h0: u2.iter().map(|&l| (l, models[l].delta.clone())).collect(),
        h1: u2.iter().map(|&l| (l, models[l].intersect(n))).collect(),
        u2,
    })
}

/// The three Δ-system roots shared by a fingerprint-matched family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FingerprintCertificate {
    pub model: ModelCertificate,
    pub tree_root: NodeSet,
    pub dom_root: BTreeSet<Key>,
    pub side_root: BTreeSet<ModelSet>,
}

fn is_delta_system<T: Ord + Clone>(sets: &[BTreeSet<T>], root: &BTreeSet<T>) -> bool {
    (0..sets.len()).all(|i| {
        (i + 1..sets.len()).all(|j| &sets[i].intersection(&sets[j]).cloned().collect::<BTreeSet<T>>() == root)
    })
}

/// Amalgamates pairs `(p_i, N_i)` with equal fingerprints and
/// `p_i ∈ Sk(N_j)` for `i < j`. The map families pair up the canonical
/// enumerations; the Δ-system structure of trees, domains and side
/// conditions is asserted for every choice of reference part.
pub fn amalgamate_fingerprint(
    u: &Universe,
    parts: &[(PCondition, ModelSet)],
) -> Result<(PCondition, FingerprintCertificate), SideError> {
    let d = parts.len();
    if d < 2 {
        return Err(SideError::TooFewParts(d));
    }
    let fps: Vec<Fingerprint> =
        parts.iter().map(|(p, n)| fingerprint_w(p, n)).collect::<Result<_, _>>()?;
    for j in 1..d {
        if let Some(field) = fps[0].first_difference(&fps[j]) {
            return Err(SideError::FingerprintMismatch { i: 0, j, field });
        }
    }
    for j in 0..d {
        for i in 0..j {
            if !sk_contains(Hull::Model(&parts[j].1), &parts[i].0) {
                return Err(clause(AmalgamClause::Hull, i, j));
            }
        }
    }
    let keys: Vec<Vec<Key>> = parts.iter().map(|(p, _)| p.base.w.keys().cloned().collect()).collect();
    let sides: Vec<Vec<ModelSet>> = parts.iter().map(|(p, _)| p.a.iter().cloned().collect()).collect();
    let mut maps = MapFamily::default();
    for j in 0..d {
        for i in 0..j {
            maps.f.insert((j, i), keys[j].iter().cloned().zip(keys[i].iter().cloned()).collect());
            maps.g.insert((j, i), sides[j].iter().cloned().zip(sides[i].iter().cloned()).collect());
        }
    }
    let conds: Vec<PCondition> = parts.iter().map(|(p, _)| p.clone()).collect();
    let models: Vec<ModelSet> = parts.iter().map(|(_, n)| n.clone()).collect();
    let (r, model) = amalgamate_models(u, &conds, &models, &maps)?;

    let trees: Vec<NodeSet> = conds.iter().map(|p| p.tree().node_set()).collect();
    let doms: Vec<BTreeSet<Key>> = conds.iter().map(|p| p.dom()).collect();
    let side: Vec<BTreeSet<ModelSet>> = conds.iter().map(|p| p.a.clone()).collect();
    let mut roots = None;
    for k in 0..d {
        let tree_root = nodes_below(&trees[k], &models[k].delta);
        let dom_root = keys_in(&doms[k], &models[k]);
        let side_root = hull_part(&side[k], &models[k]);
        if !is_delta_system(&trees, &tree_root) {
            return Err(SideError::Uncertified(format!("trees are not a Δ-system over part {k}")));
        }
        if !is_delta_system(&doms, &dom_root) {
            return Err(SideError::Uncertified(format!("domains are not a Δ-system over part {k}")));
        }
        if !is_delta_system(&side, &side_root) {
            return Err(SideError::Uncertified(format!("side conditions are not a Δ-system over part {k}")));
        }
        roots.get_or_insert((tree_root, dom_root, side_root));
    }
    let (tree_root, dom_root, side_root) = roots.expect("d ≥ 2");
    Ok((r, FingerprintCertificate { model, tree_root, dom_root, side_root }))
}

/// Moves countable ordinals at or above a threshold by whole C_h blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    Up(u64),
    Down(u64),
}

/// A relabelling of atoms: a block shift on countable ordinals and a
/// station map (identity off its domain). Injectivity is the caller's job.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Remap {
    pub shift: Option<(Ordinal, Shift)>,
    pub stations: BTreeMap<Station, Station>,
}

impl Remap {
    pub fn ordinal(&self, x: &Ordinal) -> Result<Ordinal, SideError> {
        match &self.shift {
            Some((from, s)) if x >= from => match *s {
                Shift::Up(k) => Ok(x.shift_up_ch(k)?),
                Shift::Down(k) => x
                    .shift_down_ch(k)
                    .ok_or_else(|| SideError::Remap(format!("cannot shift {x} down by {k} blocks"))),
            },
            _ => Ok(x.clone()),
        }
    }

    pub fn station(&self, s: Station) -> Station {
        self.stations.get(&s).copied().unwrap_or(s)
    }

    pub fn key(&self, k: &Key) -> Result<Key, SideError> {
        Ok(match k {
            KappaOrdinal::Countable(x) => KappaOrdinal::Countable(self.ordinal(x)?),
            KappaOrdinal::Station(s) => KappaOrdinal::Station(self.station(*s)),
        })
    }

    pub fn model(&self, m: &ModelSet) -> Result<ModelSet, SideError> {
        Ok(ModelSet {
            delta: self.ordinal(&m.delta)?,
            stations: m.stations.iter().map(|&s| self.station(s)).collect(),
        })
    }

    pub fn nodes(&self, s: &NodeSet) -> Result<NodeSet, SideError> {
        s.iter().map(|x| self.ordinal(x)).collect()
    }

    pub fn tree(&self, t: &Tree) -> Result<Tree, SideError> {
        let mut out = Tree::new();
        for x in t.nodes() {
            out.insert_raw(self.ordinal(x)?, self.nodes(t.preds_of(x))?);
        }
        Ok(out)
    }

    pub fn pstar(&self, p: &PStarCondition) -> Result<PStarCondition, SideError> {
        let mut w = BTreeMap::new();
        for (k, s) in &p.w {
            w.insert(self.key(k)?, self.nodes(s)?);
        }
        let mut d = BTreeSet::new();
        for (a, b) in &p.d {
            d.insert(crate::pstar::commit(self.key(a)?, self.key(b)?));
        }
        Ok(PStarCondition { tree: self.tree(&p.tree)?, w, d })
    }

    pub fn condition(&self, p: &PCondition) -> Result<PCondition, SideError> {
        Ok(PCondition {
            base: self.pstar(&p.base)?,
            a: p.a.iter().map(|m| self.model(m)).collect::<Result<_, _>>()?,
        })
    }
}

/// A successful reflection: `q̄ ∈ Sk(N)` matching `q` over `N`, and the
/// certified amalgam `q̄ ⊕ q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reflection {
    pub q_bar: PCondition,
    pub n_bar: ModelSet,
    pub remap: Remap,
    pub amalgam: PCondition,
    pub certificate: ModelCertificate,
    pub candidates_tried: usize,
    /// Candidates meeting every formula clause whose amalgamation was still
    /// rejected. Nonzero means a surrogate fidelity finding.
    pub rejected_after_formula: usize,
}

/// A clause of the reflection formula relating `q̄` over `N̄` to `q` over
/// `N`. Membership in the dense set is the caller's predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReflectionClause {
    /// The maps are not bijections between the enumerations.
    Enumerations,
    /// `δ̄` is not a smaller point of C_h.
    LowerModel,
    TreeBelowModel,
    FixesKeysInModel,
    ModelMembership,
    KeysInModel,
    SubtreesBelowModel,
    HullPart,
    FixesHullModels,
    SmallModelTraces,
    ModelOrder,
    SmallModelCuts,
}

/// The reflection clauses that fail for a candidate `q̄` paired with `q`
/// through the given maps.
pub fn reflection_failures(
    q: &PCondition,
    n: &ModelSet,
    q_bar: &PCondition,
    n_bar: &ModelSet,
    key_map: &BTreeMap<Key, Key>,
    model_map: &BTreeMap<ModelSet, ModelSet>,
) -> Vec<ReflectionClause> {
    use ReflectionClause as C;
    let mut out = Vec::new();
    let dom = q.dom();
    let (delta, delta_bar) = (&n.delta, &n_bar.delta);
    let dom_ok = is_bijection(key_map, &dom, &q_bar.dom());
    let side_ok = is_bijection(model_map, &q.a, &q_bar.a) && model_map.get(n) == Some(n_bar);
    if !dom_ok || !side_ok {
        // The remaining clauses are stated through the enumerations.
        return vec![C::Enumerations];
    }
    if !is_in_ch(delta_bar) || delta_bar >= delta {
        out.push(C::LowerModel);
    }
    if q_bar.tree().restrict(delta_bar) != q.tree().restrict(delta) {
        out.push(C::TreeBelowModel);
    }
    if dom.iter().any(|k| n.contains_kappa(k) && &key_map[k] != k) {
        out.push(C::FixesKeysInModel);
    }
    let membership = dom.iter().all(|k| q.a.iter().all(|m| m.contains_kappa(k) == model_map[m].contains_kappa(&key_map[k])));
    if !membership {
        out.push(C::ModelMembership);
    }
    if keys_in(&q_bar.dom(), n_bar) != keys_in(&dom, n) {
        out.push(C::KeysInModel);
    }
    if dom.iter().any(|k| nodes_below(q_bar.base.w_of(&key_map[k]), delta_bar) != nodes_below(q.base.w_of(k), delta)) {
        out.push(C::SubtreesBelowModel);
    }
    if hull_part(&q_bar.a, n_bar) != hull_part(&q.a, n) {
        out.push(C::HullPart);
    }
    if q.a.iter().any(|m| sk_contains(Hull::Model(n), m) && &model_map[m] != m) {
        out.push(C::FixesHullModels);
    }
    let small: Vec<&ModelSet> = q.a.iter().filter(|m| model_less(m, n)).collect();
    if small.iter().any(|m| model_map[*m].delta != m.delta || !m.intersect(n).is_subset(&model_map[*m])) {
        out.push(C::SmallModelTraces);
    }
    if q.a.iter().any(|m| model_less(m, n) != model_less(&model_map[m], n_bar)) {
        out.push(C::ModelOrder);
    }
    if small.iter().any(|m| !q_bar.a.contains(&model_map[*m].intersect(n_bar))) {
        out.push(C::SmallModelCuts);
    }
    out
}

/// Strictly increasing, attribute-preserving maps from `movers` into
/// `targets`, with `fixed` stations kept in place, in lexicographic order of
/// the image tuple. At most `limit` maps are produced.
pub fn station_maps(
    u: &Universe,
    fixed: &BTreeSet<Station>,
    movers: &BTreeSet<Station>,
    targets: &BTreeSet<Station>,
    limit: usize,
) -> Vec<BTreeMap<Station, Station>> {
    let movers: Vec<Station> = movers.iter().copied().collect();
    let mut out = Vec::new();
    let mut cur: Vec<Station> = Vec::new();
    fn monotone(fixed: &BTreeSet<Station>, movers: &[Station], image: &[Station]) -> bool {
        let mut all: Vec<(Station, Station)> = fixed.iter().map(|&s| (s, s)).collect();
        all.extend(movers.iter().copied().zip(image.iter().copied()));
        all.sort();
        all.windows(2).all(|w| w[0].1 < w[1].1)
    }
    fn go(
        u: &Universe,
        fixed: &BTreeSet<Station>,
        movers: &[Station],
        targets: &BTreeSet<Station>,
        limit: usize,
        cur: &mut Vec<Station>,
        out: &mut Vec<BTreeMap<Station, Station>>,
    ) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == movers.len() {
            out.push(movers.iter().copied().zip(cur.iter().copied()).collect());
            return;
        }
        let s = movers[cur.len()];
        let lower = cur.last().map_or(0, |&c| c + 1);
        for &t in targets.range(lower..) {
            if u.attrs(t) != u.attrs(s) {
                continue;
            }
            cur.push(t);
            if monotone(fixed, &movers[..cur.len()], cur) {
                go(u, fixed, movers, targets, limit, cur, out);
            }
            cur.pop();
        }
    }
    go(u, fixed, &movers, targets, limit, &mut cur, &mut out);
    out
}

/// Searches for `q̄ ∈ Sk(N)` that satisfies the reflection formula against
/// `q` and the caller's predicate, then amalgamates `q̄ ⊕ q` over the pair
/// `(N̄, N)`. Candidates copy `q` into `N`: countable atoms at or above
/// `δ_N` move down by whole C_h blocks, and stations of `q` outside `N`
/// move to stations of `N` that only `N` itself uses. The first success in
/// (block, station map) order wins.
pub fn reflect_generic(
    u: &Universe,
    q: &PCondition,
    n: &ModelSet,
    accept: &dyn Fn(&PCondition) -> bool,
    budget: usize,
) -> Result<Reflection, SideError> {
    ensure_valid(u, q)?;
    in_fingerprint_domain(q, n)?;
    let cn = n.delta.omega_coefficient();
    let mut atoms: Vec<Ordinal> = q.tree().node_set().into_iter().collect();
    atoms.extend(q.dom().into_iter().filter_map(|k| match k {
        KappaOrdinal::Countable(x) => Some(x),
        KappaOrdinal::Station(_) => None,
    }));
    atoms.extend(q.a.iter().map(|m| m.delta.clone()));
    let c_fix = atoms.iter().filter(|x| *x < &n.delta).map(|x| x.omega_coefficient()).max().unwrap_or(0);
    let c_max = atoms.iter().map(|x| x.omega_coefficient()).max().unwrap_or(cn).max(cn);
    let lo = (c_fix + 1).max(1);
    // Images of the top block must stay below δ_N.
    let hi = (cn.saturating_sub(1)).min((2 * cn).saturating_sub(c_max + 1));

    let mut used: BTreeSet<Station> = BTreeSet::new();
    for k in q.dom() {
        if let KappaOrdinal::Station(s) = k {
            used.insert(s);
        }
    }
    for m in q.a.iter().filter(|m| *m != n) {
        used.extend(m.stations.iter().copied());
    }
    let fixed: BTreeSet<Station> = used.intersection(&n.stations).copied().collect();
    let movers: BTreeSet<Station> = used.difference(&n.stations).copied().collect();
    let targets: BTreeSet<Station> = n.stations.difference(&fixed).copied().collect();

    let mut tried = 0usize;
    let mut rejected = 0usize;
    for cbar in lo..=hi {
        if hi < lo {
            break;
        }
        for sigma in station_maps(u, &fixed, &movers, &targets, budget.saturating_sub(tried)) {
            tried += 1;
            let remap = Remap { shift: Some((n.delta.clone(), Shift::Down(cn - cbar))), stations: sigma };
            match reflection_candidate(u, q, n, cbar, &remap, accept) {
                Candidate::Skip => {}
                Candidate::Rejected => rejected += 1,
                Candidate::Found(q_bar, n_bar, amalgam, certificate) => {
                    return Ok(Reflection {
                        q_bar,
                        n_bar,
                        remap,
                        amalgam,
                        certificate,
                        candidates_tried: tried,
                        rejected_after_formula: rejected,
                    });
                }
            }
            if tried >= budget {
                return Err(SideError::Exhausted(tried));
            }
        }
    }
    Err(SideError::Exhausted(tried))
}

enum Candidate {
    Skip,
    Rejected,
    Found(PCondition, ModelSet, PCondition, ModelCertificate),
}

fn reflection_candidate(
    u: &Universe,
    q: &PCondition,
    n: &ModelSet,
    cbar: u64,
    remap: &Remap,
    accept: &dyn Fn(&PCondition) -> bool,
) -> Candidate {
    let image: BTreeSet<Station> = remap.stations.values().copied().collect();
    let n_bar = ModelSet {
        delta: Ordinal::ch_point(cbar),
        stations: n.stations.difference(&image).copied().collect(),
    };
    let mut key_map = BTreeMap::new();
    for k in q.dom() {
        let Ok(v) = remap.key(&k) else { return Candidate::Skip };
        key_map.insert(k, v);
    }
    let mut model_map = BTreeMap::new();
    for m in &q.a {
        let v = if m == n {
            n_bar.clone()
        } else {
            let Ok(v) = remap.model(m) else { return Candidate::Skip };
            v
        };
        model_map.insert(m.clone(), v);
    }
    let Ok(mut q_bar) = remap.condition(q) else { return Candidate::Skip };
    q_bar.a = model_map.values().cloned().collect();
    if q_bar.a.len() != q.a.len() || q_bar.base.w.len() != q.base.w.len() {
        return Candidate::Skip;
    }
    if !is_valid_p(u, &q_bar) || !sk_contains(Hull::Model(n), &q_bar) || !accept(&q_bar) {
        return Candidate::Skip;
    }
    if !reflection_failures(q, n, &q_bar, &n_bar, &key_map, &model_map).is_empty() {
        return Candidate::Skip;
    }
    let maps = MapFamily {
        f: BTreeMap::from([((1, 0), key_map)]),
        g: BTreeMap::from([((1, 0), model_map)]),
    };
    match amalgamate_models(u, &[q_bar.clone(), q.clone()], &[n_bar.clone(), n.clone()], &maps) {
        Ok((r, cert)) => Candidate::Found(q_bar, n_bar, r, cert),
        Err(_) => Candidate::Rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pstar::commit;
    use crate::tree::{node, node_above};
    use crate::universe::default_universe;

    fn key(n: u64) -> Key {
        KappaOrdinal::nat(n)
    }

    fn model(c: u64, st: &[Station]) -> ModelSet {
        ModelSet::new(Ordinal::ch_point(c), st.iter().copied())
    }

    fn set(xs: &[Ordinal]) -> NodeSet {
        xs.iter().cloned().collect()
    }

    #[test]
    fn empty_is_valid() {
        let u = default_universe();
        assert!(is_valid_p(&u, &PCondition::empty()));
        assert!(leq_p(&u, &PCondition::empty(), &PCondition::empty()).unwrap());
    }

    #[test]
    fn shared_node_outside_model_breaks_separation() {
        let u = default_universe();
        let top = node_above(1, 1, 0);
        let t = Tree::chain([Ordinal::zero(), top.clone()]);
        let both = set(&[Ordinal::zero(), top.clone()]);
        let base = PStarCondition {
            tree: t,
            w: [(key(1), both.clone()), (key(2), both)].into_iter().collect(),
            d: BTreeSet::new(),
        };
        let p = PCondition::new(base, [model(1, &[0])].into_iter().collect());
        let v = validate_p(&u, &p);
        assert!(matches!(v.as_slice(), [PViolation::NotSeparated { node, .. }] if *node == top));
    }

    #[test]
    fn dropping_a_model_is_not_an_extension() {
        let u = default_universe();
        let p = PCondition::new(PStarCondition::empty(), [model(1, &[0])].into_iter().collect());
        assert!(!leq_p(&u, &PCondition::empty(), &p).unwrap());
        assert!(leq_p(&u, &p, &PCondition::empty()).unwrap());
    }

    #[test]
    fn add_model_needs_hull_membership() {
        let u = default_universe();
        let inner = PCondition::new(PStarCondition::empty(), [model(1, &[0])].into_iter().collect());
        assert!(add_model(&u, &inner, &model(2, &[0, 1])).is_ok());
        assert_eq!(add_model(&u, &inner, &model(1, &[0, 1])), Err(SideError::NotInHull));
    }

    #[test]
    fn n_closure_adds_the_trace() {
        let u = default_universe();
        let small = model(1, &[0, 1, 2, 3]);
        let big = model(2, &[0, 1]);
        let p = PCondition::new(PStarCondition::empty(), [small.clone(), big.clone()].into_iter().collect());
        assert!(is_valid_p(&u, &p));
        let q = closure_extend(&u, &p, &ClosureTarget::Model(big.clone())).unwrap();
        assert!(q.a.contains(&small.intersect(&big)));
        assert!(is_n_closed(&q.a, &big));
    }

    #[test]
    fn fingerprint_of_a_bare_model() {
        let n = model(1, &[0]);
        let p = PCondition::new(PStarCondition::empty(), [n.clone()].into_iter().collect());
        let fp = fingerprint_w(&p, &n).unwrap();
        assert_eq!((fp.m, fp.n), (0, 1));
        assert!(fp.b.is_empty() && fp.u1.is_empty() && fp.u2.is_empty() && fp.t.is_empty());
        assert!(sk_contains(Hull::Model(&n), &fp));
    }

    #[test]
    fn fingerprint_sees_small_keys() {
        let n = model(1, &[0]);
        let t = Tree::chain([Ordinal::zero(), node(1, 0)]);
        let base = PStarCondition {
            tree: t,
            w: [(key(3), set(&[Ordinal::zero()]))].into_iter().collect(),
            d: BTreeSet::new(),
        };
        let p = PCondition::new(base, [n.clone()].into_iter().collect());
        let fp = fingerprint_w(&p, &n).unwrap();
        assert_eq!(fp.u0, BTreeSet::from([0]));
        assert_eq!(fp.u3, BTreeSet::from([(0, 0)]));
    }

    fn copy_pair() -> (PCondition, ModelSet, PCondition, ModelSet) {
        // Shared root below ω^ω, one private node and key per copy.
        let n0 = model(1, &[0]);
        let n1 = model(3, &[0]);
        let mk = |c: u64, nm: &ModelSet| {
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
            PCondition::new(base, [nm.clone()].into_iter().collect())
        };
        (mk(1, &n0), n0.clone(), mk(3, &n1), n1)
    }

    #[test]
    fn fingerprint_pair_amalgamates() {
        let u = default_universe();
        let (p0, n0, p1, n1) = copy_pair();
        assert!(is_valid_p(&u, &p0) && is_valid_p(&u, &p1));
        let (r, cert) = amalgamate_fingerprint(&u, &[(p0, n0), (p1, n1)]).unwrap();
        assert!(is_valid_p(&u, &r));
        assert_eq!(cert.dom_root, BTreeSet::from([key(1)]));
    }

    #[test]
    fn broken_subtree_trace_is_named() {
        let u = default_universe();
        let (p0, n0, mut p1, n1) = copy_pair();
        let pk = KappaOrdinal::Countable(node_above(3, 0, 5));
        p1.base.w.get_mut(&pk).unwrap().remove(&node(1, 0));
        // Keep W downward closed: the private node goes too.
        p1.base.w.get_mut(&pk).unwrap().remove(&node_above(3, 1, 0));
        let maps = MapFamily {
            f: BTreeMap::from([((1, 0), p1.dom().into_iter().zip(p0.dom()).collect())]),
            g: BTreeMap::from([((1, 0), BTreeMap::from([(n1.clone(), n0.clone())]))]),
        };
        let err = amalgamate_models(&u, &[p0, p1], &[n0, n1], &maps).unwrap_err();
        assert_eq!(err, clause(AmalgamClause::SubtreeTrace, 0, 1));
        assert_eq!(AmalgamClause::SubtreeTrace.to_string(), "subtrees agree below the models");
    }

    #[test]
    fn reflection_recovers_the_lower_copy() {
        let u = default_universe();
        let (_, _, p1, n1) = copy_pair();
        let r = reflect_generic(&u, &p1, &n1, &|_| true, 1000).unwrap();
        assert!(sk_contains(Hull::Model(&n1), &r.q_bar));
        assert_eq!(r.rejected_after_formula, 0);
    }

    #[test]
    fn reflection_starves_in_the_first_block() {
        let u = default_universe();
        let (p0, n0, _, _) = copy_pair();
        assert!(matches!(reflect_generic(&u, &p0, &n0, &|_| true, 1000), Err(SideError::Exhausted(_))));
    }
}
