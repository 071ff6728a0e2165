//! The e-separated suborder: separation functions, the finite weak-ρ check,
//! the pairwise compatibility search, and a generic-filter simulator.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ordinal::{h_of, is_in_ch, next_in_ch, Ordinal};
use crate::pstar::{
    amalgamate_split_family, commit, is_split_pair, is_valid_pstar, leq_failure, normalize, Commit,
    Key, PStarCondition, PStarError,
};
use crate::tree::{NodeSet, Tree, TreeError};

/// A value of `e`: a countable ordinal, or the ceiling above all of them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EValue {
    Val(Ordinal),
    Top,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EFunction {
    table: BTreeMap<Commit, EValue>,
    default: EValue,
}

impl EFunction {
    pub fn constant(v: EValue) -> Self {
        EFunction { table: BTreeMap::new(), default: v }
    }

    pub fn constant_top() -> Self {
        Self::constant(EValue::Top)
    }

    pub fn default_value(&self) -> &EValue {
        &self.default
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Commit, &EValue)> + '_ {
        self.table.iter()
    }

    /// Entries equal to the default are not stored, so equal functions
    /// compare equal.
    pub fn set(&mut self, a: Key, b: Key, v: EValue) {
        if v == self.default {
            self.table.remove(&commit(a, b));
        } else {
            self.table.insert(commit(a, b), v);
        }
    }

    pub fn get(&self, a: &Key, b: &Key) -> &EValue {
        let k = commit(a.clone(), b.clone());
        self.table.get(&k).unwrap_or(&self.default)
    }

    /// `e(a, b) ≥ γ`.
    pub fn at_least(&self, a: &Key, b: &Key, gamma: &Ordinal) -> bool {
        match self.get(a, b) {
            EValue::Top => true,
            EValue::Val(v) => v >= gamma,
        }
    }
}

pub fn is_e_separated(w: &BTreeMap<Key, NodeSet>, e: &EFunction) -> bool {
    let keys: Vec<&Key> = w.keys().collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            let (a, b) = (keys[i], keys[j]);
            let top = w[a].intersection(&w[b]).max();
            // Heights are monotone in the labels, so the largest shared label
            // carries the largest height.
            if let Some(x) = top {
                if !e.at_least(a, b, &h_of(x)) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_valid_pprime(c: &PStarCondition, e: &EFunction) -> bool {
    is_valid_pstar(c) && is_e_separated(&c.w, e)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RhoError {
    #[error("family {0} has overlapping blocks {1} and {2}")]
    NotDisjoint(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhoVerdict {
    Holds,
    /// No `i < j` separates blocks of this family at this γ.
    Counterexample { family: usize, gamma: Ordinal },
}

/// The finite reading of the weak ρ property: for every listed family and
/// every listed γ some pair of blocks `i < j` is separated at γ.
pub fn verify_weak_rho(
    e: &EFunction,
    families: &[Vec<BTreeSet<Key>>],
    gammas: &[Ordinal],
) -> Result<RhoVerdict, RhoError> {
    for (f, fam) in families.iter().enumerate() {
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                if !fam[i].is_disjoint(&fam[j]) {
                    return Err(RhoError::NotDisjoint(f, i, j));
                }
            }
        }
    }
    for (f, fam) in families.iter().enumerate() {
        for g in gammas {
            let found = (0..fam.len()).any(|i| {
                (i + 1..fam.len()).any(|j| {
                    fam[i].iter().all(|a| fam[j].iter().all(|b| e.at_least(a, b, g)))
                })
            });
            if !found {
                return Ok(RhoVerdict::Counterexample { family: f, gamma: g.clone() });
            }
        }
    }
    Ok(RhoVerdict::Holds)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhoSpec {
    ConstantTop,
    /// Each pair over `keys` is low (a finite value below `low_max`) with
    /// probability `low_probability`, otherwise top.
    Random { seed: u64, low_probability: f64, low_max: u64, keys: Vec<Key> },
    /// Constantly zero; fails on any family with two nonempty blocks.
    AdversarialSmall,
}

pub fn make_weak_rho(spec: &RhoSpec) -> EFunction {
    match spec {
        RhoSpec::ConstantTop => EFunction::constant_top(),
        RhoSpec::AdversarialSmall => EFunction::constant(EValue::Val(Ordinal::zero())),
        RhoSpec::Random { seed, low_probability, low_max, keys } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut e = EFunction::constant_top();
            for i in 0..keys.len() {
                for j in i + 1..keys.len() {
                    if rng.gen_bool(low_probability.clamp(0.0, 1.0)) {
                        let v = rng.gen_range(0..(*low_max).max(1));
                        e.set(keys[i].clone(), keys[j].clone(), EValue::Val(Ordinal::nat(v)));
                    }
                }
            }
            e
        }
    }
}

/// A condition placed at a level of C_h, standing for `p_α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placed {
    pub level: Ordinal,
    pub cond: PStarCondition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SearchStage {
    Stabilize,
    DeltaSystem,
    RootPositions,
    Separation,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CompatError {
    #[error("input {0} is not a valid e-separated condition")]
    Invalid(usize),
    #[error("input {0} sits at {1}, which is not a nonzero point of C_h")]
    BadLevel(usize, String),
    #[error("search starved at stage {0:?}")]
    Starved(SearchStage),
    #[error("amalgam of {0} and {1} failed certification: {2}")]
    Uncertified(usize, usize, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatiblePair {
    pub i: usize,
    pub j: usize,
    pub amalgam: PStarCondition,
    pub root: BTreeSet<Key>,
    pub zeta: Ordinal,
}

type StableKey = (Tree, usize, Vec<NodeSet>);

fn stable_key(p: &Placed) -> StableKey {
    let a = &p.level;
    let traces = p.cond.w.values().map(|s| s.range(..a.clone()).cloned().collect()).collect();
    (p.cond.tree.restrict(a), p.cond.w.len(), traces)
}

/// Greedy sunflower extraction: the root with the largest greedy family.
fn delta_system(members: &[usize], doms: &[BTreeSet<Key>]) -> (BTreeSet<Key>, Vec<usize>) {
    let mut roots: BTreeSet<BTreeSet<Key>> = BTreeSet::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            roots.insert(doms[i].intersection(&doms[j]).cloned().collect());
        }
    }
    let mut best: (BTreeSet<Key>, Vec<usize>) = (BTreeSet::new(), Vec::new());
    for r in roots {
        let mut chosen: Vec<usize> = Vec::new();
        for &i in members {
            if !r.is_subset(&doms[i]) {
                continue;
            }
            let ok = chosen.iter().all(|&c| {
                let m: BTreeSet<Key> = doms[c].intersection(&doms[i]).cloned().collect();
                m == r
            });
            if ok {
                chosen.push(i);
            }
        }
        if chosen.len() > best.1.len() {
            best = (r, chosen);
        }
    }
    best
}

/// Searches a family of placed e-separated conditions for two that are split
/// at their levels and whose union is again e-separated.
pub fn find_compatible_pair(
    conds: &[Placed],
    e: &EFunction,
) -> Result<CompatiblePair, CompatError> {
    for (i, p) in conds.iter().enumerate() {
        if p.level.is_zero() || !is_in_ch(&p.level) {
            return Err(CompatError::BadLevel(i, p.level.to_string()));
        }
        if !is_valid_pprime(&p.cond, e) {
            return Err(CompatError::Invalid(i));
        }
    }
    let mut order: Vec<usize> = (0..conds.len()).collect();
    order.sort_by(|&a, &b| conds[a].level.cmp(&conds[b].level).then(a.cmp(&b)));

    let mut buckets: BTreeMap<StableKey, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        buckets.entry(stable_key(&conds[i])).or_default().push(i);
    }
    let doms: Vec<BTreeSet<Key>> = conds.iter().map(|p| p.cond.dom()).collect();
    let mut reached = SearchStage::Stabilize;
    for ((t, _, _), members) in buckets {
        // Keep a subsequence whose trees sit below every later level.
        let mut thin: Vec<usize> = Vec::new();
        for i in members {
            let fits = thin.iter().all(|&k| {
                conds[k].level < conds[i].level
                    && conds[k].cond.tree.max_node().map_or(true, |m| m < &conds[i].level)
            });
            if fits {
                thin.push(i);
            }
        }
        if thin.len() < 2 {
            continue;
        }
        reached = reached.max(SearchStage::DeltaSystem);
        let (root, family) = delta_system(&thin, &doms);
        if family.len() < 2 {
            continue;
        }
        reached = reached.max(SearchStage::RootPositions);
        let mut zeta_base = t.max_node().cloned().unwrap_or_else(Ordinal::zero);
        let rv: Vec<&Key> = root.iter().collect();
        for a in 0..rv.len() {
            for b in a + 1..rv.len() {
                if let EValue::Val(v) = e.get(rv[a], rv[b]) {
                    zeta_base = zeta_base.max(v.clone());
                }
            }
        }
        let zeta = next_in_ch(&zeta_base).expect("C_h point above a countable bound");
        let mut by_pos: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for i in family {
            if zeta > conds[i].level {
                continue;
            }
            let pos = doms[i].iter().enumerate().filter(|(_, k)| root.contains(*k)).map(|(n, _)| n);
            by_pos.entry(pos.collect()).or_default().push(i);
        }
        for (_, z) in by_pos {
            if z.len() < 2 {
                continue;
            }
            reached = reached.max(SearchStage::Separation);
            for (a, &i) in z.iter().enumerate() {
                for &j in &z[a + 1..] {
                    let (pi, pj) = (&conds[i], &conds[j]);
                    let separated = doms[i].difference(&root).all(|x| {
                        doms[j].difference(&root).all(|y| e.at_least(x, y, &zeta))
                    });
                    if !separated
                        || !is_split_pair(&pi.cond, &pj.cond, &pi.level, &pj.level).unwrap_or(false)
                    {
                        continue;
                    }
                    let parts = [pi.cond.clone(), pj.cond.clone()];
                    let levels = [pi.level.clone(), pj.level.clone()];
                    let (amalgam, _) = amalgamate_split_family(&parts, &levels)
                        .map_err(|err| CompatError::Uncertified(i, j, err.to_string()))?;
                    if !is_e_separated(&amalgam.w, e) {
                        return Err(CompatError::Uncertified(i, j, "not e-separated".into()));
                    }
                    return Ok(CompatiblePair { i, j, amalgam, root: root.clone(), zeta });
                }
            }
        }
    }
    Err(CompatError::Starved(reached))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub indices: Vec<Key>,
    /// Realized heights are `0..height`.
    pub height: u64,
    pub pairs: Vec<Commit>,
    pub seed: u64,
    pub e: EFunction,
    /// Height round after which pairs are committed; 0 commits right after
    /// every index enters the domain.
    pub commit_round: u64,
    /// Probability that a growth step reuses an existing node.
    pub share_probability: f64,
}

impl SimConfig {
    pub fn new(indices: Vec<Key>, height: u64, seed: u64) -> Self {
        SimConfig {
            indices,
            height,
            pairs: Vec::new(),
            seed,
            e: EFunction::constant_top(),
            commit_round: 0,
            share_probability: 0.3,
        }
    }

    pub fn commit_all(mut self) -> Self {
        let ix = &self.indices;
        self.pairs = (0..ix.len())
            .flat_map(|i| (i + 1..ix.len()).map(move |j| commit(ix[i].clone(), ix[j].clone())))
            .collect();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    PStar(#[from] PStarError),
    #[error("step {0} left the e-separated suborder")]
    LeftSuborder(String),
    #[error("step {0} did not extend the previous condition ({1})")]
    NotDescending(String, String),
    #[error("unmet requirement: {0}")]
    Starved(String),
}

/// A finite descending chain standing in for a generic filter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericApprox {
    pub chain: Vec<PStarCondition>,
    /// Chain index at which each pair was committed.
    pub committed_at: BTreeMap<Commit, usize>,
}

impl GenericApprox {
    pub fn last(&self) -> &PStarCondition {
        self.chain.last().expect("chain starts with the empty condition")
    }

    pub fn tree(&self) -> &Tree {
        &self.last().tree
    }

    pub fn subtrees(&self) -> &BTreeMap<Key, NodeSet> {
        &self.last().w
    }

    pub fn commitments(&self) -> &BTreeSet<Commit> {
        &self.last().d
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    g: GenericApprox,
}

impl Sim<'_> {
    fn cur(&self) -> &PStarCondition {
        self.g.last()
    }

    fn push(&mut self, q: PStarCondition, step: &str) -> Result<(), SimError> {
        if &q == self.cur() {
            return Ok(());
        }
        if !is_valid_pprime(&q, &self.cfg.e) {
            return Err(SimError::LeftSuborder(step.to_string()));
        }
        if let Some(c) = leq_failure(&q, self.cur()) {
            return Err(SimError::NotDescending(step.to_string(), format!("{c:?}")));
        }
        self.g.chain.push(q);
        Ok(())
    }

    fn commit_pairs(&mut self) -> Result<(), SimError> {
        let mut q = self.cur().clone();
        let idx = self.g.chain.len();
        for c in &self.cfg.pairs {
            if q.w.contains_key(&c.0) && q.w.contains_key(&c.1) && q.d.insert(c.clone()) {
                self.g.committed_at.insert(c.clone(), idx);
            }
        }
        self.push(q, "commit")
    }

    /// Puts a node of height `alpha` into `W(k)`.
    fn grow(&mut self, k: &Key, alpha: &Ordinal) -> Result<(), SimError> {
        let p = self.cur().clone();
        let w = p.w_of(k);
        if w.iter().any(|x| &h_of(x) == alpha) {
            return Ok(());
        }
        let lower: Vec<Ordinal> = w.iter().filter(|x| &h_of(x) < alpha).cloned().collect();
        let Some(top_h) = lower.iter().map(h_of).max() else {
            return Err(SimError::Starved(format!("W({k:?}) has no node below {alpha}")));
        };
        let tops: Vec<Ordinal> = lower.into_iter().filter(|x| h_of(x) == top_h).collect();
        let u = tops.choose(&mut self.rng).expect("nonempty").clone();
        if self.rng.gen_bool(self.cfg.share_probability) {
            let cands: Vec<Ordinal> = p
                .tree
                .above(&u)
                .into_iter()
                .filter(|y| &h_of(y) == alpha && !w.contains(y))
                .collect();
            if let Some(y) = cands.choose(&mut self.rng) {
                let mut q = p.clone();
                let add = q.tree.downward_closure(&[y.clone()].into());
                q.w.entry(k.clone()).or_default().extend(add);
                if is_e_separated(&q.w, &self.cfg.e) && leq_failure(&q, &p).is_none() {
                    return self.push(q, "shared growth");
                }
            }
        }
        let mut q = p.clone();
        let y = q.tree.fresh_at_height(alpha)?;
        q.tree.attach_above(Some(&u), y.clone())?;
        q.w.entry(k.clone()).or_default().insert(y);
        self.push(q, "growth")
    }

    fn extend_above(&mut self, alpha: &Ordinal) -> Result<(), SimError> {
        let mut q = self.cur().clone();
        let nodes: Vec<Ordinal> = q.tree.nodes().filter(|x| &h_of(x) < alpha).cloned().collect();
        for x in nodes {
            let mut ups = q.tree.above(&x);
            ups.insert(x.clone());
            if ups.iter().any(|y| &h_of(y) == alpha) {
                continue;
            }
            let deepest = ups.iter().filter(|y| &h_of(y) < alpha).max_by_key(|y| q.tree.preds_of(y).len());
            let d = deepest.expect("x itself qualifies").clone();
            let y = q.tree.fresh_at_height(alpha)?;
            q.tree.attach_above(Some(&d), y)?;
        }
        self.push(q, "above-extension")
    }

    fn extend_below(&mut self) -> Result<(), SimError> {
        let mut q = self.cur().clone();
        let nodes: Vec<Ordinal> = q.tree.nodes().cloned().collect();
        for x in nodes {
            let hx = h_of(&x);
            let mut n = 0u64;
            while Ordinal::nat(n) < hx {
                let a = Ordinal::nat(n);
                let have = q.tree.preds_of(&x).iter().any(|z| h_of(z) == a);
                if !have {
                    // Insert on the edge entering the least predecessor above a.
                    let upper = q
                        .tree
                        .preds_of(&x)
                        .iter()
                        .filter(|z| h_of(z) > a)
                        .min_by_key(|z| q.tree.preds_of(z).len())
                        .cloned()
                        .unwrap_or_else(|| x.clone());
                    let y = q.tree.fresh_at_height(&a)?;
                    q.tree.insert_below(&upper, y.clone())?;
                    // Keep subtrees downward closed.
                    for s in q.w.values_mut() {
                        if s.contains(&upper) {
                            s.insert(y.clone());
                        }
                    }
                }
                n += 1;
            }
        }
        self.push(q, "below-extension")
    }

    fn normalize_step(&mut self) -> Result<(), SimError> {
        let q = normalize(self.cur())?;
        self.push(q, "normalization")
    }
}

/// Runs the scheduled density moves and returns the resulting chain.
pub fn simulate_generic_pprime(cfg: &SimConfig) -> Result<GenericApprox, SimError> {
    let mut sim = Sim {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        g: GenericApprox { chain: vec![PStarCondition::empty()], committed_at: BTreeMap::new() },
    };
    if cfg.height == 0 {
        return Ok(sim.g);
    }
    let mut q = PStarCondition::empty();
    q.tree = Tree::root_only();
    sim.push(q, "root")?;
    let mut q = sim.cur().clone();
    for k in &cfg.indices {
        q.w.entry(k.clone()).or_default().insert(Ordinal::zero());
    }
    sim.push(q, "seed subtrees")?;
    if cfg.commit_round == 0 {
        sim.commit_pairs()?;
    }
    for round in 1..cfg.height {
        let alpha = Ordinal::nat(round);
        for k in &cfg.indices {
            sim.grow(k, &alpha)?;
        }
        sim.extend_above(&alpha)?;
        sim.extend_below()?;
        sim.normalize_step()?;
        if round == cfg.commit_round {
            sim.commit_pairs()?;
        }
    }
    if cfg.commit_round >= cfg.height {
        sim.commit_pairs()?;
    }
    check_requirements(cfg, &sim.g)?;
    Ok(sim.g)
}

fn check_requirements(cfg: &SimConfig, g: &GenericApprox) -> Result<(), SimError> {
    let p = g.last();
    let hs: Vec<Ordinal> = (0..cfg.height).map(Ordinal::nat).collect();
    for k in &cfg.indices {
        for a in &hs {
            if !p.w_of(k).iter().any(|x| &h_of(x) == a) {
                return Err(SimError::Starved(format!("W({k:?}) misses height {a}")));
            }
        }
    }
    for x in p.tree.nodes() {
        let hx = h_of(x);
        let mut ups = p.tree.above(x);
        ups.insert(x.clone());
        for a in &hs {
            let ok = if a < &hx {
                p.tree.preds_of(x).iter().any(|z| &h_of(z) == a)
            } else {
                ups.iter().any(|y| &h_of(y) == a)
            };
            if !ok {
                return Err(SimError::Starved(format!("node {x} lacks height {a}")));
            }
        }
    }
    for c in &cfg.pairs {
        if !p.d.contains(c) {
            return Err(SimError::Starved(format!("pair {c:?} never committed")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCertificate {
    pub pair: Commit,
    pub committed_at: Option<usize>,
    /// `W_q(η) ∩ W_q(ξ)` at commitment time.
    pub generators: NodeSet,
    pub intersection_size: usize,
    pub certified: bool,
    pub max_antichain: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SadReport {
    pub pairs: Vec<PairCertificate>,
}

impl SadReport {
    pub fn all_committed_certified(&self) -> bool {
        self.pairs.iter().filter(|c| c.committed_at.is_some()).all(|c| c.certified)
    }
}

/// Maximum antichain size inside a downward closed set: its maximal elements.
pub fn max_antichain_downward_closed(t: &Tree, s: &NodeSet) -> usize {
    t.maximal_in(s).len()
}

pub fn check_strong_almost_disjoint(g: &GenericApprox) -> SadReport {
    let p = g.last();
    let keys: Vec<&Key> = p.w.keys().collect();
    let mut pairs = Vec::new();
    for a in 0..keys.len() {
        for b in a + 1..keys.len() {
            let pair = commit(keys[a].clone(), keys[b].clone());
            let meet = p.w_meet(&pair.0, &pair.1);
            let at = g.committed_at.get(&pair).copied();
            let generators = at.map(|i| g.chain[i].w_meet(&pair.0, &pair.1)).unwrap_or_default();
            let certified = at.is_some()
                && meet.iter().all(|x| generators.iter().any(|z| p.tree.leq(x, z)));
            pairs.push(PairCertificate {
                pair,
                committed_at: at,
                generators,
                intersection_size: meet.len(),
                certified,
                max_antichain: max_antichain_downward_closed(&p.tree, &meet),
            });
        }
    }
    SadReport { pairs }
}

/// `{x, y, z}` with `y < z` distinct immediate successors of `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub base: Ordinal,
    pub left: Ordinal,
    pub right: Ordinal,
}

impl Triple {
    pub fn nodes(&self) -> [&Ordinal; 3] {
        [&self.base, &self.left, &self.right]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleReport {
    pub families: BTreeMap<Key, BTreeSet<Triple>>,
    /// `(η, ξ, |F_η ∩ F_ξ|)` for every pair of indices.
    pub intersections: Vec<(Key, Key, usize)>,
}

pub fn derive_triple_family(t: &Tree, subtrees: &BTreeMap<Key, NodeSet>) -> TripleReport {
    let mut families = BTreeMap::new();
    for (k, u) in subtrees {
        let mut fam = BTreeSet::new();
        for x in u {
            let kids: Vec<Ordinal> = t.children(x).into_iter().filter(|y| u.contains(y)).collect();
            for i in 0..kids.len() {
                for j in i + 1..kids.len() {
                    let (l, r) = (kids[i].clone().min(kids[j].clone()), kids[i].clone().max(kids[j].clone()));
                    fam.insert(Triple { base: x.clone(), left: l, right: r });
                }
            }
        }
        families.insert(k.clone(), fam);
    }
    let keys: Vec<&Key> = families.keys().collect();
    let mut intersections = Vec::new();
    for a in 0..keys.len() {
        for b in a + 1..keys.len() {
            let n = families[keys[a]].intersection(&families[keys[b]]).count();
            intersections.push((keys[a].clone(), keys[b].clone(), n));
        }
    }
    TripleReport { families, intersections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::node;
    use crate::universe::KappaOrdinal;

    fn key(n: u64) -> Key {
        KappaOrdinal::nat(n)
    }

    fn w(entries: &[(u64, &[Ordinal])]) -> BTreeMap<Key, NodeSet> {
        entries.iter().map(|(k, s)| (key(*k), s.iter().cloned().collect())).collect()
    }

    #[test]
    fn separation_examples() {
        let zero = EFunction::constant(EValue::Val(Ordinal::zero()));
        let one = w(&[(1, &[Ordinal::zero(), node(1, 0)])]);
        assert!(is_e_separated(&one, &zero));
        let shared = w(&[(1, &[Ordinal::zero(), node(1, 0)]), (2, &[Ordinal::zero(), node(1, 0)])]);
        assert!(!is_e_separated(&shared, &zero));
        assert!(is_e_separated(&shared, &EFunction::constant_top()));
        let root_only = w(&[(1, &[Ordinal::zero()]), (2, &[Ordinal::zero()])]);
        assert!(is_e_separated(&root_only, &zero));
    }

    #[test]
    fn weak_rho_examples() {
        let fam = vec![vec![[key(0)].into(), [key(1)].into()]];
        let gam = [Ordinal::nat(1)];
        assert_eq!(verify_weak_rho(&EFunction::constant_top(), &fam, &gam), Ok(RhoVerdict::Holds));
        let adv = make_weak_rho(&RhoSpec::AdversarialSmall);
        assert_eq!(
            verify_weak_rho(&adv, &fam, &gam),
            Ok(RhoVerdict::Counterexample { family: 0, gamma: Ordinal::nat(1) })
        );
        let bad = vec![vec![[key(0)].into(), [key(0)].into()]];
        assert!(verify_weak_rho(&adv, &bad, &gam).is_err());
        let spec = RhoSpec::Random {
            seed: 1,
            low_probability: 0.5,
            low_max: 3,
            keys: (0..6).map(key).collect(),
        };
        assert_eq!(make_weak_rho(&spec), make_weak_rho(&spec));
    }

    #[test]
    fn identical_conditions_are_compatible() {
        let t = Tree::root_only();
        let p = PStarCondition { tree: t, w: w(&[(1, &[Ordinal::zero()])]), d: BTreeSet::new() };
        let conds = vec![
            Placed { level: Ordinal::ch_point(1), cond: p.clone() },
            Placed { level: Ordinal::ch_point(2), cond: p.clone() },
        ];
        let r = find_compatible_pair(&conds, &EFunction::constant_top()).unwrap();
        assert_eq!((r.i, r.j), (0, 1));
        assert_eq!(r.amalgam, p);
    }

    #[test]
    fn clashing_bases_starve_early() {
        let mk = |n: u64| {
            let t = Tree::chain([Ordinal::zero(), node(n, 0)]);
            Placed { level: Ordinal::ch_point(n), cond: PStarCondition { tree: t, ..Default::default() } }
        };
        let conds = vec![mk(1), mk(2), mk(3)];
        assert_eq!(
            find_compatible_pair(&conds, &EFunction::constant_top()),
            Err(CompatError::Starved(SearchStage::Stabilize))
        );
    }

    #[test]
    fn simulator_small_runs() {
        let g = simulate_generic_pprime(&SimConfig::new(vec![], 1, 0)).unwrap();
        assert_eq!(g.tree().node_set(), [Ordinal::zero()].into());
        let g = simulate_generic_pprime(&SimConfig::new(vec![key(5)], 3, 0)).unwrap();
        let hs: BTreeSet<Ordinal> = g.subtrees()[&key(5)].iter().map(h_of).collect();
        assert_eq!(hs, (0..3).map(Ordinal::nat).collect());
        let cfg = SimConfig::new(vec![key(5), key(7)], 4, 9).commit_all();
        let g = simulate_generic_pprime(&cfg).unwrap();
        assert!(g.tree().validate().all());
        assert!(check_strong_almost_disjoint(&g).all_committed_certified());
    }

    #[test]
    fn triples() {
        let t = Tree::chain([Ordinal::zero(), node(1, 0), node(2, 0)]);
        let u = w(&[(0, &[Ordinal::zero(), node(1, 0), node(2, 0)])]);
        assert!(derive_triple_family(&t, &u).families[&key(0)].is_empty());
        let r = Ordinal::zero();
        let (a, b, c, d) = (node(1, 0), node(1, 1), node(2, 0), node(2, 1));
        let t = Tree::from_pairs(
            [r.clone(), a.clone(), b.clone(), c.clone(), d.clone()],
            [(r.clone(), a.clone()), (r.clone(), b.clone()), (r.clone(), c.clone()), (r.clone(), d.clone()), (a.clone(), c.clone()), (a.clone(), d.clone())],
        );
        let u = w(&[(0, &[r, a, b, c, d])]);
        assert_eq!(derive_triple_family(&t, &u).families[&key(0)].len(), 2);
    }
}
