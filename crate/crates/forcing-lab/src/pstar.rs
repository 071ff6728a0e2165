//! The auxiliary tree poset: triples `(T, W, D)` of a standard finite tree,
//! a subtree function on it, and a set of committed pairs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ordinal::{h_of, is_in_ch, Ordinal};
use crate::tree::{is_end_extension, tree_oplus, NodeSet, Tree, TreeError};
use crate::universe::{Atoms, KappaOrdinal, Supported};

pub type Key = KappaOrdinal;
/// A committed pair, stored with the smaller key first.
pub type Commit = (Key, Key);

pub fn commit(a: Key, b: Key) -> Commit {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

static EMPTY: NodeSet = NodeSet::new();

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PStarCondition {
    pub tree: Tree,
    pub w: BTreeMap<Key, NodeSet>,
    pub d: BTreeSet<Commit>,
}

impl PStarCondition {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `W(η)`, empty outside the domain.
    pub fn w_of(&self, k: &Key) -> &NodeSet {
        self.w.get(k).unwrap_or(&EMPTY)
    }

    pub fn w_meet(&self, a: &Key, b: &Key) -> NodeSet {
        self.w_of(a).intersection(self.w_of(b)).cloned().collect()
    }

    pub fn dom(&self) -> BTreeSet<Key> {
        self.w.keys().cloned().collect()
    }
}

impl Supported for Tree {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.nodes().for_each(|x| acc.countable(x));
    }
}

impl Supported for PStarCondition {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.tree.collect_atoms(acc);
        self.w.collect_atoms(acc);
        self.d.collect_atoms(acc);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PStarViolation {
    TreeNotStandard,
    SubtreeOutsideTree(Key),
    SubtreeNotDownwardClosed(Key),
    CommitOutsideDomain(Key, Key),
    CommitNotPair(Key),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PStarError {
    #[error("invalid condition: {0:?}")]
    Invalid(Vec<PStarViolation>),
    #[error("{0} is not a point of C_h")]
    NotClub(String),
    #[error("split levels out of order: {0} ≥ {1}")]
    LevelsOutOfOrder(String, String),
    #[error("need at least two parts, got {0}")]
    TooFewParts(usize),
    #[error("parts {0} and {1} are not split: clause {2:?}")]
    NotSplit(usize, usize, SplitClause),
    #[error("domains do not form a Δ-system (parts {0} and {1})")]
    NotDeltaSystem(usize, usize),
    #[error("amalgam failed certification: {0}")]
    Uncertified(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub fn validate_pstar(c: &PStarCondition) -> Vec<PStarViolation> {
    let mut out = Vec::new();
    if !c.tree.validate().is_standard {
        out.push(PStarViolation::TreeNotStandard);
    }
    for (k, w) in &c.w {
        if !w.iter().all(|x| c.tree.contains(x)) {
            out.push(PStarViolation::SubtreeOutsideTree(k.clone()));
        } else if !c.tree.is_downward_closed_set(w) {
            out.push(PStarViolation::SubtreeNotDownwardClosed(k.clone()));
        }
    }
    for (a, b) in &c.d {
        if a == b {
            out.push(PStarViolation::CommitNotPair(a.clone()));
        } else if !c.w.contains_key(a) || !c.w.contains_key(b) {
            out.push(PStarViolation::CommitOutsideDomain(a.clone(), b.clone()));
        }
    }
    out
}

pub fn is_valid_pstar(c: &PStarCondition) -> bool {
    validate_pstar(c).is_empty()
}

fn ensure_valid(c: &PStarCondition) -> Result<(), PStarError> {
    let v = validate_pstar(c);
    if v.is_empty() {
        Ok(())
    } else {
        Err(PStarError::Invalid(v))
    }
}

/// Which clause of the order fails first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LeqClause {
    EndExtension,
    SubtreeGrowth,
    CommitGrowth,
    CommittedMeet,
}

/// The first failing order clause for `q ≤ p`, or `None` when it holds.
/// Inputs are not validated.
pub fn leq_failure(q: &PStarCondition, p: &PStarCondition) -> Option<LeqClause> {
    if !is_end_extension(&p.tree, &q.tree) {
        return Some(LeqClause::EndExtension);
    }
    for (k, w) in &p.w {
        match q.w.get(k) {
            Some(wq) if w.is_subset(wq) => {}
            _ => return Some(LeqClause::SubtreeGrowth),
        }
    }
    if !p.d.is_subset(&q.d) {
        return Some(LeqClause::CommitGrowth);
    }
    for (a, b) in &p.d {
        let old = p.w_meet(a, b);
        for x in q.w_meet(a, b) {
            if !old.iter().any(|z| q.tree.leq(&x, z)) {
                return Some(LeqClause::CommittedMeet);
            }
        }
    }
    None
}

pub fn leq_pstar(q: &PStarCondition, p: &PStarCondition) -> Result<bool, PStarError> {
    ensure_valid(q)?;
    ensure_valid(p)?;
    Ok(leq_failure(q, p).is_none())
}

/// Extends `p` so the tree is downwards closed with minimal splits.
///
/// New nodes only subdivide edges of `T_p`: first every child of a branching
/// node is pushed down to height one above it, then every edge is filled at
/// the realized heights it skips. Each new node has a least old node above
/// it, which serves as the witness for committed intersections.
pub fn normalize(p: &PStarCondition) -> Result<PStarCondition, PStarError> {
    ensure_valid(p)?;
    let mut t = p.tree.clone();
    let branching: Vec<Ordinal> = t.nodes().filter(|z| t.children(z).len() >= 2).cloned().collect();
    for z in &branching {
        let target = h_of(z).succ().map_err(TreeError::from)?;
        for c in t.children(z) {
            if h_of(&c) != target {
                let y = t.fresh_at_height(&target)?;
                t.insert_below(&c, y)?;
            }
        }
    }
    let heights = t.heights();
    let edges: Vec<(Ordinal, Ordinal)> =
        t.nodes().filter_map(|v| t.parent(v).map(|a| (a.clone(), v.clone()))).collect();
    for (a, v) in edges {
        let (ha, hv) = (h_of(&a), h_of(&v));
        // Insert from the top of the gap down so each new node sits on the
        // edge just below the previous one.
        let gap: Vec<Ordinal> = heights.range(ha.clone()..hv).filter(|g| **g != ha).cloned().collect();
        let mut upper = v.clone();
        for g in gap.into_iter().rev() {
            let y = t.fresh_at_height(&g)?;
            t.insert_below(&upper, y.clone())?;
            upper = y;
        }
    }
    let w = p.w.iter().map(|(k, s)| (k.clone(), t.downward_closure(s))).collect();
    Ok(PStarCondition { tree: t, w, d: p.d.clone() })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SplitClause {
    /// `T_p ↾ δ_p = T_q ↾ δ_q`.
    SharedBase,
    /// `T_p ⊆ δ_q`.
    LowerBelowUpper,
    /// Shared subtrees have equal traces.
    SubtreeTrace(Key),
    /// Shared pairs intersect below their level.
    PairMeet(Key, Key),
}

fn check_levels(dp: &Ordinal, dq: &Ordinal) -> Result<(), PStarError> {
    for d in [dp, dq] {
        if !is_in_ch(d) {
            return Err(PStarError::NotClub(d.to_string()));
        }
    }
    if dp >= dq {
        return Err(PStarError::LevelsOutOfOrder(dp.to_string(), dq.to_string()));
    }
    Ok(())
}

fn below(s: &NodeSet, d: &Ordinal) -> NodeSet {
    s.range(..d.clone()).cloned().collect()
}

/// All failing split clauses for the ordered pair `(p, q)`.
pub fn split_failures(
    p: &PStarCondition,
    q: &PStarCondition,
    dp: &Ordinal,
    dq: &Ordinal,
) -> Result<Vec<SplitClause>, PStarError> {
    check_levels(dp, dq)?;
    let mut out = Vec::new();
    if p.tree.restrict(dp) != q.tree.restrict(dq) {
        out.push(SplitClause::SharedBase);
    }
    if p.tree.max_node().is_some_and(|m| m >= dq) {
        out.push(SplitClause::LowerBelowUpper);
    }
    let shared: Vec<&Key> = p.w.keys().filter(|k| q.w.contains_key(*k)).collect();
    for k in &shared {
        if below(p.w_of(k), dp) != below(q.w_of(k), dq) {
            out.push(SplitClause::SubtreeTrace((*k).clone()));
        }
    }
    for i in 0..shared.len() {
        for j in i + 1..shared.len() {
            let (a, b) = (shared[i], shared[j]);
            let low_p = p.w_meet(a, b).iter().all(|x| x < dp);
            let low_q = q.w_meet(a, b).iter().all(|x| x < dq);
            if !(low_p && low_q) {
                out.push(SplitClause::PairMeet(a.clone(), b.clone()));
            }
        }
    }
    Ok(out)
}

pub fn is_split_pair(
    p: &PStarCondition,
    q: &PStarCondition,
    dp: &Ordinal,
    dq: &Ordinal,
) -> Result<bool, PStarError> {
    Ok(split_failures(p, q, dp, dq)?.is_empty())
}

/// Componentwise union; not necessarily a condition.
pub fn oplus_pstar(parts: &[&PStarCondition]) -> PStarCondition {
    let trees: Vec<&Tree> = parts.iter().map(|p| &p.tree).collect();
    let mut w: BTreeMap<Key, NodeSet> = BTreeMap::new();
    let mut d = BTreeSet::new();
    for p in parts {
        for (k, s) in &p.w {
            w.entry(k.clone()).or_default().extend(s.iter().cloned());
        }
        d.extend(p.d.iter().cloned());
    }
    PStarCondition { tree: tree_oplus(&trees), w, d }
}

/// The checks an amalgam passed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub split_pairs_checked: usize,
    pub root: BTreeSet<Key>,
    pub extends_all: bool,
}

/// Whether the domains pairwise meet in one common root.
pub fn delta_system_root(domains: &[BTreeSet<Key>]) -> Result<BTreeSet<Key>, (usize, usize)> {
    if domains.len() < 2 {
        return Ok(domains.first().cloned().unwrap_or_default());
    }
    let root: BTreeSet<Key> = domains[0].intersection(&domains[1]).cloned().collect();
    for i in 0..domains.len() {
        for j in i + 1..domains.len() {
            let m: BTreeSet<Key> = domains[i].intersection(&domains[j]).cloned().collect();
            if m != root {
                return Err((i, j));
            }
        }
    }
    Ok(root)
}

/// Amalgamates a pairwise split family whose domains form a Δ-system.
pub fn amalgamate_split_family(
    parts: &[PStarCondition],
    deltas: &[Ordinal],
) -> Result<(PStarCondition, Certificate), PStarError> {
    if parts.len() < 2 || deltas.len() != parts.len() {
        return Err(PStarError::TooFewParts(parts.len().min(deltas.len())));
    }
    for p in parts {
        ensure_valid(p)?;
    }
    let mut checked = 0;
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let fails = split_failures(&parts[i], &parts[j], &deltas[i], &deltas[j])?;
            if let Some(c) = fails.into_iter().next() {
                return Err(PStarError::NotSplit(i, j, c));
            }
            checked += 1;
        }
    }
    let doms: Vec<BTreeSet<Key>> = parts.iter().map(|p| p.dom()).collect();
    let root = delta_system_root(&doms).map_err(|(i, j)| PStarError::NotDeltaSystem(i, j))?;
    let refs: Vec<&PStarCondition> = parts.iter().collect();
    let r = oplus_pstar(&refs);
    let v = validate_pstar(&r);
    if !v.is_empty() {
        return Err(PStarError::Uncertified(format!("{v:?}")));
    }
    if let Some((i, c)) =
        parts.iter().enumerate().find_map(|(i, p)| leq_failure(&r, p).map(|c| (i, c)))
    {
        return Err(PStarError::Uncertified(format!("does not extend part {i}: {c:?}")));
    }
    Ok((r, Certificate { split_pairs_checked: checked, root, extends_all: true }))
}
