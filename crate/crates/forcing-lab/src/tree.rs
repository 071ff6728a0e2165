//! Standard finite trees and their subtree calculus.
//!
//! The order is stored as the full transitive relation: each node maps to
//! the set of its strict predecessors. Trees built by raw union (`oplus`)
//! may violate the standard-tree axioms; `validate` reports that.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ordinal::{h_of, Exponent, Ordinal, OrdinalError};

pub type NodeSet = BTreeSet<Ordinal>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {0} is not in the tree")]
    UnknownNode(String),
    #[error("blocks {0} and {1} overlap")]
    OverlappingBlocks(usize, usize),
    #[error("tree has a chain of length {0}, above the bound {1}")]
    ChainTooLong(usize, usize),
    #[error("height 0 holds only the root")]
    NoFreshRoot,
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    preds: BTreeMap<Ordinal, NodeSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeReport {
    pub is_standard: bool,
    /// Only meaningful for standard trees; false otherwise.
    pub is_downwards_closed: bool,
    /// Only meaningful for standard trees; false otherwise.
    pub has_minimal_splits: bool,
}

impl TreeReport {
    pub fn all(&self) -> bool {
        self.is_standard && self.is_downwards_closed && self.has_minimal_splits
    }
}

/// Whether an ordinal may label a node: 0 or at least ω.
pub fn is_node_label(x: &Ordinal) -> bool {
    x.is_zero() || !x.is_finite()
}

impl Tree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root_only() -> Self {
        let mut t = Tree::new();
        t.preds.insert(Ordinal::zero(), NodeSet::new());
        t
    }

    /// Builds a tree from nodes and order pairs `(x, y)` meaning `x < y`.
    /// No closure is taken: the pairs are the relation.
    pub fn from_pairs<I, P>(nodes: I, pairs: P) -> Self
    where
        I: IntoIterator<Item = Ordinal>,
        P: IntoIterator<Item = (Ordinal, Ordinal)>,
    {
        let mut preds: BTreeMap<Ordinal, NodeSet> =
            nodes.into_iter().map(|n| (n, NodeSet::new())).collect();
        for (x, y) in pairs {
            preds.entry(y).or_default().insert(x.clone());
            preds.entry(x).or_default();
        }
        Tree { preds }
    }

    /// A chain 0 < x1 < x2 < … through the given nodes in increasing order.
    pub fn chain<I: IntoIterator<Item = Ordinal>>(nodes: I) -> Self {
        let mut t = Tree::new();
        let mut below = NodeSet::new();
        for n in nodes {
            t.preds.insert(n.clone(), below.clone());
            below.insert(n);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn contains(&self, x: &Ordinal) -> bool {
        self.preds.contains_key(x)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Ordinal> + '_ {
        self.preds.keys()
    }

    pub fn node_set(&self) -> NodeSet {
        self.preds.keys().cloned().collect()
    }

    pub fn max_node(&self) -> Option<&Ordinal> {
        self.preds.keys().next_back()
    }

    /// Strict predecessors of `x` (empty for unknown nodes).
    pub fn preds_of(&self, x: &Ordinal) -> &NodeSet {
        static EMPTY: NodeSet = NodeSet::new();
        self.preds.get(x).unwrap_or(&EMPTY)
    }

    pub fn less(&self, x: &Ordinal, y: &Ordinal) -> bool {
        self.preds.get(y).is_some_and(|p| p.contains(x))
    }

    pub fn leq(&self, x: &Ordinal, y: &Ordinal) -> bool {
        x == y || self.less(x, y)
    }

    pub fn comparable(&self, x: &Ordinal, y: &Ordinal) -> bool {
        self.leq(x, y) || self.less(y, x)
    }

    /// All pairs `(x, y)` with `x < y`.
    pub fn pairs(&self) -> impl Iterator<Item = (&Ordinal, &Ordinal)> + '_ {
        self.preds.iter().flat_map(|(y, ps)| ps.iter().map(move |x| (x, y)))
    }

    pub fn pair_count(&self) -> usize {
        self.preds.values().map(|p| p.len()).sum()
    }

    pub fn heights(&self) -> BTreeSet<Ordinal> {
        self.preds.keys().map(h_of).collect()
    }

    /// The immediate predecessor of `x`, i.e. its highest predecessor.
    pub fn parent(&self, x: &Ordinal) -> Option<&Ordinal> {
        let ps = self.preds.get(x)?;
        ps.iter().max_by(|a, b| ps_count(self, a).cmp(&ps_count(self, b)))
    }

    /// Immediate successors of `x`.
    pub fn children(&self, x: &Ordinal) -> Vec<Ordinal> {
        self.preds
            .iter()
            .filter(|(_, ps)| ps.contains(x))
            .filter(|(y, _)| self.parent(y) == Some(x))
            .map(|(y, _)| y.clone())
            .collect()
    }

    /// Nodes strictly above `x`.
    pub fn above(&self, x: &Ordinal) -> NodeSet {
        self.preds.iter().filter(|(_, ps)| ps.contains(x)).map(|(y, _)| y.clone()).collect()
    }

    /// The largest common strict lower bound of two nodes, if any.
    pub fn meet(&self, x: &Ordinal, y: &Ordinal) -> Option<Ordinal> {
        let px = self.preds.get(x)?;
        let py = self.preds.get(y)?;
        px.intersection(py).max_by_key(|z| ps_count(self, z)).cloned()
    }

    pub fn restrict(&self, delta: &Ordinal) -> Tree {
        let preds = self
            .preds
            .range(..delta.clone())
            .map(|(x, ps)| (x.clone(), ps.range(..delta.clone()).cloned().collect()))
            .collect();
        Tree { preds }
    }

    /// Restricts the tree to an arbitrary node set with the induced order.
    pub fn induced(&self, keep: &NodeSet) -> Tree {
        let preds = self
            .preds
            .iter()
            .filter(|(x, _)| keep.contains(*x))
            .map(|(x, ps)| (x.clone(), ps.intersection(keep).cloned().collect()))
            .collect();
        Tree { preds }
    }

    pub fn is_end_extension_of(&self, small: &Tree) -> bool {
        is_end_extension(small, self)
    }

    pub fn downward_closure(&self, w: &NodeSet) -> NodeSet {
        let mut out = NodeSet::new();
        for x in w {
            if let Some(ps) = self.preds.get(x) {
                out.insert(x.clone());
                out.extend(ps.iter().cloned());
            }
        }
        out
    }

    pub fn is_downward_closed_set(&self, w: &NodeSet) -> bool {
        w.iter().all(|x| self.preds.get(x).is_some_and(|ps| ps.is_subset(w)))
    }

    pub fn validate(&self) -> TreeReport {
        validate_tree(self)
    }

    /// The least `ω·γ + n` not already a node. Height 0 admits only the root.
    pub fn fresh_at_height(&self, gamma: &Ordinal) -> Result<Ordinal, TreeError> {
        self.fresh_at_height_avoiding(gamma, &NodeSet::new())
    }

    pub fn fresh_at_height_avoiding(
        &self,
        gamma: &Ordinal,
        avoid: &NodeSet,
    ) -> Result<Ordinal, TreeError> {
        if gamma.is_zero() {
            return Err(TreeError::NoFreshRoot);
        }
        let start = gamma.omega_mul()?;
        let mut k = 0u64;
        loop {
            let cand = start.add(&Ordinal::nat(k))?;
            if !self.contains(&cand) && !avoid.contains(&cand) {
                return Ok(cand);
            }
            k += 1;
        }
    }

    /// Inserts the raw node `y` with the given strict predecessors, without
    /// touching the rest of the order.
    pub fn insert_raw(&mut self, y: Ordinal, preds: NodeSet) {
        self.preds.insert(y, preds);
    }

    /// Adds a new node `y` directly above `x` (or as the root when `x` is
    /// `None`).
    pub fn attach_above(&mut self, x: Option<&Ordinal>, y: Ordinal) -> Result<(), TreeError> {
        let mut ps = NodeSet::new();
        if let Some(x) = x {
            let base = self.preds.get(x).ok_or_else(|| TreeError::UnknownNode(x.to_string()))?;
            ps.extend(base.iter().cloned());
            ps.insert(x.clone());
        }
        self.preds.insert(y, ps);
        Ok(())
    }

    /// Inserts a new node `y` immediately below `u`: `y` inherits the
    /// predecessors of `u` and becomes a predecessor of `u` and of everything
    /// above `u`. The order among old nodes is unchanged.
    pub fn insert_below(&mut self, u: &Ordinal, y: Ordinal) -> Result<(), TreeError> {
        let base = self.preds.get(u).ok_or_else(|| TreeError::UnknownNode(u.to_string()))?.clone();
        for (w, ps) in self.preds.iter_mut() {
            if w == u || ps.contains(u) {
                ps.insert(y.clone());
            }
        }
        self.preds.insert(y, base);
        Ok(())
    }

    /// Longest chain length (number of nodes).
    pub fn height_in_nodes(&self) -> usize {
        self.preds.values().map(|p| p.len() + 1).max().unwrap_or(0)
    }

    /// Maximal elements of `set` under the tree order.
    pub fn maximal_in(&self, set: &NodeSet) -> NodeSet {
        set.iter().filter(|x| !set.iter().any(|y| self.less(x, y))).cloned().collect()
    }
}

fn ps_count(t: &Tree, x: &Ordinal) -> usize {
    t.preds.get(x).map_or(0, |p| p.len())
}

pub fn validate_tree(t: &Tree) -> TreeReport {
    let is_standard = is_standard(t);
    if !is_standard {
        return TreeReport { is_standard, is_downwards_closed: false, has_minimal_splits: false };
    }
    TreeReport {
        is_standard,
        is_downwards_closed: is_downwards_closed(t),
        has_minimal_splits: has_minimal_splits(t),
    }
}

fn is_standard(t: &Tree) -> bool {
    for (y, ps) in &t.preds {
        if !is_node_label(y) || ps.contains(y) {
            return false;
        }
        let hy = h_of(y);
        for x in ps {
            // Pairs must stay inside the node set and respect heights.
            let Some(px) = t.preds.get(x) else { return false };
            if h_of(x) >= hy || !px.is_subset(ps) {
                return false;
            }
        }
        // Predecessors linearly ordered: with transitivity and heights
        // strictly increasing, each pred set must be a chain.
        let v: Vec<&Ordinal> = ps.iter().collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if !t.comparable(v[i], v[j]) {
                    return false;
                }
            }
        }
    }
    if !t.is_empty() {
        let zero = Ordinal::zero();
        if !t.contains(&zero) {
            return false;
        }
        if t.preds.iter().any(|(x, ps)| !x.is_zero() && !ps.contains(&zero)) {
            return false;
        }
    }
    true
}

fn is_downwards_closed(t: &Tree) -> bool {
    let hs = t.heights();
    t.preds.iter().all(|(x, ps)| {
        let hx = h_of(x);
        let below: BTreeSet<Ordinal> = ps.iter().map(h_of).collect();
        hs.range(..hx).all(|a| below.contains(a))
    })
}

fn has_minimal_splits(t: &Tree) -> bool {
    let nodes: Vec<&Ordinal> = t.nodes().collect();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (x, y) = (nodes[i], nodes[j]);
            if t.comparable(x, y) {
                continue;
            }
            let Some(z) = t.meet(x, y) else { return false };
            let target = h_of(&z).succ().expect("height successor");
            let wit = |v: &Ordinal| -> Option<Ordinal> {
                std::iter::once(v)
                    .chain(t.preds_of(v).iter())
                    .find(|a| t.less(&z, a) && h_of(a) == target)
                    .cloned()
            };
            match (wit(x), wit(y)) {
                (Some(a), Some(b)) if a != b => {}
                _ => return false,
            }
        }
    }
    true
}

pub fn is_end_extension(small: &Tree, big: &Tree) -> bool {
    small.preds.iter().all(|(x, ps)| {
        big.preds.get(x).is_some_and(|bps| {
            let induced: NodeSet = bps.iter().filter(|p| small.contains(p)).cloned().collect();
            &induced == ps
        })
    })
}

/// Literal union of nodes and order pairs. Not necessarily standard.
pub fn tree_oplus(parts: &[&Tree]) -> Tree {
    let mut out = Tree::new();
    for t in parts {
        for (x, ps) in &t.preds {
            out.preds.entry(x.clone()).or_default().extend(ps.iter().cloned());
        }
    }
    out
}

/// Outcome of the incomparable-family search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySearch {
    Found(Vec<usize>),
    NotFound,
}

/// Finds `want` block indices, least in lexicographic order, such that every
/// node of one chosen block is incomparable with every node of any other
/// chosen block. The chain bound is the finite stand-in for the absence of
/// long branches.
pub fn find_incomparable_family(
    t: &Tree,
    blocks: &[NodeSet],
    want: usize,
    max_chain: usize,
) -> Result<FamilySearch, TreeError> {
    for (i, b) in blocks.iter().enumerate() {
        if let Some(x) = b.iter().find(|x| !t.contains(x)) {
            return Err(TreeError::UnknownNode(x.to_string()));
        }
        for (j, c) in blocks.iter().enumerate().skip(i + 1) {
            if !b.is_disjoint(c) {
                return Err(TreeError::OverlappingBlocks(i, j));
            }
        }
    }
    let longest = t.height_in_nodes();
    if longest > max_chain {
        return Err(TreeError::ChainTooLong(longest, max_chain));
    }
    if want == 0 {
        return Ok(FamilySearch::Found(Vec::new()));
    }
    let n = blocks.len();
    let ok: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    i != j
                        && blocks[i]
                            .iter()
                            .all(|x| blocks[j].iter().all(|y| !t.comparable(x, y)))
                })
                .collect()
        })
        .collect();
    let mut chosen = Vec::new();
    fn extend(ok: &[Vec<bool>], start: usize, want: usize, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == want {
            return true;
        }
        for c in start..ok.len() {
            if ok.len() - c < want - chosen.len() {
                break;
            }
            if chosen.iter().all(|&p| ok[p][c]) {
                chosen.push(c);
                if extend(ok, c + 1, want, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    Ok(if extend(&ok, 0, want, &mut chosen) {
        FamilySearch::Found(chosen)
    } else {
        FamilySearch::NotFound
    })
}

/// Convenience: the node `ω·n + k`.
pub fn node(n: u64, k: u64) -> Ordinal {
    Ordinal::omega_times_plus(n, k)
}

/// Convenience: the node `ω^ω·c + ω·n + k`, used for split levels.
pub fn node_above(c: u64, n: u64, k: u64) -> Ordinal {
    let base = Ordinal::monomial(Exponent::Omega, c);
    base.add(&Ordinal::omega_times_plus(n, k)).expect("small node")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Ordinal]) -> NodeSet {
        v.iter().cloned().collect()
    }

    #[test]
    fn empty_tree_is_everything() {
        let r = Tree::new().validate();
        assert!(r.is_standard && r.is_downwards_closed && r.has_minimal_splits);
    }

    #[test]
    fn chain_is_normal() {
        let t = Tree::chain([node(0, 0), node(1, 0), node(2, 0)]);
        assert!(t.validate().all());
    }

    #[test]
    fn split_without_height_one() {
        let t = Tree::from_pairs(
            [node(0, 0), node(2, 0), node(2, 1)],
            [(node(0, 0), node(2, 0)), (node(0, 0), node(2, 1))],
        );
        let r = t.validate();
        assert_eq!(
            r,
            TreeReport { is_standard: true, is_downwards_closed: true, has_minimal_splits: false }
        );
    }

    #[test]
    fn non_standard_shapes() {
        // missing root
        assert!(!Tree::chain([node(1, 0), node(2, 0)]).validate().is_standard);
        // finite nonzero label
        assert!(!Tree::chain([node(0, 0), node(0, 3)]).validate().is_standard);
        // height not increasing
        assert!(!Tree::chain([node(0, 0), node(2, 0), node(2, 1)]).validate().is_standard);
        // intransitive
        let t = Tree::from_pairs(
            [node(0, 0), node(1, 0), node(2, 0)],
            [(node(0, 0), node(1, 0)), (node(1, 0), node(2, 0))],
        );
        assert!(!t.validate().is_standard);
    }

    #[test]
    fn restrict_filters() {
        let t = Tree::chain([node(0, 0), node(1, 0), node_above(1, 1, 0)]);
        let r = t.restrict(&Ordinal::ch_point(1));
        assert_eq!(r, Tree::chain([node(0, 0), node(1, 0)]));
        assert!(t.restrict(&Ordinal::zero()).is_empty());
        assert_eq!(t.restrict(&Ordinal::ch_point(9)), t);
    }

    #[test]
    fn end_extensions() {
        let small = Tree::chain([node(0, 0), node(1, 0)]);
        let big = Tree::from_pairs(
            [node(0, 0), node(1, 0), node(2, 0)],
            [(node(0, 0), node(1, 0)), (node(0, 0), node(2, 0))],
        );
        assert!(is_end_extension(&small, &small));
        assert!(is_end_extension(&Tree::new(), &small));
        assert!(is_end_extension(&small, &big));
        let reorder = Tree::from_pairs([node(0, 0), node(1, 0)], []);
        assert!(!is_end_extension(&small, &reorder));
    }

    #[test]
    fn closure_of_top() {
        let t = Tree::chain([node(0, 0), node(1, 0), node(2, 0)]);
        assert!(t.downward_closure(&NodeSet::new()).is_empty());
        assert_eq!(t.downward_closure(&set(&[node(2, 0)])), t.node_set());
    }

    #[test]
    fn conflicting_union_is_rejected() {
        let a = Tree::chain([node(0, 0), node(1, 0), node(2, 0)]);
        let b = Tree::from_pairs(
            [node(0, 0), node(1, 0), node(2, 0)],
            [(node(0, 0), node(1, 0)), (node(0, 0), node(2, 0))],
        );
        let u = tree_oplus(&[&a, &b]);
        assert!(!is_end_extension(&b, &u));
        assert_eq!(tree_oplus(&[&a, &a]), a);
    }

    #[test]
    fn insertions_preserve_old_order() {
        let mut t = Tree::chain([node(0, 0), node(3, 0)]);
        let old = t.clone();
        t.insert_below(&node(3, 0), node(1, 0)).unwrap();
        assert!(is_end_extension(&old, &t));
        assert!(t.less(&node(1, 0), &node(3, 0)));
        assert!(t.validate().is_standard);
        assert_eq!(t.fresh_at_height(&Ordinal::nat(1)).unwrap(), node(1, 1));
        assert!(t.fresh_at_height(&Ordinal::zero()).is_err());
    }

    #[test]
    fn incomparable_family() {
        let t = Tree::from_pairs(
            [node(0, 0), node(1, 0), node(1, 1), node(1, 2)],
            [(node(0, 0), node(1, 0)), (node(0, 0), node(1, 1)), (node(0, 0), node(1, 2))],
        );
        let blocks = vec![set(&[node(1, 0)]), set(&[node(1, 1)]), set(&[node(1, 2)])];
        assert_eq!(
            find_incomparable_family(&t, &blocks, 2, 10).unwrap(),
            FamilySearch::Found(vec![0, 1])
        );
        let c = Tree::chain([node(0, 0), node(1, 0), node(2, 0)]);
        let blocks = vec![set(&[node(1, 0)]), set(&[node(2, 0)])];
        assert_eq!(find_incomparable_family(&c, &blocks, 2, 10).unwrap(), FamilySearch::NotFound);
        assert!(find_incomparable_family(&c, &blocks, 2, 2).is_err());
        let overlap = vec![set(&[node(1, 0)]), set(&[node(1, 0)])];
        assert!(find_incomparable_family(&c, &overlap, 2, 10).is_err());
    }
}
