//! Seeded generators: random objects for oracle comparisons and planted
//! instances whose hypotheses hold by construction.
//!
//! Every generator draws from a caller-supplied `ChaCha8Rng`, so a seed
//! fixes the whole instance stream.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ccc::{EFunction, EValue, Placed};
use crate::ordinal::{h_of, Ordinal};
use crate::pstar::{commit, Key, PStarCondition};
use crate::quotient::{dtheta_densify, project_theta};
use crate::side::{add_model, is_valid_p, leq_p_failure, oplus_p, AmalgamClause, MapFamily, PCondition};
use crate::tree::{node, node_above, NodeSet, Tree};
use crate::universe::{
    adequate, close_beta, close_n, is_n_closed, Atoms, KappaOrdinal, ModelSet, ModelSetFamily, Profile,
    Station, Supported, Universe,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A height `ω^ω·block + level`.
fn height(block: u64, level: u64) -> Ordinal {
    if block == 0 {
        Ordinal::nat(level)
    } else {
        Ordinal::ch_point(block).add(&Ordinal::nat(level)).expect("small height")
    }
}

fn height_parts(x: &Ordinal) -> (u64, u64) {
    let h = h_of(x);
    (h.omega_coefficient(), h.finite_tail())
}

fn subset<T: Clone>(rng: &mut ChaCha8Rng, items: &[T], p: f64) -> Vec<T> {
    items.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

fn atoms_of<T: Supported + ?Sized>(x: &T) -> Atoms {
    let mut a = Atoms::default();
    x.collect_atoms(&mut a);
    a
}

// ---------------------------------------------------------------------------
// Random objects

/// A standard tree with up to `max_nodes` nodes. Heights live in blocks
/// `0..=blocks`; gaps between heights are allowed, so the result is often
/// neither downwards closed nor split-minimal.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize, blocks: u64) -> Tree {
    let mut t = Tree::root_only();
    let n = rng.gen_range(1..=max_nodes.max(1));
    while t.len() < n {
        let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
        let x = nodes.choose(rng).expect("nonempty").clone();
        let (b, l) = height_parts(&x);
        let h = if b < blocks && rng.gen_bool(0.25) {
            height(rng.gen_range(b + 1..=blocks), rng.gen_range(0..=2))
        } else {
            height(b, l + rng.gen_range(1..=2))
        };
        if h.is_zero() {
            continue;
        }
        let y = t.fresh_at_height(&h).expect("small label");
        t.attach_above(Some(&x), y).expect("known node");
    }
    t
}

/// A random tree with one planted defect half of the time, for validator
/// comparisons.
pub fn random_raw_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> Tree {
    let mut t = random_tree(rng, max_nodes, 1);
    if rng.gen_bool(0.5) {
        return t;
    }
    let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
    let x = nodes.choose(rng).expect("nonempty").clone();
    let y = nodes.choose(rng).expect("nonempty").clone();
    match rng.gen_range(0..6) {
        0 => t.insert_raw(Ordinal::nat(rng.gen_range(1..4)), [Ordinal::zero()].into()),
        1 => {
            let mut ps = t.preds_of(&x).clone();
            if let Some(p) = ps.iter().next().cloned() {
                ps.remove(&p);
            }
            t.insert_raw(x, ps);
        }
        2 => {
            let mut ps = t.preds_of(&x).clone();
            ps.insert(y);
            t.insert_raw(x, ps);
        }
        3 => {
            let keep: Vec<(Ordinal, NodeSet)> = nodes
                .iter()
                .filter(|n| !n.is_zero())
                .map(|n| (n.clone(), t.preds_of(n).iter().filter(|p| !p.is_zero()).cloned().collect()))
                .collect();
            t = Tree::new();
            for (n, ps) in keep {
                t.insert_raw(n, ps);
            }
        }
        4 => {
            let mut ps = t.preds_of(&x).clone();
            ps.insert(node(9, 9));
            t.insert_raw(x, ps);
        }
        _ => {
            let fresh = t.fresh_at_height(&Ordinal::nat(1)).expect("label");
            t.insert_raw(fresh, [Ordinal::zero(), x].into());
        }
    }
    t
}

/// Index pool for the oracle suites: small naturals, a block-one ordinal and
/// the stations of the universe.
pub fn key_pool(u: &Universe) -> Vec<Key> {
    let mut v: Vec<Key> = (1..=5).map(KappaOrdinal::nat).collect();
    v.push(KappaOrdinal::Countable(node_above(1, 0, 3)));
    v.extend((0..u.station_count()).map(KappaOrdinal::Station));
    v
}

/// A condition over `t` with up to `max_keys` indices. `W` values are
/// downward closures, so the result validates except for tree defects.
pub fn random_pstar_on(rng: &mut ChaCha8Rng, t: &Tree, pool: &[Key], max_keys: usize) -> PStarCondition {
    let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
    let k = rng.gen_range(0..=max_keys.min(pool.len()));
    let keys: Vec<Key> = pool.choose_multiple(rng, k).cloned().collect();
    let mut w = BTreeMap::new();
    for key in &keys {
        let picked: NodeSet = subset(rng, &nodes, 0.35).into_iter().collect();
        w.insert(key.clone(), t.downward_closure(&picked));
    }
    let mut d = BTreeSet::new();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if rng.gen_bool(0.3) {
                d.insert(commit(keys[i].clone(), keys[j].clone()));
            }
        }
    }
    PStarCondition { tree: t.clone(), w, d }
}

/// Like `random_pstar_on` over a fresh tree, with a planted defect a third of
/// the time: a `W` value that is not downward closed or a commitment to an
/// index outside the domain.
pub fn random_pstar(rng: &mut ChaCha8Rng, pool: &[Key], max_nodes: usize, max_keys: usize) -> PStarCondition {
    let t = if rng.gen_bool(0.15) { random_raw_tree(rng, max_nodes) } else { random_tree(rng, max_nodes, 1) };
    let mut p = random_pstar_on(rng, &t, pool, max_keys);
    if rng.gen_bool(0.33) {
        let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
        let key = pool.choose(rng).expect("nonempty").clone();
        if let (true, Some(x)) = (rng.gen_bool(0.5), nodes.choose(rng)) {
            p.w.insert(key, [x.clone()].into());
        } else if let Some(k0) = p.w.keys().next().cloned() {
            if k0 != key {
                p.d.insert(commit(k0, key));
            }
        }
    }
    p
}

/// A model with trace `ω^ω·c` for `c ∈ 1..=max_block` and random stations,
/// closed under the Λ₀ rule.
pub fn random_model(rng: &mut ChaCha8Rng, u: &Universe, max_block: u64) -> ModelSet {
    random_model_below(rng, u, max_block, u.station_count())
}

pub fn random_model_below(rng: &mut ChaCha8Rng, u: &Universe, max_block: u64, below: Station) -> ModelSet {
    let c = rng.gen_range(1..=max_block.max(1));
    let mut stations: BTreeSet<Station> = (0..below).filter(|_| rng.gen_bool(0.35)).collect();
    u.close_stations(&mut stations);
    ModelSet { delta: Ordinal::ch_point(c), stations }
}

/// A random adequate family of at most `k` models, by rejection.
pub fn random_adequate(rng: &mut ChaCha8Rng, u: &Universe, k: usize, max_block: u64) -> ModelSetFamily {
    let mut a = ModelSetFamily::new();
    for _ in 0..k {
        for _ in 0..8 {
            let m = random_model(rng, u, max_block);
            let mut b = a.clone();
            b.insert(m);
            if adequate(u, &b) {
                a = b;
                break;
            }
        }
    }
    a
}

/// A raw quadruple: a random base and up to `max_models` random models,
/// neither adequacy nor separation enforced.
pub fn random_p(rng: &mut ChaCha8Rng, u: &Universe, max_nodes: usize, max_keys: usize, max_models: usize) -> PCondition {
    let pool = key_pool(u);
    let base = random_pstar(rng, &pool, max_nodes, max_keys);
    let k = rng.gen_range(0..=max_models);
    let a = (0..k).map(|_| random_model(rng, u, 3)).collect();
    PCondition { base, a }
}

/// A valid condition: a random base whose models are kept only while the
/// result validates.
pub fn random_valid_p(rng: &mut ChaCha8Rng, u: &Universe, max_nodes: usize, max_keys: usize, max_models: usize) -> PCondition {
    let pool = key_pool(u);
    let t = random_tree(rng, max_nodes, 2);
    let base = random_pstar_on(rng, &t, &pool, max_keys);
    let mut p = PCondition { base, a: BTreeSet::new() };
    for _ in 0..max_models {
        let m = random_model(rng, u, 3);
        let q = p.plus(&m);
        if is_valid_p(u, &q) {
            p = q;
        }
    }
    p
}

/// A random candidate below `p`: nodes added on top, subtrees grown along
/// the tree, new indices and commitments. One time in four a change that
/// usually breaks the order is mixed in.
pub fn random_extension(rng: &mut ChaCha8Rng, p: &PStarCondition, pool: &[Key]) -> PStarCondition {
    let mut q = p.clone();
    let nodes: Vec<Ordinal> = q.tree.nodes().cloned().collect();
    if nodes.is_empty() {
        q.tree = Tree::root_only();
    }
    for _ in 0..rng.gen_range(0..=2) {
        let nodes: Vec<Ordinal> = q.tree.nodes().cloned().collect();
        let x = nodes.choose(rng).expect("nonempty").clone();
        let (b, l) = height_parts(&x);
        let y = q.tree.fresh_at_height(&height(b, l + 1)).expect("label");
        q.tree.attach_above(Some(&x), y.clone()).expect("known node");
        // Enter at most one subtree that already holds the parent.
        let holders: Vec<Key> = q.w.iter().filter(|(_, s)| s.contains(&x)).map(|(k, _)| k.clone()).collect();
        if let Some(k) = holders.choose(rng) {
            if rng.gen_bool(0.6) {
                q.w.get_mut(k).expect("key").insert(y);
            }
        }
    }
    if rng.gen_bool(0.3) {
        if let Some(k) = pool.choose(rng) {
            q.w.entry(k.clone()).or_insert_with(|| [Ordinal::zero()].into_iter().filter(|_| !nodes.is_empty()).collect());
        }
    }
    let keys: Vec<Key> = q.w.keys().cloned().collect();
    if keys.len() >= 2 && rng.gen_bool(0.3) {
        let two: Vec<&Key> = keys.choose_multiple(rng, 2).collect();
        q.d.insert(commit(two[0].clone(), two[1].clone()));
    }
    if rng.gen_bool(0.25) {
        let nodes: Vec<Ordinal> = q.tree.nodes().cloned().collect();
        match rng.gen_range(0..4) {
            0 => {
                if let Some(k) = keys.choose(rng) {
                    q.w.get_mut(k).expect("key").clear();
                }
            }
            1 => {
                if let Some(c) = q.d.iter().next().cloned() {
                    q.d.remove(&c);
                }
            }
            2 => {
                // A new node slipped under an old one: not an end extension.
                if let Some(x) = nodes.iter().find(|x| !x.is_zero()) {
                    if let Ok(y) = q.tree.fresh_at_height(&h_of(x)) {
                        let _ = q.tree.insert_below(x, y);
                    }
                }
            }
            _ => {
                // A fresh top node entering two subtrees at once.
                if let (Some(x), true) = (nodes.choose(rng).cloned(), keys.len() >= 2) {
                    let (b, l) = height_parts(&x);
                    let y = q.tree.fresh_at_height(&height(b, l + 1)).expect("label");
                    q.tree.attach_above(Some(&x), y.clone()).expect("known node");
                    for k in keys.choose_multiple(rng, 2) {
                        let s = q.w.get_mut(k).expect("key");
                        s.insert(x.clone());
                        s.insert(y.clone());
                        let closed = q.tree.downward_closure(s);
                        *s = closed;
                    }
                }
            }
        }
    }
    q
}

pub fn random_extension_p(rng: &mut ChaCha8Rng, u: &Universe, p: &PCondition) -> PCondition {
    let pool = key_pool(u);
    let mut q = PCondition { base: random_extension(rng, &p.base, &pool), a: p.a.clone() };
    if rng.gen_bool(0.3) {
        q.a.insert(random_model(rng, u, 3));
    }
    if rng.gen_bool(0.1) {
        if let Some(m) = q.a.iter().next().cloned() {
            q.a.remove(&m);
        }
    }
    q
}

/// A random `e` over `keys`: pairs are top, a countable value, or (with
/// `low`) zero.
pub fn random_e(rng: &mut ChaCha8Rng, keys: &[Key], low: f64) -> EFunction {
    let mut e = EFunction::constant_top();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            let v = if rng.gen_bool(low) {
                EValue::Val(Ordinal::nat(0))
            } else if rng.gen_bool(0.5) {
                EValue::Val(node(rng.gen_range(0..4), 0))
            } else {
                EValue::Top
            };
            e.set(keys[i].clone(), keys[j].clone(), v);
        }
    }
    e
}

// ---------------------------------------------------------------------------
// Shared bases and translated copies

/// Where a private node hangs.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Parent {
    Base(Ordinal),
    Private(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum KeyRef {
    Root(usize),
    Private(usize),
}

/// The part every copy shares: a tree below ω^ω, the root indices and their
/// subtrees there, and the small models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedBase {
    pub tree: Tree,
    pub root_keys: Vec<Key>,
    pub root_w: Vec<NodeSet>,
    pub stations: BTreeSet<Station>,
    pub small_models: Vec<ModelSet>,
}

/// The shape of one copy above its level: private nodes at relative
/// heights, private indices, commitments and an optional model just above
/// the copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivatePart {
    nodes: Vec<(u64, u64, Parent)>,
    in_root: Vec<Option<usize>>,
    key_nodes: Vec<(Vec<usize>, NodeSet)>,
    commits: Vec<(KeyRef, KeyRef)>,
    upper_model: bool,
}

/// One instantiated copy with its index and model enumerations aligned to
/// the template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Copy {
    pub p: PCondition,
    pub n: ModelSet,
    pub keys: Vec<Key>,
    pub models: Vec<ModelSet>,
}

fn random_base(rng: &mut ChaCha8Rng, u: &Universe, station_pool: &[Station], chain: bool) -> SharedBase {
    let tree = if chain {
        let len = rng.gen_range(1..=3);
        Tree::chain(std::iter::once(Ordinal::zero()).chain((1..=len).map(|n| node(n, 0))))
    } else {
        random_tree(rng, 5, 0)
    };
    let mut stations: BTreeSet<Station> = subset(rng, station_pool, 0.4).into_iter().collect();
    u.close_stations(&mut stations);
    let nodes: Vec<Ordinal> = tree.nodes().cloned().collect();
    let nroots = rng.gen_range(1..=2);
    let mut root_keys: Vec<Key> = (1..=6).map(KappaOrdinal::nat).collect::<Vec<_>>().choose_multiple(rng, nroots).cloned().collect();
    root_keys.sort();
    let st: Vec<Station> = stations.iter().copied().collect();
    if let Some(&s) = st.choose(rng) {
        if rng.gen_bool(0.4) {
            root_keys.push(KappaOrdinal::Station(s));
        }
    }
    let root_w = root_keys
        .iter()
        .map(|_| {
            let picked: NodeSet = subset(rng, &nodes, 0.5).into_iter().collect();
            if chain {
                tree.node_set()
            } else {
                tree.downward_closure(&picked)
            }
        })
        .collect();
    let mut small_models = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let mut s: BTreeSet<Station> = subset(rng, &st, 0.5).into_iter().collect();
        u.close_stations(&mut s);
        let m = ModelSet { delta: Ordinal::ch_point(1), stations: s };
        if !small_models.contains(&m) {
            small_models.push(m);
        }
    }
    small_models.sort();
    SharedBase { tree, root_keys, root_w, stations, small_models }
}

fn random_private(rng: &mut ChaCha8Rng, base: &SharedBase, chain: bool) -> PrivatePart {
    let base_nodes: Vec<Ordinal> = base.tree.nodes().cloned().collect();
    let top = base.tree.max_node().cloned().unwrap_or_else(Ordinal::zero);
    let mut nodes: Vec<(u64, u64, Parent)> = Vec::new();
    let mut in_root: Vec<Option<usize>> = Vec::new();
    let count = if chain { rng.gen_range(1..=2) } else { rng.gen_range(1..=3) };
    for i in 0..count {
        let root = if rng.gen_bool(0.5) { Some(rng.gen_range(0..base.root_keys.len())) } else { None };
        let parent = if chain {
            if i == 0 {
                Parent::Base(top.clone())
            } else {
                Parent::Private(i - 1)
            }
        } else {
            // A parent inside the chosen root subtree keeps it downward closed.
            let mut cands: Vec<Parent> = base_nodes
                .iter()
                .filter(|b| root.map_or(true, |r| base.root_w[r].contains(*b)))
                .map(|b| Parent::Base(b.clone()))
                .collect();
            cands.extend((0..nodes.len()).filter(|&j| root.map_or(true, |r| in_root[j] == Some(r))).map(Parent::Private));
            match cands.choose(rng) {
                Some(p) => p.clone(),
                None => Parent::Base(Ordinal::zero()),
            }
        };
        let root = match (&parent, root) {
            (Parent::Base(b), Some(r)) if !base.root_w[r].contains(b) => None,
            (Parent::Private(j), Some(r)) if in_root[*j] != Some(r) => None,
            (_, r) => r,
        };
        // In a chain the parent must stay in the same root subtree.
        let root = if chain {
            match &parent {
                Parent::Private(j) => in_root[*j].filter(|_| root.is_some()),
                Parent::Base(_) => root,
            }
        } else {
            root
        };
        let level = match &parent {
            Parent::Base(_) => 1,
            Parent::Private(j) => nodes[*j].0 + 1,
        };
        let k = nodes.iter().filter(|(l, _, _)| *l == level).count() as u64;
        nodes.push((level, k, parent));
        in_root.push(root);
    }
    let key_nodes = (0..rng.gen_range(1..=2))
        .map(|_| {
            let privs: Vec<usize> = (0..nodes.len()).filter(|_| rng.gen_bool(0.5)).collect();
            let bases: NodeSet = subset(rng, &base_nodes, 0.4).into_iter().collect();
            (privs, bases)
        })
        .collect::<Vec<_>>();
    let refs: Vec<KeyRef> = (0..base.root_keys.len())
        .map(KeyRef::Root)
        .chain((0..key_nodes.len()).map(KeyRef::Private))
        .collect();
    let mut commits = Vec::new();
    for i in 0..refs.len() {
        for j in i + 1..refs.len() {
            if rng.gen_bool(0.3) {
                commits.push((refs[i].clone(), refs[j].clone()));
            }
        }
    }
    PrivatePart { nodes, in_root, key_nodes, commits, upper_model: rng.gen_bool(0.4) }
}

fn private_key(block: u64, j: usize) -> Key {
    KappaOrdinal::Countable(node_above(block, 0, j as u64 + 1))
}

fn private_label(block: u64, level: u64, k: u64) -> Ordinal {
    node_above(block, level, k)
}

/// Places a copy of `part` in block `block`, with `N = (ω^ω·block, S)`.
pub fn instantiate(base: &SharedBase, part: &PrivatePart, block: u64) -> Copy {
    let mut tree = base.tree.clone();
    let labels: Vec<Ordinal> = part.nodes.iter().map(|(l, k, _)| private_label(block, *l, *k)).collect();
    for (i, (_, _, parent)) in part.nodes.iter().enumerate() {
        let x = match parent {
            Parent::Base(b) => b.clone(),
            Parent::Private(j) => labels[*j].clone(),
        };
        tree.attach_above(Some(&x), labels[i].clone()).expect("parent exists");
    }
    let mut w: BTreeMap<Key, NodeSet> = BTreeMap::new();
    let mut keys = Vec::new();
    for (r, k) in base.root_keys.iter().enumerate() {
        let mut s = base.root_w[r].clone();
        s.extend((0..labels.len()).filter(|&i| part.in_root[i] == Some(r)).map(|i| labels[i].clone()));
        w.insert(k.clone(), s);
        keys.push(k.clone());
    }
    for (j, (privs, bases)) in part.key_nodes.iter().enumerate() {
        let mut s: NodeSet = bases.clone();
        s.extend(privs.iter().map(|&i| labels[i].clone()));
        let k = private_key(block, j);
        w.insert(k.clone(), tree.downward_closure(&s));
        keys.push(k);
    }
    let resolve = |r: &KeyRef| match r {
        KeyRef::Root(i) => base.root_keys[*i].clone(),
        KeyRef::Private(j) => private_key(block, *j),
    };
    let d = part.commits.iter().map(|(a, b)| commit(resolve(a), resolve(b))).collect();
    let n = ModelSet { delta: Ordinal::ch_point(block), stations: base.stations.clone() };
    let mut models = base.small_models.clone();
    models.push(n.clone());
    if part.upper_model {
        models.push(ModelSet { delta: Ordinal::ch_point(block + 1), stations: base.stations.clone() });
    }
    let p = PCondition { base: PStarCondition { tree, w, d }, a: models.iter().cloned().collect() };
    Copy { p, n, keys, models }
}

/// Aligned map families between copies, `f[(j, i)]` from copy `j` to `i`.
pub fn aligned_maps(copies: &[Copy]) -> MapFamily {
    let mut maps = MapFamily::default();
    for j in 0..copies.len() {
        for i in 0..j {
            maps.f.insert((j, i), copies[j].keys.iter().cloned().zip(copies[i].keys.iter().cloned()).collect());
            maps.g.insert((j, i), copies[j].models.iter().cloned().zip(copies[i].models.iter().cloned()).collect());
        }
    }
    maps
}

/// A family of `d` pairwise split conditions at levels `ω^ω·(i+1)` whose
/// domains form a Δ-system with the shared root indices. Private parts are
/// drawn independently per member.
pub fn split_family(rng: &mut ChaCha8Rng, u: &Universe, d: usize) -> (Vec<PStarCondition>, Vec<Ordinal>) {
    let base = random_base(rng, u, &[], false);
    let mut parts = Vec::new();
    let mut levels = Vec::new();
    for i in 0..d {
        let part = random_private(rng, &base, false);
        let c = instantiate(&base, &part, i as u64 + 1);
        parts.push(c.p.base);
        levels.push(Ordinal::ch_point(i as u64 + 1));
    }
    (parts, levels)
}

/// Which `e` a translated-copy family is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EKind {
    ConstantTop,
    /// Finite values on root pairs at or above their shared heights, values
    /// above every copy on all other pairs.
    RandomHigh,
}

/// `count` translated copies of one shape at levels `ω^ω·(α+1)`, together
/// with an `e` that separates them.
pub fn translated_copies(rng: &mut ChaCha8Rng, u: &Universe, count: usize, kind: EKind) -> (Vec<Placed>, EFunction) {
    let base = random_base(rng, u, &[], false);
    let part = random_private(rng, &base, false);
    let copies: Vec<Copy> = (0..count).map(|a| instantiate(&base, &part, a as u64 + 1)).collect();
    let e = match kind {
        EKind::ConstantTop => EFunction::constant_top(),
        EKind::RandomHigh => {
            let high = Ordinal::ch_point(count as u64 + 2);
            let mut e = EFunction::constant(EValue::Val(high.clone()));
            let roots = &base.root_keys;
            for i in 0..roots.len() {
                for j in i + 1..roots.len() {
                    let shared: NodeSet = base.root_w[i].intersection(&base.root_w[j]).cloned().collect();
                    let top = shared.iter().map(|x| height_parts(x).1).max().unwrap_or(0);
                    e.set(roots[i].clone(), roots[j].clone(), EValue::Val(Ordinal::nat(top + rng.gen_range(0..3))));
                }
            }
            // A sprinkling of top values among the private indices.
            let all: Vec<Key> = copies.iter().flat_map(|c| c.keys.iter().skip(roots.len()).cloned()).collect();
            for _ in 0..all.len() {
                let (a, b) = (all.choose(rng).expect("nonempty"), all.choose(rng).expect("nonempty"));
                if a != b {
                    e.set(a.clone(), b.clone(), EValue::Top);
                }
            }
            e
        }
    };
    let placed = copies
        .into_iter()
        .enumerate()
        .map(|(a, c)| Placed { level: Ordinal::ch_point(a as u64 + 1), cond: c.p.base })
        .collect();
    (placed, e)
}

/// The private index blocks of a translated-copy family, for the weak ρ
/// check.
pub fn private_blocks(placed: &[Placed]) -> Vec<BTreeSet<Key>> {
    let root: BTreeSet<Key> = match placed {
        [a, b, ..] => a.cond.dom().intersection(&b.cond.dom()).cloned().collect(),
        _ => BTreeSet::new(),
    };
    placed.iter().map(|p| p.cond.dom().difference(&root).cloned().collect()).collect()
}

// ---------------------------------------------------------------------------
// Model-set profiles

/// The names of the union-adequacy profiles, in suite order.
pub const PROFILES: [&str; 9] = [
    "intersection-is-cut",
    "add-top-model",
    "add-cuts",
    "n-closure",
    "union-below-model",
    "chained-union",
    "beta-closure",
    "union-below-station",
    "add-above-cut",
];

fn model_in_hull(rng: &mut ChaCha8Rng, u: &Universe, n: &ModelSet) -> Option<ModelSet> {
    let c = n.delta.omega_coefficient();
    if c < 2 {
        return None;
    }
    let st: Vec<Station> = n.stations.iter().copied().collect();
    let mut s: BTreeSet<Station> = subset(rng, &st, 0.5).into_iter().collect();
    u.close_stations(&mut s);
    Some(ModelSet { delta: Ordinal::ch_point(rng.gen_range(1..c)), stations: s })
}

fn hull_family(rng: &mut ChaCha8Rng, u: &Universe, n: &ModelSet, k: usize) -> ModelSetFamily {
    let mut a = ModelSetFamily::new();
    for _ in 0..k {
        if let Some(m) = model_in_hull(rng, u, n) {
            let mut b = a.clone();
            b.insert(m);
            if adequate(u, &b) {
                a = b;
            }
        }
    }
    a
}

/// An instance of the named profile with its hypotheses planted. The
/// planting is best effort; the checker still verifies every hypothesis.
pub fn profile_instance(rng: &mut ChaCha8Rng, u: &Universe, name: &str) -> Option<Profile> {
    let lambda: Vec<Station> = u.lambda_stations().collect();
    Some(match name {
        "intersection-is-cut" => {
            let a = random_adequate(rng, u, 3, 4);
            let v: Vec<&ModelSet> = a.iter().collect();
            let (m, n) = v
                .iter()
                .flat_map(|m| v.iter().map(move |n| (*m, *n)))
                .find(|(m, n)| crate::universe::classify(u, m, n) == crate::universe::Relation::Less)?;
            Profile::IntersectionIsCut { m: m.clone(), n: n.clone(), a: a.clone() }
        }
        "add-top-model" => {
            let n = random_model(rng, u, 4);
            Profile::AddTopModel { a: hull_family(rng, u, &n, 3), n }
        }
        "add-cuts" => {
            let a = random_adequate(rng, u, 3, 4);
            let mut c = a.clone();
            for m in &a {
                if rng.gen_bool(0.6) {
                    c.insert(m.cut(*lambda.choose(rng)?));
                }
            }
            Profile::AddCuts { a, c }
        }
        "n-closure" => {
            let a = random_adequate(rng, u, 3, 4);
            let n = a.iter().max()?.clone();
            Profile::NClosure { a, n }
        }
        "union-below-model" => {
            let mut a = random_adequate(rng, u, 3, 4);
            let n = a.iter().max()?.clone();
            a = close_n(u, &a, &n).ok()?;
            let mut b: ModelSetFamily = a.iter().filter(|m| crate::universe::sk_contains(crate::universe::Hull::Model(&n), *m)).cloned().collect();
            for m in hull_family(rng, u, &n, 2) {
                let mut b2 = b.clone();
                b2.insert(m);
                if adequate(u, &b2) {
                    b = b2;
                }
            }
            Profile::UnionBelowModel { a, n, b }
        }
        "chained-union" => {
            let d = rng.gen_range(2..=3);
            let mut parts = vec![random_adequate(rng, u, 2, 2)];
            let mut models = vec![parts[0].iter().next().cloned().unwrap_or_else(|| random_model(rng, u, 1))];
            let mut top = parts[0].iter().map(|m| m.delta.omega_coefficient()).max().unwrap_or(0);
            for _ in 1..d {
                top += 1;
                let mut stations: BTreeSet<Station> = parts.last()?.iter().flat_map(|m| m.stations.iter().copied()).collect();
                stations.extend((0..u.station_count()).filter(|_| rng.gen_bool(0.2)));
                u.close_stations(&mut stations);
                let n = ModelSet { delta: Ordinal::ch_point(top), stations };
                let mut next: ModelSetFamily = subset(rng, &parts.last()?.iter().cloned().collect::<Vec<_>>(), 0.7).into_iter().collect();
                next.insert(n.clone());
                parts.push(next);
                models.push(n);
            }
            Profile::ChainedUnion { parts, models }
        }
        "beta-closure" => {
            let mut a = random_adequate(rng, u, 3, 4);
            let n = a.iter().max()?.clone();
            if rng.gen_bool(0.5) {
                a = close_n(u, &a, &n).ok()?;
            }
            let n = Some(n).filter(|n| is_n_closed(&a, n));
            Profile::BetaClosure { a, beta: *lambda.choose(rng)?, n }
        }
        "union-below-station" => {
            let beta = *lambda.choose(rng)?;
            let a = close_beta(u, &random_adequate(rng, u, 3, 4), beta).ok()?;
            let mut b: ModelSetFamily = a.iter().filter(|m| m.stations.iter().all(|&s| s < beta)).cloned().collect();
            for _ in 0..2 {
                let m = random_model_below(rng, u, 4, beta);
                let mut b2 = b.clone();
                b2.insert(m);
                if adequate(u, &b2) {
                    b = b2;
                }
            }
            Profile::UnionBelowStation { a, beta, b }
        }
        "add-above-cut" => {
            let beta = *lambda.choose(rng)?;
            let n = random_model(rng, u, 4);
            let mut a = ModelSetFamily::from([n.cut(beta)]);
            for _ in 0..2 {
                let m = random_model_below(rng, u, 4, beta);
                let mut a2 = a.clone();
                a2.insert(m);
                if adequate(u, &a2) {
                    a = a2;
                }
            }
            Profile::AddAboveCut { a, beta, n }
        }
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// Fingerprint-matched tuples

/// `d` copies of one shape in blocks `2, 4, 6, …`, each with its own model
/// `N_i`; all share the stations `S`, so earlier copies lie in the hulls of
/// later models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyTuple {
    pub base: SharedBase,
    pub part: PrivatePart,
    pub copies: Vec<Copy>,
}

impl CopyTuple {
    pub fn parts(&self) -> Vec<(PCondition, ModelSet)> {
        self.copies.iter().map(|c| (c.p.clone(), c.n.clone())).collect()
    }

    pub fn conditions(&self) -> Vec<PCondition> {
        self.copies.iter().map(|c| c.p.clone()).collect()
    }

    pub fn models(&self) -> Vec<ModelSet> {
        self.copies.iter().map(|c| c.n.clone()).collect()
    }

    pub fn maps(&self) -> MapFamily {
        aligned_maps(&self.copies)
    }
}

fn block_of(i: usize, first: u64) -> u64 {
    first + 2 * i as u64
}

/// A valid tuple of `d` copies, retrying until every copy validates.
pub fn copy_tuple(rng: &mut ChaCha8Rng, u: &Universe, d: usize, station_pool: &[Station]) -> CopyTuple {
    copy_tuple_from(rng, u, d, station_pool, false, 2)
}

fn copy_tuple_from(
    rng: &mut ChaCha8Rng,
    u: &Universe,
    d: usize,
    station_pool: &[Station],
    chain: bool,
    first: u64,
) -> CopyTuple {
    loop {
        let base = random_base(rng, u, station_pool, chain);
        let part = random_private(rng, &base, chain);
        let copies: Vec<Copy> = (0..d).map(|i| instantiate(&base, &part, block_of(i, first))).collect();
        let refs: Vec<&PCondition> = copies.iter().map(|c| &c.p).collect();
        if copies.iter().all(|c| is_valid_p(u, &c.p)) && is_valid_p(u, &oplus_p(&refs)) {
            return CopyTuple { base, part, copies };
        }
    }
}

/// A hypothesis the violation plants break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlantedClause {
    Restriction,
    DomainTrace,
    Membership,
    SubtreeTrace,
    HullTrace,
}

impl PlantedClause {
    pub const ALL: [PlantedClause; 5] = [
        PlantedClause::Restriction,
        PlantedClause::DomainTrace,
        PlantedClause::Membership,
        PlantedClause::SubtreeTrace,
        PlantedClause::HullTrace,
    ];

    /// The hypothesis the amalgamation should name.
    pub fn amalgam_clause(self) -> AmalgamClause {
        match self {
            PlantedClause::Restriction => AmalgamClause::Restriction,
            PlantedClause::DomainTrace => AmalgamClause::DomainTrace,
            PlantedClause::Membership => AmalgamClause::Membership,
            PlantedClause::SubtreeTrace => AmalgamClause::SubtreeTrace,
            PlantedClause::HullTrace => AmalgamClause::HullTrace,
        }
    }

    /// The fingerprint component the plant also changes.
    pub fn fingerprint_field(self) -> &'static str {
        match self {
            PlantedClause::Restriction => "t",
            PlantedClause::DomainTrace => "a",
            PlantedClause::Membership => "U3",
            PlantedClause::SubtreeTrace => "w",
            PlantedClause::HullTrace => "b",
        }
    }
}

/// Breaks one hypothesis in the last copy, keeping it a valid condition and
/// the maps aligned. `None` when the tuple's shape cannot host the plant.
pub fn plant_violation(u: &Universe, t: &CopyTuple, clause: PlantedClause) -> Option<CopyTuple> {
    let mut out = t.clone();
    let last = out.copies.last_mut()?;
    let block = last.n.delta.omega_coefficient();
    let roots = t.base.root_keys.len();
    match clause {
        PlantedClause::Restriction => {
            let x = t.base.tree.max_node()?.clone();
            let (_, l) = height_parts(&x);
            let y = last.p.base.tree.fresh_at_height(&Ordinal::nat(l + 1)).ok()?;
            last.p.base.tree.attach_above(Some(&x), y).ok()?;
        }
        PlantedClause::DomainTrace => {
            let old = t.base.root_keys.iter().find(|k| matches!(k, KappaOrdinal::Countable(_)))?.clone();
            let new = KappaOrdinal::nat(50);
            rename_key(&mut last.p, &old, &new);
            for k in last.keys.iter_mut().filter(|k| **k == old) {
                *k = new.clone();
            }
        }
        PlantedClause::Membership => {
            if !t.part.upper_model {
                return None;
            }
            let old = last.keys.last().filter(|_| last.keys.len() > roots)?.clone();
            let new = KappaOrdinal::Countable(node_above(block + 1, 0, 9));
            rename_key(&mut last.p, &old, &new);
            *last.keys.last_mut()? = new;
        }
        PlantedClause::SubtreeTrace => {
            let k = last.keys.get(roots)?.clone();
            let w = last.p.base.w.get(&k)?.clone();
            let x = t.base.tree.nodes().find(|x| !w.contains(*x))?.clone();
            let mut s = w;
            s.insert(x);
            let closed = last.p.base.tree.downward_closure(&s);
            last.p.base.w.insert(k, closed);
        }
        PlantedClause::HullTrace => {
            let b = t.base.small_models.first()?.clone();
            let keyed: BTreeSet<Station> = last
                .keys
                .iter()
                .filter_map(|k| match k {
                    KappaOrdinal::Station(s) => Some(*s),
                    KappaOrdinal::Countable(_) => None,
                })
                .collect();
            let candidates: Vec<ModelSet> = (0..=t.base.stations.len())
                .flat_map(|drop| {
                    let mut s: BTreeSet<Station> = t.base.stations.iter().copied().skip(drop).collect();
                    u.close_stations(&mut s);
                    [s.clone(), b.stations.iter().copied().filter(|x| s.contains(x)).collect::<BTreeSet<_>>()]
                })
                .filter(|s| s != &b.stations && s.symmetric_difference(&b.stations).all(|x| !keyed.contains(x)))
                .map(|stations| ModelSet { delta: b.delta.clone(), stations })
                .collect();
            let nb = candidates.into_iter().find(|nb| {
                let mut a = last.p.a.clone();
                a.remove(&b);
                a.insert(nb.clone());
                let q = PCondition { base: last.p.base.clone(), a };
                !last.p.a.contains(nb) && is_valid_p(u, &q) && is_n_closed(&q.a, &last.n)
            })?;
            last.p.a.remove(&b);
            last.p.a.insert(nb.clone());
            for m in last.models.iter_mut().filter(|m| **m == b) {
                *m = nb.clone();
            }
        }
    }
    is_valid_p(u, &last.p).then_some(out)
}

fn rename_key(p: &mut PCondition, old: &Key, new: &Key) {
    if let Some(s) = p.base.w.remove(old) {
        p.base.w.insert(new.clone(), s);
    }
    p.base.d = p
        .base
        .d
        .iter()
        .map(|(a, b)| {
            let f = |k: &Key| if k == old { new.clone() } else { k.clone() };
            commit(f(a), f(b))
        })
        .collect();
}

// ---------------------------------------------------------------------------
// Reflection instances

/// A planted reflection instance: the top copy of a two-copy tuple, whose
/// lower copy is a witness inside `Sk(N)`.
pub fn reflection_instance(rng: &mut ChaCha8Rng, u: &Universe) -> (PCondition, ModelSet) {
    let t = copy_tuple(rng, u, 2, &(0..u.station_count()).collect::<Vec<_>>());
    let top = t.copies.last().expect("two copies");
    (top.p.clone(), top.n.clone())
}

/// A free instance: a random valid condition with one of its models, closed
/// under that model. No witness is planted.
pub fn free_reflection_instance(rng: &mut ChaCha8Rng, u: &Universe) -> Option<(PCondition, ModelSet)> {
    let mut p = random_valid_p(rng, u, 6, 3, 3);
    let n = p.a.iter().max()?.clone();
    p.a = close_n(u, &p.a, &n).ok()?;
    is_valid_p(u, &p).then_some((p, n))
}

// ---------------------------------------------------------------------------
// Mirror instances and quotient scenarios (gap universe, θ = 12)

pub const GAP_THETA: Station = 12;
const LOW_FIXED: [Station; 5] = [0, 1, 3, 5, 6];
const LOW_RUN: std::ops::RangeInclusive<Station> = 7..=11;
const HIGH_RUN: std::ops::RangeInclusive<Station> = 13..=16;

/// A condition with indices and a model reaching above θ, planted so that a
/// translation of its high stations into the run below θ clears every low
/// station it uses.
pub fn mirror_instance(rng: &mut ChaCha8Rng, u: &Universe) -> PCondition {
    loop {
        let high: BTreeSet<Station> = {
            let all: Vec<Station> = HIGH_RUN.collect();
            let k = rng.gen_range(1..=2);
            all.choose_multiple(rng, k).copied().collect()
        };
        let low_all: Vec<Station> = LOW_RUN.collect();
        let low_keys: BTreeSet<Station> = subset(rng, &low_all, 0.2).into_iter().collect();
        let in_model: BTreeSet<Station> = low_keys.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let floor = in_model.iter().max().copied().unwrap_or(6);
        let hi = *high.last().expect("nonempty");
        let lo = *high.first().expect("nonempty");
        let room = (hi + 1 - GAP_THETA..=lo - 7).any(|d| {
            high.iter().all(|&s| s - d > floor && !low_keys.contains(&(s - d)))
        });
        if !room {
            continue;
        }
        let tree = random_tree(rng, 5, 0);
        let nodes: Vec<Ordinal> = tree.nodes().cloned().collect();
        let mut keys: Vec<Key> = vec![KappaOrdinal::nat(rng.gen_range(1..=3))];
        keys.extend(low_keys.iter().map(|&s| KappaOrdinal::Station(s)));
        let high_keys: Vec<Station> = high.iter().copied().filter(|_| rng.gen_bool(0.8)).collect();
        keys.extend(high_keys.iter().map(|&s| KappaOrdinal::Station(s)));
        let w: BTreeMap<Key, NodeSet> = keys
            .iter()
            .map(|k| (k.clone(), tree.downward_closure(&subset(rng, &nodes, 0.5).into_iter().collect())))
            .collect();
        let mut d = BTreeSet::new();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                if rng.gen_bool(0.25) {
                    d.insert(commit(keys[i].clone(), keys[j].clone()));
                }
            }
        }
        let mut stations: BTreeSet<Station> = LOW_FIXED.into_iter().chain(in_model.iter().copied()).collect();
        stations.extend(high.iter().copied());
        u.close_stations(&mut stations);
        let c = rng.gen_range(1..=2);
        let mut a = BTreeSet::from([ModelSet { delta: Ordinal::ch_point(c), stations }]);
        if rng.gen_bool(0.3) {
            let low: BTreeSet<Station> = LOW_FIXED.into_iter().filter(|_| rng.gen_bool(0.7)).collect();
            let mut low = low;
            u.close_stations(&mut low);
            a.insert(ModelSet { delta: Ordinal::ch_point(c + 1), stations: low });
        }
        let q = PCondition { base: PStarCondition { tree, w, d }, a };
        if is_valid_p(u, &q) {
            return q;
        }
    }
}

/// A free instance for the density search: a random valid condition in the
/// gap universe with no planted room below θ.
pub fn free_mirror_instance(rng: &mut ChaCha8Rng, u: &Universe) -> PCondition {
    random_valid_p(rng, u, 5, 3, 2)
}

/// A condition in `Sk(θ)`: one copy of a random shape, stations below θ.
pub fn low_copy(rng: &mut ChaCha8Rng, u: &Universe) -> PCondition {
    let pool: Vec<Station> = (0..GAP_THETA).collect();
    copy_tuple(rng, u, 1, &pool).copies.remove(0).p
}

/// A member of the projection-friendly dense set with a nonempty side:
/// either a low copy or a densified mirror instance.
pub fn etheta_member(rng: &mut ChaCha8Rng, u: &Universe) -> PCondition {
    if rng.gen_bool(0.5) {
        let q = mirror_instance(rng, u);
        if let Ok(d) = dtheta_densify(u, &q, GAP_THETA, None, 500) {
            return d.r;
        }
    }
    low_copy(rng, u)
}

/// A random extension of `s` inside `Sk(θ)`: new top nodes entering at most
/// one subtree, new commitments, and sometimes a new model below θ.
pub fn extend_below_theta(rng: &mut ChaCha8Rng, u: &Universe, s: &PCondition, theta: Station) -> PCondition {
    for _ in 0..8 {
        let mut q = s.clone();
        for _ in 0..rng.gen_range(1..=3) {
            let nodes: Vec<Ordinal> = q.base.tree.nodes().cloned().collect();
            let Some(x) = nodes.choose(rng).cloned() else { break };
            let (b, l) = height_parts(&x);
            let y = q.base.tree.fresh_at_height(&height(b, l + 1)).expect("label");
            q.base.tree.attach_above(Some(&x), y.clone()).expect("known node");
            let holders: Vec<Key> = q.base.w.iter().filter(|(_, w)| w.contains(&x)).map(|(k, _)| k.clone()).collect();
            if let Some(k) = holders.choose(rng) {
                q.base.w.get_mut(k).expect("key").insert(y);
            }
        }
        let keys: Vec<Key> = q.base.w.keys().cloned().collect();
        if keys.len() >= 2 && rng.gen_bool(0.4) {
            let two: Vec<&Key> = keys.choose_multiple(rng, 2).collect();
            q.base.d.insert(commit(two[0].clone(), two[1].clone()));
        }
        if rng.gen_bool(0.3) {
            let top = atoms_of(&q).max_countable.map_or(0, |m| m.omega_coefficient());
            let mut m = random_model_below(rng, u, 1, theta);
            m.delta = Ordinal::ch_point(top + 1);
            q.a.insert(m);
        }
        if is_valid_p(u, &q) && leq_p_failure(&q, s).is_none() {
            return q;
        }
    }
    s.clone()
}

/// `p ∈ E_θ` and `s ≤ π_θ(p)` in `P_θ`.
pub fn projection_pair(rng: &mut ChaCha8Rng, u: &Universe) -> (PCondition, PCondition) {
    let p = etheta_member(rng, u);
    let pi = project_theta(u, &p, GAP_THETA).expect("θ is Σ");
    let s = extend_below_theta(rng, u, &pi, GAP_THETA);
    (p, s)
}

/// An instance for adding a model inside the quotient: `p` in the dense set
/// with a model, `N ∋ θ` with `p ∈ Sk(N)`, and a generator below `π_θ(p)`
/// holding `N ∩ θ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddModelScenario {
    pub p: PCondition,
    pub n: ModelSet,
    pub generator: PCondition,
}

pub fn add_model_scenario(rng: &mut ChaCha8Rng, u: &Universe) -> AddModelScenario {
    loop {
        let p = etheta_member(rng, u);
        let pi = project_theta(u, &p, GAP_THETA).expect("θ is Σ");
        let s = if rng.gen_bool(0.5) { extend_below_theta(rng, u, &pi, GAP_THETA) } else { pi };
        let (ap, as_) = (atoms_of(&p), atoms_of(&s));
        let top = [ap.max_countable, as_.max_countable].into_iter().flatten().map(|m| m.omega_coefficient()).max().unwrap_or(0);
        let mut stations: BTreeSet<Station> = ap.stations.union(&as_.stations).copied().collect();
        stations.insert(GAP_THETA);
        stations.extend((0..u.station_count()).filter(|_| rng.gen_bool(0.1)));
        u.close_stations(&mut stations);
        let n = ModelSet { delta: Ordinal::ch_point(top + 1 + rng.gen_range(0..2)), stations };
        let Ok(generator) = add_model(u, &s, &n.cut(GAP_THETA)) else { continue };
        return AddModelScenario { p, n, generator };
    }
}

/// `d` θ-matched pools of `d` copies each inside `Sk(θ)` with the generator they were
/// amalgamated into. With `chain` the copies are chain-shaped and the
/// generator's tree lines up all their private nodes on one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolScenario {
    pub pools: Vec<Vec<(PCondition, ModelSet)>>,
    pub generator: PCondition,
}

pub fn pool_scenario(rng: &mut ChaCha8Rng, u: &Universe, d: usize, chain: bool) -> PoolScenario {
    let pool: Vec<Station> = (0..GAP_THETA).collect();
    let t = copy_tuple_from(rng, u, d * d, &pool, chain, 2);
    let parts = t.parts();
    // Pool k takes copies k, k + d, k + 2d, …, so every row is nested in the next.
    let pools: Vec<Vec<(PCondition, ModelSet)>> =
        (0..d).map(|k| (0..d).map(|r| parts[k + r * d].clone()).collect()).collect();
    let generator = if chain {
        let mut nodes: Vec<Ordinal> = t.base.tree.node_set().into_iter().collect();
        let mut privs: Vec<Ordinal> =
            t.copies.iter().flat_map(|c| c.p.base.tree.node_set().into_iter().filter(|x| !t.base.tree.contains(x))).collect();
        privs.sort();
        nodes.extend(privs);
        PCondition { base: PStarCondition { tree: Tree::chain(nodes), ..PStarCondition::empty() }, a: BTreeSet::new() }
    } else {
        let refs: Vec<&PCondition> = t.copies.iter().map(|c| &c.p).collect();
        oplus_p(&refs)
    };
    PoolScenario { pools, generator }
}

/// The clashing-model example: the generator holds `M`, the condition holds
/// only `N`, which clashes with `M` and sits above θ, so its projection is
/// the empty condition.
pub fn clashing_model_scenario() -> (ModelSet, ModelSet, PCondition, PCondition) {
    let m = ModelSet::new(Ordinal::ch_point(1), [0, 1, 2, 3]);
    let n = ModelSet::new(Ordinal::ch_point(2), [0, 1, 3, 5, 6, 13]);
    let generator = PCondition::new(PStarCondition::empty(), [m.clone()].into());
    let p = PCondition::new(PStarCondition::empty(), [n.clone()].into());
    (m, n, generator, p)
}
