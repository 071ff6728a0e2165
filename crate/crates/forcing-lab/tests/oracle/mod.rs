//! Naive definitional re-implementations used as oracles. They read only the
//! raw strict order of a tree (as a set of pairs) and the ordinal primitives,
//! and loop over everything; none of the library's predicates are called.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use forcing_lab::ccc::{EFunction, EValue};
use forcing_lab::ordinal::{h_of, is_in_ch, Ordinal};
use forcing_lab::pstar::{Key, PStarCondition};
use forcing_lab::side::PCondition;
use forcing_lab::tree::{NodeSet, Tree};
use forcing_lab::universe::{KappaOrdinal, ModelSet, Station, Universe};

type Rel = BTreeSet<(Ordinal, Ordinal)>;

fn rel(t: &Tree) -> Rel {
    t.pairs().map(|(x, y)| (x.clone(), y.clone())).collect()
}

fn nodes(t: &Tree) -> Vec<Ordinal> {
    t.nodes().cloned().collect()
}

fn lt(r: &Rel, x: &Ordinal, y: &Ordinal) -> bool {
    r.contains(&(x.clone(), y.clone()))
}

fn le(r: &Rel, x: &Ordinal, y: &Ordinal) -> bool {
    x == y || lt(r, x, y)
}

/// `(is_standard, is_downwards_closed, has_minimal_splits)`, the last two
/// forced false on non-standard input to match the report convention.
pub fn tree_report(t: &Tree) -> (bool, bool, bool) {
    let r = rel(t);
    let ns = nodes(t);
    let standard = standard(&r, &ns);
    if !standard {
        return (false, false, false);
    }
    (true, downwards_closed(&r, &ns), minimal_splits(&r, &ns))
}

fn standard(r: &Rel, ns: &[Ordinal]) -> bool {
    let set: BTreeSet<&Ordinal> = ns.iter().collect();
    // Labels are 0 or infinite.
    if ns.iter().any(|x| !x.is_zero() && x.is_finite()) {
        return false;
    }
    for (x, y) in r {
        if !set.contains(x) || !set.contains(y) || x == y {
            return false;
        }
        if h_of(x) >= h_of(y) {
            return false;
        }
    }
    for a in ns {
        for b in ns {
            for c in ns {
                if lt(r, a, b) && lt(r, b, c) && !lt(r, a, c) {
                    return false;
                }
            }
        }
    }
    for y in ns {
        for a in ns {
            for b in ns {
                if a != b && lt(r, a, y) && lt(r, b, y) && !lt(r, a, b) && !lt(r, b, a) {
                    return false;
                }
            }
        }
    }
    if !ns.is_empty() {
        let zero = Ordinal::zero();
        if !set.contains(&zero) {
            return false;
        }
        if ns.iter().any(|x| !x.is_zero() && !lt(r, &zero, x)) {
            return false;
        }
    }
    true
}

fn downwards_closed(r: &Rel, ns: &[Ordinal]) -> bool {
    let heights: BTreeSet<Ordinal> = ns.iter().map(h_of).collect();
    ns.iter().all(|x| {
        heights
            .iter()
            .filter(|a| **a < h_of(x))
            .all(|a| ns.iter().any(|z| lt(r, z, x) && &h_of(z) == a))
    })
}

fn minimal_splits(r: &Rel, ns: &[Ordinal]) -> bool {
    for x in ns {
        for y in ns {
            if x >= y || le(r, x, y) || le(r, y, x) {
                continue;
            }
            let common: Vec<&Ordinal> = ns.iter().filter(|z| lt(r, z, x) && lt(r, z, y)).collect();
            let Some(z) = common.iter().find(|z| common.iter().all(|w| le(r, w, z))) else {
                return false;
            };
            let want = h_of(z).succ().unwrap();
            let up = |v: &Ordinal| -> Vec<Ordinal> {
                ns.iter().filter(|a| le(r, a, v) && lt(r, z, a) && h_of(a) == want).cloned().collect()
            };
            let (ax, ay) = (up(x), up(y));
            if !ax.iter().any(|a| ay.iter().any(|b| a != b)) {
                return false;
            }
        }
    }
    true
}

pub fn closure(t: &Tree, w: &NodeSet) -> NodeSet {
    let r = rel(t);
    nodes(t).into_iter().filter(|y| w.iter().any(|x| le(&r, y, x))).collect()
}

fn subtree_ok(t: &Tree, w: &NodeSet) -> bool {
    let r = rel(t);
    let ns: BTreeSet<Ordinal> = nodes(t).into_iter().collect();
    w.iter().all(|x| ns.contains(x)) && w.iter().all(|x| ns.iter().all(|y| !lt(&r, y, x) || w.contains(y)))
}

pub fn pstar_valid(c: &PStarCondition) -> bool {
    if !tree_report(&c.tree).0 {
        return false;
    }
    if !c.w.values().all(|w| subtree_ok(&c.tree, w)) {
        return false;
    }
    c.d.iter().all(|(a, b)| a != b && c.w.contains_key(a) && c.w.contains_key(b))
}

fn w_of<'a>(c: &'a PStarCondition, k: &Key) -> NodeSet {
    c.w.get(k).cloned().unwrap_or_default()
}

pub fn end_extends(small: &Tree, big: &Tree) -> bool {
    let (rs, rb) = (rel(small), rel(big));
    let ns = nodes(small);
    let bn: BTreeSet<Ordinal> = nodes(big).into_iter().collect();
    ns.iter().all(|x| bn.contains(x)) && ns.iter().all(|x| ns.iter().all(|y| lt(&rs, x, y) == lt(&rb, x, y)))
}

pub fn leq_pstar(q: &PStarCondition, p: &PStarCondition) -> bool {
    if !end_extends(&p.tree, &q.tree) {
        return false;
    }
    for (k, w) in &p.w {
        let Some(wq) = q.w.get(k) else { return false };
        if !w.iter().all(|x| wq.contains(x)) {
            return false;
        }
    }
    if !p.d.iter().all(|c| q.d.contains(c)) {
        return false;
    }
    let rq = rel(&q.tree);
    for (a, b) in &p.d {
        let (qa, qb, pa, pb) = (w_of(q, a), w_of(q, b), w_of(p, a), w_of(p, b));
        for x in qa.iter().filter(|x| qb.contains(*x)) {
            if !pa.iter().filter(|z| pb.contains(*z)).any(|z| le(&rq, x, z)) {
                return false;
            }
        }
    }
    true
}

pub fn split_pair(p: &PStarCondition, q: &PStarCondition, dp: &Ordinal, dq: &Ordinal) -> bool {
    let below = |t: &Tree, d: &Ordinal| -> (BTreeSet<Ordinal>, Rel) {
        (nodes(t).into_iter().filter(|x| x < d).collect(), rel(t).into_iter().filter(|(_, y)| y < d).collect())
    };
    if below(&p.tree, dp) != below(&q.tree, dq) {
        return false;
    }
    if nodes(&p.tree).iter().any(|x| x >= dq) {
        return false;
    }
    let shared: Vec<&Key> = p.w.keys().filter(|k| q.w.contains_key(*k)).collect();
    for k in &shared {
        let a: BTreeSet<&Ordinal> = p.w[*k].iter().filter(|x| *x < dp).collect();
        let b: BTreeSet<&Ordinal> = q.w[*k].iter().filter(|x| *x < dq).collect();
        if a != b {
            return false;
        }
    }
    for a in &shared {
        for b in &shared {
            if a == b {
                continue;
            }
            if p.w[*a].iter().any(|x| p.w[*b].contains(x) && x >= dp) {
                return false;
            }
            if q.w[*a].iter().any(|x| q.w[*b].contains(x) && x >= dq) {
                return false;
            }
        }
    }
    true
}

fn e_at_least(e: &EFunction, a: &Key, b: &Key, g: &Ordinal) -> bool {
    match e.get(a, b) {
        EValue::Top => true,
        EValue::Val(v) => v >= g,
    }
}

pub fn e_separated(w: &BTreeMap<Key, NodeSet>, e: &EFunction) -> bool {
    for (a, wa) in w {
        for (b, wb) in w {
            if a == b {
                continue;
            }
            if wa.iter().any(|x| wb.contains(x) && !e_at_least(e, a, b, &h_of(x))) {
                return false;
            }
        }
    }
    true
}

fn model_in(m: &ModelSet, k: &Key) -> bool {
    match k {
        KappaOrdinal::Countable(a) => a < &m.delta,
        KappaOrdinal::Station(s) => m.stations.contains(s),
    }
}

pub fn model_valid(u: &Universe, m: &ModelSet) -> bool {
    if m.delta.is_zero() || !is_in_ch(&m.delta) {
        return false;
    }
    m.stations.iter().all(|&g| {
        if g >= u.station_count() {
            return false;
        }
        let lower: Vec<Station> = (0..g).filter(|&s| u.is_lambda0(s)).collect();
        lower.last().map_or(true, |l| m.stations.contains(l))
    })
}

fn cut(m: &ModelSet, beta: Station) -> ModelSet {
    ModelSet { delta: m.delta.clone(), stations: m.stations.iter().copied().filter(|&s| s < beta).collect() }
}

fn in_hull(x: &ModelSet, n: &ModelSet) -> bool {
    x.delta < n.delta && x.stations.iter().all(|s| n.stations.contains(s))
}

pub fn comparison_point(u: &Universe, m: &ModelSet, n: &ModelSet) -> Station {
    let common: Vec<Station> = m.stations.iter().copied().filter(|s| n.stations.contains(s)).collect();
    let lambda: Vec<Station> = (0..u.station_count()).filter(|&s| u.is_lambda(s)).collect();
    let ok = |b: Station| common.iter().all(|&c| c < b);
    lambda.into_iter().find(|&b| ok(b)).unwrap_or(u.station_count())
}

pub fn adequate(u: &Universe, a: &BTreeSet<ModelSet>) -> bool {
    if !a.iter().all(|m| model_valid(u, m)) {
        return false;
    }
    for m in a {
        for n in a {
            let b = comparison_point(u, m, n);
            let (mb, nb) = (cut(m, b), cut(n, b));
            if !(in_hull(&mb, n) || in_hull(&nb, m) || mb == nb) {
                return false;
            }
        }
    }
    true
}

pub fn p_valid(u: &Universe, c: &PCondition) -> bool {
    if !pstar_valid(&c.base) || !adequate(u, &c.a) {
        return false;
    }
    for m in &c.a {
        for (a, wa) in &c.base.w {
            for (b, wb) in &c.base.w {
                if a != b && model_in(m, a) && model_in(m, b) && wa.iter().any(|x| wb.contains(x) && x >= &m.delta) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn leq_p(q: &PCondition, p: &PCondition) -> bool {
    leq_pstar(&q.base, &p.base) && p.a.iter().all(|m| q.a.contains(m))
}

/// The θ-projection written out from its definition.
pub fn project(p: &PCondition, theta: Station) -> PCondition {
    let low = |k: &Key| match k {
        KappaOrdinal::Countable(_) => true,
        KappaOrdinal::Station(s) => *s < theta,
    };
    let w = p.base.w.iter().filter(|(k, _)| low(k)).map(|(k, s)| (k.clone(), s.clone())).collect();
    let d = p.base.d.iter().filter(|(a, b)| low(a) && low(b)).cloned().collect();
    let a = p.a.iter().filter(|m| m.stations.iter().all(|&s| s < theta)).cloned().collect();
    PCondition { base: PStarCondition { tree: p.base.tree.clone(), w, d }, a }
}
