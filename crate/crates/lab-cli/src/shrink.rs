//! Greedy counterexample shrinking. Each pass proposes one deletion; the
//! caller's predicate re-validates the hypotheses and confirms the failure
//! is still there.

use forcing_lab::ordinal::Ordinal;
use forcing_lab::pstar::Key;
use forcing_lab::side::PCondition;
use forcing_lab::tree::NodeSet;

fn without_model(p: &PCondition, i: usize) -> PCondition {
    let mut q = p.clone();
    let m = q.a.iter().nth(i).cloned().expect("index in range");
    q.a.remove(&m);
    q
}

fn without_key(p: &PCondition, k: &Key) -> PCondition {
    let mut q = p.clone();
    q.base.w.remove(k);
    q.base.d.retain(|(a, b)| a != k && b != k);
    q
}

fn without_node(p: &PCondition, x: &Ordinal) -> PCondition {
    let mut q = p.clone();
    let keep: NodeSet = q.base.tree.nodes().filter(|y| *y != x).cloned().collect();
    q.base.tree = q.base.tree.induced(&keep);
    for w in q.base.w.values_mut() {
        w.remove(x);
    }
    q
}

/// Smaller conditions one deletion away: models, then indices, then leaves.
pub fn candidates(p: &PCondition) -> Vec<PCondition> {
    let mut out: Vec<PCondition> = (0..p.a.len()).map(|i| without_model(p, i)).collect();
    out.extend(p.base.w.keys().map(|k| without_key(p, k)));
    let t = &p.base.tree;
    let leaves: Vec<&Ordinal> = t.nodes().filter(|x| t.children(x).is_empty()).collect();
    // The root goes last, and only once it is the only node.
    out.extend(leaves.into_iter().filter(|x| !x.is_zero() || t.len() == 1).map(|x| without_node(p, x)));
    out
}

/// Repeats the first accepted deletion until none is accepted.
pub fn shrink_p(p: &PCondition, still_fails: impl Fn(&PCondition) -> bool) -> PCondition {
    let mut cur = p.clone();
    'outer: loop {
        for c in candidates(&cur) {
            if still_fails(&c) {
                cur = c;
                continue 'outer;
            }
        }
        return cur;
    }
}
