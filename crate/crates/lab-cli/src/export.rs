//! Graphviz rendering of trees, with each subtree function's members
//! coloured, and the schema-text form of quotient certificates.

use std::collections::BTreeMap;
use std::fmt::Write;

use forcing_lab::pstar::{Key, PStarCondition};
use forcing_lab::quotient::MultiAmalgam;
use forcing_lab::schema::{Object, Schema, Value};
use forcing_lab::side::PCondition;
use forcing_lab::tree::{NodeSet, Tree};

const PALETTE: [&str; 8] = ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a6a600", "#a65628", "#f781bf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Dot,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "dot" => Ok(Format::Dot),
            _ => Err(format!("unknown format `{s}` (expected text or dot)")),
        }
    }
}

fn key_text(k: &Key) -> String {
    k.to_value().to_string()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `t` with edges from each node to its immediate successors. Nodes
/// in some `w` entry are filled with that entry's colour (wedged when
/// shared); the legend maps colours to indices.
pub fn tree_dot(t: &Tree, w: &BTreeMap<Key, NodeSet>, caption: Option<&str>) -> String {
    let mut s = String::from("digraph tree {\n  node [shape=circle, fontsize=10];\n");
    if let Some(c) = caption {
        let _ = writeln!(s, "  label={};", quote(c));
    }
    if t.is_empty() {
        s.push_str("  empty [label=\"∅\", shape=plaintext];\n}\n");
        return s;
    }
    let colour: BTreeMap<&Key, &str> = w.keys().enumerate().map(|(i, k)| (k, PALETTE[i % PALETTE.len()])).collect();
    for x in t.nodes() {
        let holders: Vec<&str> = w.iter().filter(|(_, set)| set.contains(x)).map(|(k, _)| colour[k]).collect();
        let attrs = match holders.as_slice() {
            [] => String::new(),
            [one] => format!(" [style=filled, fillcolor={}]", quote(one)),
            many => format!(" [style=wedged, fillcolor={}]", quote(&many.join(":"))),
        };
        let _ = writeln!(s, "  {}{attrs};", quote(&x.to_string()));
    }
    for x in t.nodes() {
        for y in t.children(x) {
            let _ = writeln!(s, "  {} -> {};", quote(&x.to_string()), quote(&y.to_string()));
        }
    }
    if !w.is_empty() {
        s.push_str("  subgraph cluster_legend {\n    label=\"indices\";\n    node [shape=box];\n");
        for (k, c) in &colour {
            let _ = writeln!(s, "    {} [style=filled, fillcolor={}];", quote(&format!("W {}", key_text(k))), quote(c));
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}

pub fn pstar_dot(p: &PStarCondition) -> String {
    let commits: Vec<String> = p.d.iter().map(|(a, b)| format!("{}~{}", key_text(a), key_text(b))).collect();
    let caption = (!commits.is_empty()).then(|| format!("D = {{{}}}", commits.join(", ")));
    tree_dot(&p.tree, &p.w, caption.as_deref())
}

pub fn p_dot(p: &PCondition) -> String {
    let models: Vec<String> = p.a.iter().map(|m| m.to_value().to_string()).collect();
    let caption = format!("A = {{{}}}", models.join(", "));
    tree_dot(&p.base.tree, &p.base.w, Some(&caption))
}

/// Renders a parsed object. DOT is only defined for tree-carrying objects.
pub fn export(o: &Object, format: Format) -> Result<String, String> {
    match format {
        Format::Text => Ok(format!("{}\n", o.to_text())),
        Format::Dot => match o {
            Object::Tree(t) => Ok(tree_dot(t, &BTreeMap::new(), None)),
            Object::PStar(p) => Ok(pstar_dot(p)),
            Object::P(p) => Ok(p_dot(p)),
            other => Err(format!("no DOT rendering for `{}` objects", other.to_value().tag().unwrap_or("ordinal"))),
        },
    }
}

/// A multi-pool amalgam as a schema value: the amalgam, the nested rows,
/// the row chosen for each pool and the membership verdict.
pub fn certificate_value(m: &MultiAmalgam) -> Value {
    let num = |n: usize| Value::atom(n.to_string());
    let rows = m.rows.iter().map(|r| Value::tagged("row", r.iter().map(|&i| num(i))));
    Value::tagged(
        "certificate",
        [
            Value::tagged("amalgam", [m.q.to_value()]),
            Value::tagged("rows", rows),
            Value::tagged("chosen", m.chosen_rows.iter().map(|&i| num(i))),
            Value::tagged("member", [Value::atom(m.membership.member.to_string())]),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use forcing_lab::gen::{self, rng};
    use forcing_lab::universe::default_universe;

    #[test]
    fn empty_tree_is_one_node() {
        let s = export(&Object::Tree(Tree::new()), Format::Dot).unwrap();
        assert_eq!(s.matches("label=\"∅\"").count(), 1);
        assert!(!s.contains("->"));
    }

    #[test]
    fn edges_follow_the_immediate_successors() {
        let mut r = rng(1);
        let u = default_universe();
        for _ in 0..50 {
            let p = gen::random_valid_p(&mut r, &u, 10, 4, 2);
            let s = p_dot(&p);
            let t = p.tree();
            assert_eq!(s.matches(" -> ").count(), t.len().saturating_sub(1));
            for k in p.base.w.keys() {
                assert!(s.contains(&format!("W {}", key_text(k))));
            }
        }
    }

    #[test]
    fn models_have_no_dot_form() {
        let o = forcing_lab::schema::parse_object("(model w^w*1 0)").unwrap();
        assert!(export(&o, Format::Dot).is_err());
        assert_eq!(export(&o, Format::Text).unwrap(), "(model w^w*1 0)\n");
    }
}
