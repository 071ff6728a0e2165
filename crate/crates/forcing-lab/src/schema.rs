//! Canonical text schema.
//!
//! Every object prints as a parenthesized form `(tag item ...)` with single
//! spaces, sets in their `Ord` order and ordinals in the ordinal rendering,
//! so two objects are equal exactly when their texts are. The parser also
//! accepts extra whitespace and `;` line comments, which is what config
//! files need.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ccc::{EFunction, EValue, SimConfig};
use crate::ordinal::{parse_ordinal, Ordinal};
use crate::pstar::{commit, Commit, Key, PStarCondition};
use crate::side::PCondition;
use crate::tree::{NodeSet, Tree};
use crate::universe::{build_universe, KappaOrdinal, ModelSet, Station, Universe, UniverseConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Nesting deeper than this is rejected rather than recursed into.
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("expected {expected}, found `{found}`")]
    Shape { expected: String, found: String },
    #[error("invalid value: {0}")]
    Invalid(String),
}

fn shape(expected: &str, found: &Value) -> SchemaError {
    let mut found = found.to_string();
    if found.len() > 60 {
        let cut = (0..=60).rev().find(|&i| found.is_char_boundary(i)).unwrap_or(0);
        found.truncate(cut);
        found.push_str("...");
    }
    SchemaError::Shape { expected: expected.into(), found }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Atom(String),
    List(Vec<Value>),
}

impl Value {
    pub fn atom(s: impl Into<String>) -> Value {
        Value::Atom(s.into())
    }

    pub fn tagged(tag: &str, items: impl IntoIterator<Item = Value>) -> Value {
        let mut v = vec![Value::atom(tag)];
        v.extend(items);
        Value::List(v)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            Value::List(_) => None,
        }
    }

    /// The items after `tag`, if this is a list headed by it.
    pub fn tagged_items(&self, tag: &str) -> Result<&[Value], SchemaError> {
        match self {
            Value::List(v) if v.first().and_then(Value::as_atom) == Some(tag) => Ok(&v[1..]),
            _ => Err(shape(&format!("({tag} ...)"), self)),
        }
    }

    pub fn tag(&self) -> Option<&str> {
        match self {
            Value::List(v) => v.first().and_then(Value::as_atom),
            Value::Atom(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => f.write_str(s),
            Value::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn is_atom_byte(b: u8) -> bool {
    b.is_ascii_graphic() && b != b'(' && b != b')' && b != b';'
}

struct Reader<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn skip_trivia(&mut self) {
        while self.pos < self.s.len() {
            match self.s[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b';' => {
                    while self.pos < self.s.len() && self.s[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn err(&self, msg: &str) -> SchemaError {
        SchemaError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn value(&mut self, depth: usize) -> Result<Value, SchemaError> {
        if depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.skip_trivia();
        match self.s.get(self.pos) {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.s.get(self.pos) {
                        None => return Err(self.err("unclosed `(`")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Value::List(items));
                        }
                        Some(_) => items.push(self.value(depth + 1)?),
                    }
                }
            }
            Some(b')') => Err(self.err("unexpected `)`")),
            Some(&b) if is_atom_byte(b) => {
                let start = self.pos;
                while self.pos < self.s.len() && is_atom_byte(self.s[self.pos]) {
                    self.pos += 1;
                }
                // Atom bytes are ASCII, so this slice is valid UTF-8.
                Ok(Value::Atom(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()))
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }
}

/// Parses exactly one value; trailing non-trivia is an error.
pub fn parse_value(s: &str) -> Result<Value, SchemaError> {
    let mut r = Reader { s: s.as_bytes(), pos: 0 };
    let v = r.value(0)?;
    r.skip_trivia();
    if r.pos != r.s.len() {
        return Err(r.err("trailing input"));
    }
    Ok(v)
}

/// Parses a sequence of values, one document per top-level form.
pub fn parse_values(s: &str) -> Result<Vec<Value>, SchemaError> {
    let mut r = Reader { s: s.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.pos == r.s.len() {
            return Ok(out);
        }
        out.push(r.value(0)?);
    }
}

/// A type with a canonical text form.
pub trait Schema: Sized {
    fn to_value(&self) -> Value;
    fn from_value(v: &Value) -> Result<Self, SchemaError>;

    fn to_text(&self) -> String {
        self.to_value().to_string()
    }

    fn from_text(s: &str) -> Result<Self, SchemaError> {
        Self::from_value(&parse_value(s)?)
    }
}

pub fn parse_u64(v: &Value) -> Result<u64, SchemaError> {
    let s = v.as_atom().ok_or_else(|| shape("an integer", v))?;
    // Canonical integers only: no sign, no leading zeros.
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return Err(shape("an integer", v));
    }
    s.parse().map_err(|_| SchemaError::Invalid(format!("integer out of range: {s}")))
}

fn parse_u32(v: &Value) -> Result<u32, SchemaError> {
    u32::try_from(parse_u64(v)?).map_err(|_| SchemaError::Invalid(format!("{v} does not fit in 32 bits")))
}

pub fn parse_f64(v: &Value) -> Result<f64, SchemaError> {
    let s = v.as_atom().ok_or_else(|| shape("a number", v))?;
    let x: f64 = s.parse().map_err(|_| shape("a number", v))?;
    // Only finite numbers in Rust's shortest rendering, so printing is stable.
    if !x.is_finite() || format!("{x:?}") != s {
        return Err(shape("a canonical number", v));
    }
    Ok(x)
}

pub fn f64_value(x: f64) -> Value {
    Value::atom(format!("{x:?}"))
}

fn exactly<'a, const N: usize>(items: &'a [Value], what: &str) -> Result<&'a [Value; N], SchemaError> {
    items.try_into().map_err(|_| SchemaError::Shape {
        expected: format!("{N} items in {what}"),
        found: format!("{} items", items.len()),
    })
}

/// Collects into a set, rejecting duplicates and out-of-order items so that
/// only the canonical text is accepted.
fn canonical_set<T: Ord>(items: Vec<T>, what: &str) -> Result<BTreeSet<T>, SchemaError> {
    if items.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SchemaError::Invalid(format!("{what} not strictly increasing")));
    }
    Ok(items.into_iter().collect())
}

fn canonical_map<K: Ord, V>(items: Vec<(K, V)>, what: &str) -> Result<BTreeMap<K, V>, SchemaError> {
    if items.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(SchemaError::Invalid(format!("{what} keys not strictly increasing")));
    }
    Ok(items.into_iter().collect())
}

impl Schema for Ordinal {
    fn to_value(&self) -> Value {
        Value::atom(self.to_string())
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let s = v.as_atom().ok_or_else(|| shape("an ordinal", v))?;
        parse_ordinal(s).map_err(|e| SchemaError::Invalid(e.to_string()))
    }
}

/// Stations print as `s<n>`, countable ordinals in the ordinal rendering.
impl Schema for KappaOrdinal {
    fn to_value(&self) -> Value {
        match self {
            KappaOrdinal::Countable(a) => a.to_value(),
            KappaOrdinal::Station(s) => Value::atom(format!("s{s}")),
        }
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        match v.as_atom() {
            Some(s) if s.starts_with('s') => Ok(KappaOrdinal::Station(parse_u32(&Value::atom(&s[1..]))?)),
            Some(_) => Ok(KappaOrdinal::Countable(Ordinal::from_value(v)?)),
            None => Err(shape("an index", v)),
        }
    }
}

fn set_value<T: Schema>(tag: &str, s: &BTreeSet<T>) -> Value {
    Value::tagged(tag, s.iter().map(Schema::to_value))
}

fn set_from<T: Schema + Ord>(tag: &str, v: &Value) -> Result<BTreeSet<T>, SchemaError> {
    let items = v.tagged_items(tag)?.iter().map(T::from_value).collect::<Result<Vec<_>, _>>()?;
    canonical_set(items, tag)
}

fn commit_value((a, b): &Commit) -> Value {
    Value::List(vec![a.to_value(), b.to_value()])
}

fn commit_from(v: &Value) -> Result<Commit, SchemaError> {
    match v {
        Value::List(items) => {
            let [a, b] = exactly::<2>(items, "a commitment")?;
            let (a, b) = (Key::from_value(a)?, Key::from_value(b)?);
            if a >= b {
                return Err(SchemaError::Invalid("commitment not in increasing order".into()));
            }
            Ok(commit(a, b))
        }
        Value::Atom(_) => Err(shape("(a b)", v)),
    }
}

/// `(tree (x p ...) ...)`: each node with its predecessors. Any predecessor
/// map round-trips, including ones the validator rejects.
impl Schema for Tree {
    fn to_value(&self) -> Value {
        Value::tagged(
            "tree",
            self.nodes().map(|x| Value::List(std::iter::once(x).chain(self.preds_of(x)).map(Schema::to_value).collect())),
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let mut entries = Vec::new();
        for item in v.tagged_items("tree")? {
            let Value::List(parts) = item else { return Err(shape("(node preds ...)", item)) };
            let Some((x, preds)) = parts.split_first() else { return Err(shape("(node preds ...)", item)) };
            let preds = preds.iter().map(Ordinal::from_value).collect::<Result<Vec<_>, _>>()?;
            entries.push((Ordinal::from_value(x)?, canonical_set(preds, "predecessors")?));
        }
        let map = canonical_map(entries, "tree")?;
        let mut t = Tree::new();
        for (x, p) in map {
            t.insert_raw(x, p);
        }
        Ok(t)
    }
}

impl Schema for PStarCondition {
    fn to_value(&self) -> Value {
        Value::tagged(
            "pstar",
            [
                self.tree.to_value(),
                Value::tagged(
                    "w",
                    self.w.iter().map(|(k, s)| Value::List(std::iter::once(k.to_value()).chain(s.iter().map(Schema::to_value)).collect())),
                ),
                Value::tagged("d", self.d.iter().map(commit_value)),
            ],
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let [t, w, d] = exactly::<3>(v.tagged_items("pstar")?, "pstar")?;
        let mut entries = Vec::new();
        for item in w.tagged_items("w")? {
            let Value::List(parts) = item else { return Err(shape("(index nodes ...)", item)) };
            let Some((k, nodes)) = parts.split_first() else { return Err(shape("(index nodes ...)", item)) };
            let nodes = nodes.iter().map(Ordinal::from_value).collect::<Result<Vec<_>, _>>()?;
            entries.push((Key::from_value(k)?, canonical_set::<Ordinal>(nodes, "subtree")? as NodeSet));
        }
        let commits = d.tagged_items("d")?.iter().map(commit_from).collect::<Result<Vec<_>, _>>()?;
        Ok(PStarCondition {
            tree: Tree::from_value(t)?,
            w: canonical_map(entries, "w")?,
            d: canonical_set(commits, "d")?,
        })
    }
}

/// `(model δ s ...)` with stations as bare numbers.
impl Schema for ModelSet {
    fn to_value(&self) -> Value {
        Value::tagged(
            "model",
            std::iter::once(self.delta.to_value()).chain(self.stations.iter().map(|s| Value::atom(s.to_string()))),
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let items = v.tagged_items("model")?;
        let Some((delta, stations)) = items.split_first() else { return Err(shape("(model δ stations ...)", v)) };
        let stations = stations.iter().map(parse_u32).collect::<Result<Vec<Station>, _>>()?;
        Ok(ModelSet { delta: Ordinal::from_value(delta)?, stations: canonical_set(stations, "model stations")? })
    }
}

impl Schema for PCondition {
    fn to_value(&self) -> Value {
        Value::tagged("p", [self.base.to_value(), set_value("a", &self.a)])
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let [base, a] = exactly::<2>(v.tagged_items("p")?, "p")?;
        Ok(PCondition { base: PStarCondition::from_value(base)?, a: set_from("a", a)? })
    }
}

fn stations_value(tag: &str, s: &BTreeSet<Station>) -> Value {
    Value::tagged(tag, s.iter().map(|x| Value::atom(x.to_string())))
}

fn stations_from(tag: &str, v: &Value) -> Result<BTreeSet<Station>, SchemaError> {
    let items = v.tagged_items(tag)?.iter().map(parse_u32).collect::<Result<Vec<_>, _>>()?;
    canonical_set(items, tag)
}

impl Schema for UniverseConfig {
    fn to_value(&self) -> Value {
        Value::tagged(
            "universe",
            [
                Value::atom(self.stations.to_string()),
                stations_value("lambda0", &self.lambda0),
                stations_value("lambda", &self.lambda),
                stations_value("sigma", &self.sigma),
                stations_value("extra-cof", &self.extra_cof),
            ],
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let [n, l0, l, s, x] = exactly::<5>(v.tagged_items("universe")?, "universe")?;
        Ok(UniverseConfig {
            stations: parse_u32(n)?,
            lambda0: stations_from("lambda0", l0)?,
            lambda: stations_from("lambda", l)?,
            sigma: stations_from("sigma", s)?,
            extra_cof: stations_from("extra-cof", x)?,
        })
    }
}

/// Universes travel as their config; parsing rebuilds and validates them.
impl Schema for Universe {
    fn to_value(&self) -> Value {
        self.config().to_value()
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        build_universe(&UniverseConfig::from_value(v)?).map_err(|e| SchemaError::Invalid(e.to_string()))
    }
}

impl Schema for EValue {
    fn to_value(&self) -> Value {
        match self {
            EValue::Val(a) => a.to_value(),
            EValue::Top => Value::atom("top"),
        }
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        match v.as_atom() {
            Some("top") => Ok(EValue::Top),
            _ => Ok(EValue::Val(Ordinal::from_value(v)?)),
        }
    }
}

/// `(e default (a b value) ...)`; table entries equal to the default are
/// dropped on parse, so the table stays canonical.
impl Schema for EFunction {
    fn to_value(&self) -> Value {
        Value::tagged(
            "e",
            std::iter::once(self.default_value().to_value()).chain(
                self.entries()
                    .filter(|(_, v)| *v != self.default_value())
                    .map(|((a, b), v)| Value::List(vec![a.to_value(), b.to_value(), v.to_value()])),
            ),
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let items = v.tagged_items("e")?;
        let Some((default, rest)) = items.split_first() else { return Err(shape("(e default entries ...)", v)) };
        let mut e = EFunction::constant(EValue::from_value(default)?);
        let mut seen = Vec::new();
        for item in rest {
            let Value::List(parts) = item else { return Err(shape("(a b value)", item)) };
            let [a, b, val] = exactly::<3>(parts, "an e entry")?;
            let c = commit_from(&Value::List(vec![a.clone(), b.clone()]))?;
            let val = EValue::from_value(val)?;
            if &val == e.default_value() {
                return Err(SchemaError::Invalid("e entry repeats the default".into()));
            }
            seen.push(c.clone());
            e.set(c.0, c.1, val);
        }
        canonical_set(seen, "e entries")?;
        Ok(e)
    }
}

impl Schema for SimConfig {
    fn to_value(&self) -> Value {
        Value::tagged(
            "sim",
            [
                Value::tagged("indices", self.indices.iter().map(Schema::to_value)),
                Value::tagged("height", [Value::atom(self.height.to_string())]),
                Value::tagged("pairs", self.pairs.iter().map(commit_value)),
                Value::tagged("seed", [Value::atom(self.seed.to_string())]),
                self.e.to_value(),
                Value::tagged("commit-round", [Value::atom(self.commit_round.to_string())]),
                Value::tagged("share", [f64_value(self.share_probability)]),
            ],
        )
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let [ix, h, pairs, seed, e, round, share] = exactly::<7>(v.tagged_items("sim")?, "sim")?;
        let one = |tag: &str, v: &Value| -> Result<Value, SchemaError> {
            Ok(exactly::<1>(v.tagged_items(tag)?, tag)?[0].clone())
        };
        let probability = parse_f64(&one("share", share)?)?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(SchemaError::Invalid("share probability outside [0, 1]".into()));
        }
        Ok(SimConfig {
            indices: ix.tagged_items("indices")?.iter().map(Key::from_value).collect::<Result<_, _>>()?,
            height: parse_u64(&one("height", h)?)?,
            pairs: pairs.tagged_items("pairs")?.iter().map(commit_from).collect::<Result<_, _>>()?,
            seed: parse_u64(&one("seed", seed)?)?,
            e: EFunction::from_value(e)?,
            commit_round: parse_u64(&one("commit-round", round)?)?,
            share_probability: probability,
        })
    }
}

/// Any top-level object, dispatched on its tag.
#[derive(Clone, Debug, PartialEq)]
pub enum Object {
    Ordinal(Ordinal),
    Tree(Tree),
    PStar(PStarCondition),
    P(PCondition),
    Model(ModelSet),
    Universe(Universe),
    E(EFunction),
    Sim(SimConfig),
}

impl Schema for Object {
    fn to_value(&self) -> Value {
        match self {
            Object::Ordinal(x) => x.to_value(),
            Object::Tree(x) => x.to_value(),
            Object::PStar(x) => x.to_value(),
            Object::P(x) => x.to_value(),
            Object::Model(x) => x.to_value(),
            Object::Universe(x) => x.to_value(),
            Object::E(x) => x.to_value(),
            Object::Sim(x) => x.to_value(),
        }
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        Ok(match v.tag() {
            None => Object::Ordinal(Ordinal::from_value(v)?),
            Some("tree") => Object::Tree(Tree::from_value(v)?),
            Some("pstar") => Object::PStar(PStarCondition::from_value(v)?),
            Some("p") => Object::P(PCondition::from_value(v)?),
            Some("model") => Object::Model(ModelSet::from_value(v)?),
            Some("universe") => Object::Universe(Universe::from_value(v)?),
            Some("e") => Object::E(EFunction::from_value(v)?),
            Some("sim") => Object::Sim(SimConfig::from_value(v)?),
            Some(_) => return Err(shape("a known object tag", v)),
        })
    }
}

/// Fuzzing entry point: parses any object and checks that a successful
/// parse reprints to a form that parses back to the same object.
pub fn parse_object(s: &str) -> Result<Object, SchemaError> {
    let o = Object::from_text(s)?;
    debug_assert_eq!(Object::from_text(&o.to_text()).as_ref(), Ok(&o));
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::node;
    use crate::universe::{default_universe, gap_universe};

    fn round_trip<T: Schema + PartialEq + fmt::Debug>(x: &T) {
        let s = x.to_text();
        let back = T::from_text(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert_eq!(&back, x);
        assert_eq!(back.to_text(), s);
    }

    fn sample() -> PCondition {
        let t = Tree::chain([Ordinal::zero(), node(1, 0), node(2, 0)]);
        let base = PStarCondition {
            tree: t,
            w: [
                (KappaOrdinal::nat(3), [Ordinal::zero(), node(1, 0)].into_iter().collect()),
                (KappaOrdinal::Station(4), [Ordinal::zero()].into_iter().collect()),
            ]
            .into_iter()
            .collect(),
            d: [commit(KappaOrdinal::nat(3), KappaOrdinal::Station(4))].into_iter().collect(),
        };
        PCondition::new(base, [ModelSet::new(Ordinal::ch_point(1), [0, 2])].into_iter().collect())
    }

    #[test]
    fn known_rendering() {
        assert_eq!(
            sample().to_text(),
            "(p (pstar (tree (0) (w^1*1 0) (w^1*2 0 w^1*1)) (w (w^0*3 0 w^1*1) (s4 0)) (d (w^0*3 s4))) (a (model w^w*1 0 2)))"
        );
        assert_eq!(Tree::new().to_text(), "(tree)");
    }

    #[test]
    fn round_trips() {
        round_trip(&sample());
        round_trip(&sample().base);
        round_trip(&Tree::root_only());
        round_trip(&default_universe());
        round_trip(&gap_universe());
        let mut e = EFunction::constant_top();
        e.set(KappaOrdinal::nat(1), KappaOrdinal::nat(2), EValue::Val(Ordinal::nat(5)));
        round_trip(&e);
        let cfg = SimConfig::new(vec![KappaOrdinal::nat(1), KappaOrdinal::Station(2)], 4, 9).commit_all();
        round_trip(&cfg);
        round_trip(&Object::P(sample()));
    }

    #[test]
    fn comments_and_spacing_are_accepted() {
        let s = "; a model\n( model  w^w*1\n 0 2 ) ; trailing\n";
        assert_eq!(ModelSet::from_text(s).unwrap(), ModelSet::new(Ordinal::ch_point(1), [0, 2]));
    }

    #[test]
    fn non_canonical_inputs_are_rejected() {
        for bad in [
            "(model w^w*1 2 0)",
            "(model w^w*1 0 0)",
            "(model w^w*1 01)",
            "(tree (w^1*1) (0))",
            "(pstar (tree) (w) (d (s4 w^0*3)))",
            "(e top (1 2 top))",
            "(model",
            "(model))",
            "(unknown)",
        ] {
            assert!(Object::from_text(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn depth_is_bounded() {
        let deep = "(".repeat(10_000) + &")".repeat(10_000);
        assert!(matches!(parse_value(&deep), Err(SchemaError::Syntax { .. })));
    }

    #[test]
    fn invalid_universe_is_rejected() {
        assert!(matches!(
            Universe::from_text("(universe 0 (lambda0) (lambda) (sigma) (extra-cof))"),
            Err(SchemaError::Invalid(_))
        ));
    }
}
