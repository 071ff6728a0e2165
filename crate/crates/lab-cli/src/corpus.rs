//! Instance corpora: one schema value per line, every instance checked
//! against its kind's hypotheses when generated and again when verified.

use std::fmt;
use std::str::FromStr;

use forcing_lab::ccc::{is_valid_pprime, EFunction};
use forcing_lab::gen::{self, rng, GAP_THETA};
use forcing_lab::ordinal::Ordinal;
use forcing_lab::pstar::{delta_system_root, is_split_pair, is_valid_pstar, PStarCondition};
use forcing_lab::quotient::quotient_amalgamate;
use forcing_lab::schema::{parse_values, Schema, SchemaError, Value};
use forcing_lab::side::{amalgamate_fingerprint, is_valid_p, PCondition};
use forcing_lab::tree::{validate_tree, Tree};
use forcing_lab::universe::{
    adequate, default_universe, gap_universe, random_universe, ModelSet, ModelSetFamily, Station, Universe,
};
use rand::Rng;

use crate::shrink::shrink_p;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Tree,
    PStar,
    SplitFamily,
    PPrime,
    ModelUniverse,
    P,
    FingerprintPool,
    QuotientScenario,
}

pub const KINDS: [(&str, Kind); 8] = [
    ("tree", Kind::Tree),
    ("pstar", Kind::PStar),
    ("split-family", Kind::SplitFamily),
    ("pprime", Kind::PPrime),
    ("model-universe", Kind::ModelUniverse),
    ("p", Kind::P),
    ("fingerprint-pool", Kind::FingerprintPool),
    ("quotient-scenario", Kind::QuotientScenario),
];

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        KINDS.iter().find(|(n, _)| *n == s).map(|(_, k)| *k).ok_or_else(|| {
            let names: Vec<&str> = KINDS.iter().map(|(n, _)| *n).collect();
            format!("unknown kind `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = KINDS.iter().find(|(_, k)| k == self).map(|(n, _)| *n).expect("every kind is listed");
        f.write_str(name)
    }
}

/// Conditions in `p` and `fingerprint-pool` instances live in the default
/// universe; quotient scenarios live in the gap universe at its θ.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Tree(Tree),
    PStar(PStarCondition),
    SplitFamily { levels: Vec<Ordinal>, parts: Vec<PStarCondition> },
    PPrime { e: EFunction, cond: PStarCondition },
    ModelUniverse { universe: Universe, a: ModelSetFamily },
    P(PCondition),
    FingerprintPool(Vec<(PCondition, ModelSet)>),
    QuotientScenario { p: PCondition, s: PCondition },
}

fn invalid(s: impl Into<String>) -> SchemaError {
    SchemaError::Invalid(s.into())
}

impl Schema for Instance {
    fn to_value(&self) -> Value {
        match self {
            Instance::Tree(t) => t.to_value(),
            Instance::PStar(p) => p.to_value(),
            Instance::SplitFamily { levels, parts } => Value::tagged(
                "split-family",
                std::iter::once(Value::tagged("levels", levels.iter().map(Schema::to_value)))
                    .chain(parts.iter().map(Schema::to_value)),
            ),
            Instance::PPrime { e, cond } => Value::tagged("pprime", [e.to_value(), cond.to_value()]),
            Instance::ModelUniverse { universe, a } => Value::tagged(
                "model-universe",
                [universe.to_value(), Value::tagged("a", a.iter().map(Schema::to_value))],
            ),
            Instance::P(p) => p.to_value(),
            Instance::FingerprintPool(entries) => Value::tagged(
                "fingerprint-pool",
                entries.iter().map(|(p, n)| Value::tagged("entry", [p.to_value(), n.to_value()])),
            ),
            Instance::QuotientScenario { p, s } => Value::tagged("quotient-scenario", [p.to_value(), s.to_value()]),
        }
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        Ok(match v.tag() {
            Some("tree") => Instance::Tree(Tree::from_value(v)?),
            Some("pstar") => Instance::PStar(PStarCondition::from_value(v)?),
            Some("p") => Instance::P(PCondition::from_value(v)?),
            Some("split-family") => {
                let items = v.tagged_items("split-family")?;
                let (first, rest) = items.split_first().ok_or_else(|| invalid("split-family needs levels"))?;
                let levels = first.tagged_items("levels")?.iter().map(Ordinal::from_value).collect::<Result<_, _>>()?;
                let parts = rest.iter().map(PStarCondition::from_value).collect::<Result<_, _>>()?;
                Instance::SplitFamily { levels, parts }
            }
            Some("pprime") => match v.tagged_items("pprime")? {
                [e, c] => Instance::PPrime { e: EFunction::from_value(e)?, cond: PStarCondition::from_value(c)? },
                _ => return Err(invalid("pprime takes an e function and a condition")),
            },
            Some("model-universe") => match v.tagged_items("model-universe")? {
                [u, a] => Instance::ModelUniverse {
                    universe: Universe::from_value(u)?,
                    a: a.tagged_items("a")?.iter().map(ModelSet::from_value).collect::<Result<_, _>>()?,
                },
                _ => return Err(invalid("model-universe takes a universe and a model list")),
            },
            Some("fingerprint-pool") => Instance::FingerprintPool(
                v.tagged_items("fingerprint-pool")?
                    .iter()
                    .map(|e| match e.tagged_items("entry")? {
                        [p, n] => Ok((PCondition::from_value(p)?, ModelSet::from_value(n)?)),
                        _ => Err(invalid("entry takes a condition and a model")),
                    })
                    .collect::<Result<_, _>>()?,
            ),
            Some("quotient-scenario") => match v.tagged_items("quotient-scenario")? {
                [p, s] => Instance::QuotientScenario { p: PCondition::from_value(p)?, s: PCondition::from_value(s)? },
                _ => return Err(invalid("quotient-scenario takes two conditions")),
            },
            _ => return Err(invalid(format!("`{}` is not an instance", v.tag().unwrap_or("atom")))),
        })
    }
}

/// Fuzzing entry point: every line of a corpus file.
pub fn parse_corpus(s: &str) -> Result<Vec<Instance>, SchemaError> {
    parse_values(s)?.iter().map(Instance::from_value).collect()
}

const BUDGET: usize = 500;

/// Why an instance fails its kind's hypotheses, or `None`. Invalid
/// conditions are shrunk before they are described.
pub fn violation(inst: &Instance) -> Option<String> {
    match inst {
        Instance::Tree(t) => (!validate_tree(t).is_standard).then(|| "tree is not standard".to_string()),
        Instance::PStar(p) => (!is_valid_pstar(p)).then(|| "condition is not valid".to_string()),
        Instance::SplitFamily { levels, parts } => {
            if parts.len() < 2 || levels.len() != parts.len() {
                return Some(format!("{} parts for {} levels", parts.len(), levels.len()));
            }
            if let Some(i) = parts.iter().position(|p| !is_valid_pstar(p)) {
                return Some(format!("part {i} is not valid"));
            }
            for i in 0..parts.len() {
                for j in i + 1..parts.len() {
                    match is_split_pair(&parts[i], &parts[j], &levels[i], &levels[j]) {
                        Ok(true) => {}
                        Ok(false) => return Some(format!("parts {i} and {j} are not split")),
                        Err(e) => return Some(format!("parts {i} and {j}: {e}")),
                    }
                }
            }
            let doms: Vec<_> = parts.iter().map(PStarCondition::dom).collect();
            delta_system_root(&doms).err().map(|(i, j)| format!("domains {i} and {j} leave the Δ-system root"))
        }
        Instance::PPrime { e, cond } => (!is_valid_pprime(cond, e)).then(|| "condition is not e-separated".to_string()),
        Instance::ModelUniverse { universe, a } => {
            if let Some(m) = a.iter().find(|m| universe.validate_model(m).is_err()) {
                return Some(format!("{} is not a model", m.to_text()));
            }
            (!adequate(universe, a)).then(|| "family is not adequate".to_string())
        }
        Instance::P(p) => {
            let u = default_universe();
            if is_valid_p(&u, p) {
                return None;
            }
            let small = shrink_p(p, |c| !is_valid_p(&u, c));
            Some(format!("condition is not valid; shrunk: {}", small.to_text()))
        }
        Instance::FingerprintPool(entries) => {
            amalgamate_fingerprint(&default_universe(), entries).err().map(|e| e.to_string())
        }
        Instance::QuotientScenario { p, s } => {
            quotient_amalgamate(&gap_universe(), p, s, GAP_THETA, &[], BUDGET).err().map(|e| e.to_string())
        }
    }
}

fn one(r: &mut rand_chacha::ChaCha8Rng, kind: Kind) -> Instance {
    let u = default_universe();
    let pool = gen::key_pool(&u);
    match kind {
        Kind::Tree => Instance::Tree(gen::random_tree(r, 10, 2)),
        Kind::PStar => {
            let t = gen::random_tree(r, 10, 2);
            Instance::PStar(gen::random_pstar_on(r, &t, &pool, 4))
        }
        Kind::SplitFamily => {
            let d = r.gen_range(2..=4);
            let (parts, levels) = gen::split_family(r, &u, d);
            Instance::SplitFamily { levels, parts }
        }
        Kind::PPrime => {
            let t = gen::random_tree(r, 10, 2);
            let cond = gen::random_pstar_on(r, &t, &pool, 4);
            let keys: Vec<_> = cond.w.keys().cloned().collect();
            let e = gen::random_e(r, &keys, 0.3);
            Instance::PPrime { e, cond }
        }
        Kind::ModelUniverse => {
            let n: u32 = r.gen_range(6..=14);
            let universe = random_universe(n, r.gen()).expect("random universes are well formed");
            let k = r.gen_range(1..=4);
            let a = gen::random_adequate(r, &universe, k, 4);
            Instance::ModelUniverse { universe, a }
        }
        Kind::P => Instance::P(gen::random_valid_p(r, &u, 10, 4, 3)),
        Kind::FingerprintPool => {
            let d = r.gen_range(2..=3);
            let stations: Vec<Station> = (0..u.station_count()).collect();
            Instance::FingerprintPool(gen::copy_tuple(r, &u, d, &stations).parts())
        }
        Kind::QuotientScenario => {
            let (p, s) = gen::projection_pair(r, &gap_universe());
            Instance::QuotientScenario { p, s }
        }
    }
}

/// `count` instances of `kind`. Draws that fail validation are discarded,
/// so the corpus depends only on `(kind, count, seed)`.
pub fn generate(kind: Kind, count: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let inst = one(&mut r, kind);
        if violation(&inst).is_none() {
            out.push(inst);
        }
    }
    out
}

pub fn render(corpus: &[Instance]) -> String {
    corpus.iter().map(|i| format!("{}\n", i.to_text())).collect()
}

/// Per-line outcome of a corpus check, in file order.
pub fn verify(corpus: &[Instance]) -> Vec<(usize, String)> {
    corpus.iter().enumerate().filter_map(|(i, inst)| violation(inst).map(|v| (i + 1, v))).collect()
}
