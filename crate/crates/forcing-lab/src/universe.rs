//! A finite surrogate for the side-condition universe.
//!
//! κ is modelled as the countable ordinals followed by finitely many
//! stations. A model is its ω₁-trace `delta ∈ C_h` plus a finite set of
//! stations. Skolem hulls are support hulls: an object lies in `Sk(N)` when
//! every countable ordinal it mentions is below `delta_N` and every station
//! it mentions belongs to `N`. No elementarity is claimed; structural
//! checks built on this are conditional and report counterexamples.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ordinal::{is_in_ch, Ordinal};

pub type Station = u32;

/// An element of κ: countable ordinals sit below every station.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KappaOrdinal {
    Countable(Ordinal),
    Station(Station),
}

impl KappaOrdinal {
    pub fn nat(n: u64) -> Self {
        KappaOrdinal::Countable(Ordinal::nat(n))
    }

    /// Membership in the station cut `θ`, i.e. `self < θ`.
    pub fn below_station(&self, theta: Station) -> bool {
        match self {
            KappaOrdinal::Countable(_) => true,
            KappaOrdinal::Station(s) => *s < theta,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationAttrs {
    pub lambda0: bool,
    pub cof_gt_omega: bool,
    pub lambda: bool,
    pub sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("universe has no stations")]
    NoStations,
    #[error("universe has no comparison points (Λ is empty)")]
    EmptyLambda,
    #[error("universe has no Σ station")]
    EmptySigma,
    #[error("station {0}: {1}")]
    BadStation(Station, &'static str),
    #[error("station {0} does not exist")]
    UnknownStation(Station),
    #[error("model trace {0} is not a nonzero point of C_h")]
    BadTrace(String),
    #[error("model misses {missing}, the largest Λ₀ station below {from}")]
    NotClosed { from: Station, missing: Station },
    #[error("{0} is not in Λ")]
    NotLambda(Station),
    #[error("model is not in the set")]
    NotMember,
    #[error("input set is not adequate")]
    NotAdequate,
    #[error("surrogate fidelity counterexample: {0}")]
    Fidelity(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniverseConfig {
    pub stations: u32,
    pub lambda0: BTreeSet<Station>,
    pub lambda: BTreeSet<Station>,
    pub sigma: BTreeSet<Station>,
    /// Stations with uncountable cofinality besides those in Λ.
    pub extra_cof: BTreeSet<Station>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Universe {
    attrs: Vec<StationAttrs>,
}

impl Universe {
    pub fn station_count(&self) -> u32 {
        self.attrs.len() as u32
    }

    pub fn attrs(&self, s: Station) -> Option<StationAttrs> {
        self.attrs.get(s as usize).copied()
    }

    pub fn is_lambda(&self, s: Station) -> bool {
        self.attrs(s).is_some_and(|a| a.lambda)
    }

    pub fn is_lambda0(&self, s: Station) -> bool {
        self.attrs(s).is_some_and(|a| a.lambda0)
    }

    pub fn is_sigma(&self, s: Station) -> bool {
        self.attrs(s).is_some_and(|a| a.sigma)
    }

    pub fn lambda_stations(&self) -> impl Iterator<Item = Station> + '_ {
        (0..self.station_count()).filter(|&s| self.is_lambda(s))
    }

    pub fn sigma_stations(&self) -> impl Iterator<Item = Station> + '_ {
        (0..self.station_count()).filter(|&s| self.is_sigma(s))
    }

    /// sup(γ ∩ Λ₀) read as the largest Λ₀ station strictly below γ.
    pub fn lambda0_below(&self, g: Station) -> Option<Station> {
        (0..g).rev().find(|&s| self.is_lambda0(s))
    }

    pub fn config(&self) -> UniverseConfig {
        let pick = |f: fn(&StationAttrs) -> bool| -> BTreeSet<Station> {
            (0..self.station_count()).filter(|&s| f(&self.attrs[s as usize])).collect()
        };
        UniverseConfig {
            stations: self.station_count(),
            lambda0: pick(|a| a.lambda0),
            lambda: pick(|a| a.lambda),
            sigma: pick(|a| a.sigma),
            extra_cof: pick(|a| a.cof_gt_omega && !a.lambda),
        }
    }

    /// Checks the model invariants: trace in C_h and the Λ₀ closure rule.
    pub fn validate_model(&self, m: &ModelSet) -> Result<(), UniverseError> {
        if m.delta.is_zero() || !is_in_ch(&m.delta) {
            return Err(UniverseError::BadTrace(m.delta.to_string()));
        }
        for &g in &m.stations {
            if g >= self.station_count() {
                return Err(UniverseError::UnknownStation(g));
            }
            if let Some(l) = self.lambda0_below(g) {
                if !m.stations.contains(&l) {
                    return Err(UniverseError::NotClosed { from: g, missing: l });
                }
            }
        }
        Ok(())
    }

    /// Adds the Λ₀ stations the closure rule demands.
    pub fn close_stations(&self, stations: &mut BTreeSet<Station>) {
        let mut todo: Vec<Station> = stations.iter().copied().collect();
        while let Some(g) = todo.pop() {
            if let Some(l) = self.lambda0_below(g) {
                if stations.insert(l) {
                    todo.push(l);
                }
            }
        }
    }
}

pub fn build_universe(cfg: &UniverseConfig) -> Result<Universe, UniverseError> {
    if cfg.stations == 0 {
        return Err(UniverseError::NoStations);
    }
    let all = cfg.lambda0.iter().chain(&cfg.lambda).chain(&cfg.sigma).chain(&cfg.extra_cof);
    for &s in all {
        if s >= cfg.stations {
            return Err(UniverseError::UnknownStation(s));
        }
    }
    if cfg.lambda.is_empty() {
        return Err(UniverseError::EmptyLambda);
    }
    if cfg.sigma.is_empty() {
        return Err(UniverseError::EmptySigma);
    }
    let mut attrs = vec![StationAttrs::default(); cfg.stations as usize];
    for &s in &cfg.lambda0 {
        attrs[s as usize].lambda0 = true;
    }
    for &s in &cfg.extra_cof {
        attrs[s as usize].cof_gt_omega = true;
    }
    for &s in &cfg.lambda {
        let below = cfg.lambda0.range(..s).count();
        if below < 2 {
            return Err(UniverseError::BadStation(s, "Λ station needs two Λ₀ stations below"));
        }
        attrs[s as usize].lambda = true;
        attrs[s as usize].cof_gt_omega = true;
    }
    for &s in &cfg.sigma {
        if !cfg.lambda.contains(&s) {
            return Err(UniverseError::BadStation(s, "Σ station must be in Λ"));
        }
        attrs[s as usize].sigma = true;
    }
    Ok(Universe { attrs })
}

/// A reproducible random universe with `n ≥ 3` stations.
pub fn random_universe(n: u32, seed: u64) -> Result<Universe, UniverseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = UniverseConfig {
        stations: n,
        lambda0: BTreeSet::new(),
        lambda: BTreeSet::new(),
        sigma: BTreeSet::new(),
        extra_cof: BTreeSet::new(),
    };
    for s in 0..n {
        let l0_below = cfg.lambda0.len();
        if l0_below >= 2 && rng.gen_bool(0.4) {
            cfg.lambda.insert(s);
            if rng.gen_bool(0.5) {
                cfg.sigma.insert(s);
            }
        } else if rng.gen_bool(0.6) {
            cfg.lambda0.insert(s);
        }
    }
    if cfg.lambda.is_empty() {
        let top = n - 1;
        cfg.lambda0.remove(&top);
        if cfg.lambda0.len() < 2 {
            cfg.lambda0.extend(0..2.min(top));
        }
        cfg.lambda.insert(top);
    }
    if cfg.sigma.is_empty() {
        let s = *cfg.lambda.iter().next_back().unwrap();
        cfg.sigma.insert(s);
    }
    build_universe(&cfg)
}

/// The default universe used by the acceptance suites:
/// Λ₀ = {0,1,3,5,6,8}, Λ = {2,4,7,9}, Σ = {4,9}.
pub fn default_universe() -> Universe {
    build_universe(&UniverseConfig {
        stations: 10,
        lambda0: [0, 1, 3, 5, 6, 8].into_iter().collect(),
        lambda: [2, 4, 7, 9].into_iter().collect(),
        sigma: [4, 9].into_iter().collect(),
        extra_cof: BTreeSet::new(),
    })
    .expect("default universe is valid")
}

/// A universe with runs of Λ stations on both sides of the Σ station 12 and
/// no Λ₀ station between 6 and 17. Models whose stations above 12 stay in
/// that run have room for mirror images below 12.
pub fn gap_universe() -> Universe {
    build_universe(&UniverseConfig {
        stations: 20,
        lambda0: [0, 1, 3, 5, 6, 17].into_iter().collect(),
        lambda: [2, 4, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 18, 19].into_iter().collect(),
        sigma: [4, 12, 19].into_iter().collect(),
        extra_cof: BTreeSet::new(),
    })
    .expect("gap universe is valid")
}

/// A countable model: `delta` stands for `N ∩ ω₁` and `stations` for the
/// stations it contains.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelSet {
    pub delta: Ordinal,
    pub stations: BTreeSet<Station>,
}

impl ModelSet {
    pub fn new<I: IntoIterator<Item = Station>>(delta: Ordinal, stations: I) -> Self {
        ModelSet { delta, stations: stations.into_iter().collect() }
    }

    pub fn contains_kappa(&self, k: &KappaOrdinal) -> bool {
        match k {
            KappaOrdinal::Countable(a) => a < &self.delta,
            KappaOrdinal::Station(s) => self.stations.contains(s),
        }
    }

    /// Membership of a countable ordinal (a tree node).
    pub fn contains_countable(&self, x: &Ordinal) -> bool {
        x < &self.delta
    }

    pub fn intersect(&self, other: &ModelSet) -> ModelSet {
        ModelSet {
            delta: self.delta.clone().min(other.delta.clone()),
            stations: self.stations.intersection(&other.stations).copied().collect(),
        }
    }

    /// `M ∩ β` for a station β.
    pub fn cut(&self, beta: Station) -> ModelSet {
        ModelSet { delta: self.delta.clone(), stations: self.stations.range(..beta).copied().collect() }
    }

    pub fn is_subset(&self, other: &ModelSet) -> bool {
        self.delta <= other.delta && self.stations.is_subset(&other.stations)
    }
}

/// The atoms an object is built from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Atoms {
    pub max_countable: Option<Ordinal>,
    pub stations: BTreeSet<Station>,
}

impl Atoms {
    pub fn countable(&mut self, a: &Ordinal) {
        if self.max_countable.as_ref().map_or(true, |m| a > m) {
            self.max_countable = Some(a.clone());
        }
    }

    pub fn station(&mut self, s: Station) {
        self.stations.insert(s);
    }
}

/// Objects whose transitive support can be enumerated.
pub trait Supported {
    fn collect_atoms(&self, acc: &mut Atoms);

    fn atoms(&self) -> Atoms {
        let mut a = Atoms::default();
        self.collect_atoms(&mut a);
        a
    }
}

impl Supported for Ordinal {
    fn collect_atoms(&self, acc: &mut Atoms) {
        acc.countable(self);
    }
}

impl Supported for KappaOrdinal {
    fn collect_atoms(&self, acc: &mut Atoms) {
        match self {
            KappaOrdinal::Countable(a) => acc.countable(a),
            KappaOrdinal::Station(s) => acc.station(*s),
        }
    }
}

impl Supported for ModelSet {
    fn collect_atoms(&self, acc: &mut Atoms) {
        acc.countable(&self.delta);
        for &s in &self.stations {
            acc.station(s);
        }
    }
}

impl<T: Supported> Supported for BTreeSet<T> {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.iter().for_each(|x| x.collect_atoms(acc));
    }
}

impl<T: Supported> Supported for Vec<T> {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.iter().for_each(|x| x.collect_atoms(acc));
    }
}

impl<A: Supported, B: Supported> Supported for (A, B) {
    fn collect_atoms(&self, acc: &mut Atoms) {
        self.0.collect_atoms(acc);
        self.1.collect_atoms(acc);
    }
}

impl<K: Supported, V: Supported> Supported for std::collections::BTreeMap<K, V> {
    fn collect_atoms(&self, acc: &mut Atoms) {
        for (k, v) in self {
            k.collect_atoms(acc);
            v.collect_atoms(acc);
        }
    }
}

impl Supported for usize {
    fn collect_atoms(&self, _: &mut Atoms) {}
}

/// Either a model or a station cut θ; the hull is `Sk(N)` resp. `Sk(θ)`.
#[derive(Clone, Copy, Debug)]
pub enum Hull<'a> {
    Model(&'a ModelSet),
    Below(Station),
}

pub fn atoms_in(h: Hull<'_>, a: &Atoms) -> bool {
    match h {
        Hull::Model(n) => {
            a.max_countable.as_ref().map_or(true, |m| m < &n.delta)
                && a.stations.is_subset(&n.stations)
        }
        Hull::Below(theta) => a.stations.iter().all(|&s| s < theta),
    }
}

pub fn sk_contains<T: Supported + ?Sized>(h: Hull<'_>, obj: &T) -> bool {
    let mut a = Atoms::default();
    obj.collect_atoms(&mut a);
    atoms_in(h, &a)
}

/// The comparison point β_{M,N}: the least Λ station strictly above every
/// common station (the least Λ station when there is none). A countable
/// model is closed under successor, so the supremum of `M ∩ N` is never
/// attained and β always lies strictly above the overlap. Λ is unbounded in
/// the real setting, so past the last station the end of the universe
/// stands in for the next Λ point; cutting there changes nothing.
pub fn comparison_point(u: &Universe, m: &ModelSet, n: &ModelSet) -> Station {
    let top_common = m.stations.intersection(&n.stations).max().copied();
    let from = top_common.map_or(0, |s| s + 1);
    u.lambda_stations().find(|&b| b >= from).unwrap_or(u.station_count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Less,
    Greater,
    Similar,
    Violation,
}

/// Classifies a pair per the three alternatives of adequacy.
pub fn classify(u: &Universe, m: &ModelSet, n: &ModelSet) -> Relation {
    let beta = comparison_point(u, m, n);
    let mb = m.cut(beta);
    let nb = n.cut(beta);
    if sk_contains(Hull::Model(n), &mb) {
        Relation::Less
    } else if sk_contains(Hull::Model(m), &nb) {
        Relation::Greater
    } else if mb == nb {
        Relation::Similar
    } else {
        Relation::Violation
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdequacyReport {
    pub adequate: bool,
    /// `(i, j, relation)` for `i < j` in the set's canonical order.
    pub pairs: Vec<(usize, usize, Relation)>,
}

pub fn is_adequate(u: &Universe, a: &BTreeSet<ModelSet>) -> AdequacyReport {
    let v: Vec<&ModelSet> = a.iter().collect();
    let mut pairs = Vec::new();
    let mut adequate = v.iter().all(|m| u.validate_model(m).is_ok());
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let r = classify(u, v[i], v[j]);
            if r == Relation::Violation {
                adequate = false;
            }
            pairs.push((i, j, r));
        }
    }
    AdequacyReport { adequate, pairs }
}

pub fn adequate(u: &Universe, a: &BTreeSet<ModelSet>) -> bool {
    is_adequate(u, a).adequate
}

/// `M < N` inside an adequate set, read off the traces.
pub fn model_less(m: &ModelSet, n: &ModelSet) -> bool {
    m.delta < n.delta
}

pub fn is_n_closed(a: &BTreeSet<ModelSet>, n: &ModelSet) -> bool {
    a.iter().filter(|m| model_less(m, n)).all(|m| a.contains(&m.intersect(n)))
}

pub fn is_beta_closed(a: &BTreeSet<ModelSet>, beta: Station) -> bool {
    a.iter().all(|m| a.contains(&m.cut(beta)))
}

/// `A ∪ {M ∩ N : M ∈ A, M < N}`, certified adequate and N-closed.
pub fn close_n(
    u: &Universe,
    a: &BTreeSet<ModelSet>,
    n: &ModelSet,
) -> Result<BTreeSet<ModelSet>, UniverseError> {
    if !a.contains(n) {
        return Err(UniverseError::NotMember);
    }
    if !adequate(u, a) {
        return Err(UniverseError::NotAdequate);
    }
    let mut out = a.clone();
    out.extend(a.iter().filter(|m| model_less(m, n)).map(|m| m.intersect(n)));
    if !adequate(u, &out) {
        return Err(UniverseError::Fidelity("N-closure is not adequate".into()));
    }
    if !is_n_closed(&out, n) {
        return Err(UniverseError::Fidelity("N-closure is not N-closed".into()));
    }
    Ok(out)
}

/// `A ∪ {M ∩ β : M ∈ A}`, certified adequate and β-closed.
pub fn close_beta(
    u: &Universe,
    a: &BTreeSet<ModelSet>,
    beta: Station,
) -> Result<BTreeSet<ModelSet>, UniverseError> {
    if !u.is_lambda(beta) {
        return Err(UniverseError::NotLambda(beta));
    }
    if !adequate(u, a) {
        return Err(UniverseError::NotAdequate);
    }
    let mut out = a.clone();
    out.extend(a.iter().map(|m| m.cut(beta)));
    if !adequate(u, &out) {
        return Err(UniverseError::Fidelity("β-closure is not adequate".into()));
    }
    if !is_beta_closed(&out, beta) {
        return Err(UniverseError::Fidelity("β-closure is not β-closed".into()));
    }
    Ok(out)
}

pub type ModelSetFamily = BTreeSet<ModelSet>;

/// Which union-adequacy statement to check, with its inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Profile {
    /// For M < N in adequate A: M ∩ N = M ∩ β_{M,N} and it lies in Sk(N).
    IntersectionIsCut { a: ModelSetFamily, m: ModelSet, n: ModelSet },
    /// A ⊆ Sk(N) adequate gives A ∪ {N} adequate.
    AddTopModel { a: ModelSetFamily, n: ModelSet },
    /// Adding cuts M ∩ β of members keeps adequacy.
    AddCuts { a: ModelSetFamily, c: ModelSetFamily },
    /// The N-closure is adequate and N-closed.
    NClosure { a: ModelSetFamily, n: ModelSet },
    /// A N-closed, A ∩ Sk(N) ⊆ B ⊆ Sk(N) gives A ∪ B adequate.
    UnionBelowModel { a: ModelSetFamily, n: ModelSet, b: ModelSetFamily },
    /// The chained version over finitely many sets.
    ChainedUnion { parts: Vec<ModelSetFamily>, models: Vec<ModelSet> },
    /// The β-closure is adequate, β-closed, and keeps N-closedness.
    BetaClosure { a: ModelSetFamily, beta: Station, n: Option<ModelSet> },
    /// A β-closed, A ∩ Sk(β) ⊆ B ⊆ Sk(β) gives A ∪ B adequate.
    UnionBelowStation { a: ModelSetFamily, beta: Station, b: ModelSetFamily },
    /// A ⊆ Sk(β) adequate with N ∩ β ∈ A gives A ∪ {N} adequate.
    AddAboveCut { a: ModelSetFamily, beta: Station, n: ModelSet },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    HypothesesFail(String),
    Holds,
    Counterexample(String),
}

impl Verdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, Verdict::Counterexample(_))
    }
}

fn models_valid(u: &Universe, a: &ModelSetFamily) -> bool {
    a.iter().all(|m| u.validate_model(m).is_ok())
}

fn all_in(h: Hull<'_>, a: &ModelSetFamily) -> bool {
    a.iter().all(|m| sk_contains(h, m))
}

fn conclude(ok: bool, what: &str) -> Verdict {
    if ok {
        Verdict::Holds
    } else {
        Verdict::Counterexample(what.to_string())
    }
}

macro_rules! require {
    ($cond:expr, $why:expr) => {
        if !$cond {
            return Verdict::HypothesesFail($why.to_string());
        }
    };
}

pub fn union_adequacy_check(u: &Universe, profile: &Profile) -> Verdict {
    match profile {
        Profile::IntersectionIsCut { a, m, n } => {
            require!(adequate(u, a), "A not adequate");
            require!(a.contains(m) && a.contains(n), "M, N not in A");
            require!(classify(u, m, n) == Relation::Less, "not M < N");
            let beta = comparison_point(u, m, n);
            let mn = m.intersect(n);
            conclude(mn == m.cut(beta) && sk_contains(Hull::Model(n), &mn), "M ∩ N ≠ M ∩ β")
        }
        Profile::AddTopModel { a, n } => {
            require!(adequate(u, a), "A not adequate");
            require!(u.validate_model(n).is_ok(), "N not a model");
            require!(all_in(Hull::Model(n), a), "A ⊄ Sk(N)");
            let mut c = a.clone();
            c.insert(n.clone());
            conclude(adequate(u, &c), "A ∪ {N} not adequate")
        }
        Profile::AddCuts { a, c } => {
            require!(adequate(u, a), "A not adequate");
            require!(a.is_subset(c) && models_valid(u, c), "A ⊄ C");
            let cuts_ok = c.difference(a).all(|k| {
                a.iter().any(|m| u.lambda_stations().any(|b| &m.cut(b) == k))
            });
            require!(cuts_ok, "C \\ A has a non-cut");
            conclude(adequate(u, c), "C not adequate")
        }
        Profile::NClosure { a, n } => {
            require!(adequate(u, a) && a.contains(n), "A not adequate or N ∉ A");
            match close_n(u, a, n) {
                Ok(_) => Verdict::Holds,
                Err(e) => Verdict::Counterexample(e.to_string()),
            }
        }
        Profile::UnionBelowModel { a, n, b } => {
            require!(adequate(u, a) && a.contains(n), "A not adequate or N ∉ A");
            require!(is_n_closed(a, n), "A not N-closed");
            require!(adequate(u, b), "B not adequate");
            let a_low: ModelSetFamily =
                a.iter().filter(|m| sk_contains(Hull::Model(n), *m)).cloned().collect();
            require!(a_low.is_subset(b) && all_in(Hull::Model(n), b), "B not sandwiched");
            let c: ModelSetFamily = a.union(b).cloned().collect();
            conclude(adequate(u, &c), "A ∪ B not adequate")
        }
        Profile::ChainedUnion { parts, models } => {
            require!(parts.len() >= 2 && models.len() == parts.len(), "need d ≥ 2 parts");
            require!(parts.iter().all(|p| adequate(u, p)), "part not adequate");
            for i in 1..parts.len() {
                let n = &models[i];
                require!(parts[i].contains(n) && is_n_closed(&parts[i], n), "N_i hypotheses");
                let low: ModelSetFamily =
                    parts[i].iter().filter(|m| sk_contains(Hull::Model(n), *m)).cloned().collect();
                require!(
                    low.is_subset(&parts[i - 1]) && all_in(Hull::Model(n), &parts[i - 1]),
                    "chain sandwich"
                );
            }
            let c: ModelSetFamily = parts.iter().flatten().cloned().collect();
            conclude(adequate(u, &c), "union not adequate")
        }
        Profile::BetaClosure { a, beta, n } => {
            require!(adequate(u, a) && u.is_lambda(*beta), "A not adequate or β ∉ Λ");
            match close_beta(u, a, *beta) {
                Ok(c) => match n {
                    Some(n) if a.contains(n) && is_n_closed(a, n) => {
                        conclude(is_n_closed(&c, n), "β-closure lost N-closedness")
                    }
                    _ => Verdict::Holds,
                },
                Err(e) => Verdict::Counterexample(e.to_string()),
            }
        }
        Profile::UnionBelowStation { a, beta, b } => {
            require!(adequate(u, a) && u.is_lambda(*beta), "A not adequate or β ∉ Λ");
            require!(is_beta_closed(a, *beta), "A not β-closed");
            require!(adequate(u, b), "B not adequate");
            let a_low: ModelSetFamily =
                a.iter().filter(|m| sk_contains(Hull::Below(*beta), *m)).cloned().collect();
            require!(a_low.is_subset(b) && all_in(Hull::Below(*beta), b), "B not sandwiched");
            let c: ModelSetFamily = a.union(b).cloned().collect();
            conclude(adequate(u, &c), "A ∪ B not adequate")
        }
        Profile::AddAboveCut { a, beta, n } => {
            require!(u.is_lambda(*beta) && adequate(u, a), "A not adequate or β ∉ Λ");
            require!(all_in(Hull::Below(*beta), a), "A ⊄ Sk(β)");
            require!(u.validate_model(n).is_ok() && a.contains(&n.cut(*beta)), "N ∩ β ∉ A");
            let mut c = a.clone();
            c.insert(n.clone());
            conclude(adequate(u, &c), "A ∪ {N} not adequate")
        }
    }
}
