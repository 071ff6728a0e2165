//! Countable ordinals below ω^(ω+1) in Cantor normal form.
//!
//! The height function `h_of`, membership in the club `C_h` and the
//! allocation of fresh tree nodes all live here. Every other module treats
//! ordinals as opaque totally ordered values.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// An exponent in a CNF term. Below ω^(ω+1) the only infinite exponent is ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Fin(u32),
    Omega,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OrdinalError {
    #[error("ordinal {0} is not below the ceiling {1}")]
    Overflow(String, String),
    #[error("coefficient arithmetic overflowed")]
    CoefficientOverflow,
    #[error("malformed CNF: {0}")]
    Malformed(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// An ordinal `ω^e1·c1 + … + ω^ek·ck` with strictly decreasing exponents and
/// positive coefficients. The empty list is 0, so structural equality is
/// ordinal equality and the derived lexicographic order is the ordinal order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordinal {
    terms: Vec<(Exponent, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn nat(n: u64) -> Self {
        Self::monomial(Exponent::Fin(0), n)
    }

    pub fn omega() -> Self {
        Self::monomial(Exponent::Fin(1), 1)
    }

    /// `ω^e · c`; zero when `c == 0`.
    pub fn monomial(e: Exponent, c: u64) -> Self {
        if c == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(e, c)] }
        }
    }

    /// `ω·n + k`, the k-th ordinal of the height-n block.
    pub fn omega_times_plus(n: u64, k: u64) -> Self {
        let mut terms = Vec::new();
        if n > 0 {
            terms.push((Exponent::Fin(1), n));
        }
        if k > 0 {
            terms.push((Exponent::Fin(0), k));
        }
        Ordinal { terms }
    }

    /// The k-th nonzero point of `C_h`, namely ω^ω·k.
    pub fn ch_point(k: u64) -> Self {
        Self::monomial(Exponent::Omega, k)
    }

    pub fn from_terms(terms: Vec<(Exponent, u64)>) -> Result<Self, OrdinalError> {
        for w in terms.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(OrdinalError::Malformed("exponents not strictly decreasing".into()));
            }
        }
        if terms.iter().any(|t| t.1 == 0) {
            return Err(OrdinalError::Malformed("zero coefficient".into()));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[(Exponent, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient of ω^0.
    pub fn finite_tail(&self) -> u64 {
        match self.terms.last() {
            Some((Exponent::Fin(0), c)) => *c,
            _ => 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.0 == Exponent::Fin(0))
    }

    /// The ordinal with its finite tail removed (`ω·h(α)`).
    pub fn without_tail(&self) -> Self {
        let terms = self.terms.iter().copied().filter(|t| t.0 != Exponent::Fin(0)).collect();
        Ordinal { terms }
    }

    /// Ordinal addition `self + other`.
    pub fn add(&self, other: &Ordinal) -> Result<Ordinal, OrdinalError> {
        let Some(&(lead, lead_c)) = other.terms.first() else {
            return Ok(self.clone());
        };
        let mut terms: Vec<(Exponent, u64)> =
            self.terms.iter().copied().take_while(|t| t.0 >= lead).collect();
        let mut rest = other.terms.iter().copied();
        match terms.last_mut() {
            Some(last) if last.0 == lead => {
                last.1 = last.1.checked_add(lead_c).ok_or(OrdinalError::CoefficientOverflow)?;
                rest.next();
            }
            _ => {}
        }
        terms.extend(rest);
        Ok(Ordinal { terms })
    }

    pub fn succ(&self) -> Result<Ordinal, OrdinalError> {
        self.add(&Ordinal::nat(1))
    }

    /// Left multiplication by ω: each exponent e becomes 1+e.
    pub fn omega_mul(&self) -> Result<Ordinal, OrdinalError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for &(e, c) in &self.terms {
            let e = match e {
                Exponent::Fin(n) => {
                    Exponent::Fin(n.checked_add(1).ok_or(OrdinalError::CoefficientOverflow)?)
                }
                Exponent::Omega => Exponent::Omega,
            };
            terms.push((e, c));
        }
        Ok(Ordinal { terms })
    }

    /// For δ ∈ C_h, the k with δ = ω^ω·k.
    pub fn ch_index(&self) -> Option<u64> {
        if self.is_zero() {
            return Some(0);
        }
        match self.terms.as_slice() {
            [(Exponent::Omega, k)] => Some(*k),
            _ => None,
        }
    }

    /// The coefficient of the ω^ω term, i.e. the C_h block the ordinal lies in.
    pub fn omega_coefficient(&self) -> u64 {
        match self.terms.first() {
            Some((Exponent::Omega, c)) => *c,
            _ => 0,
        }
    }

    /// Subtract ω^ω·k from an ordinal whose Omega coefficient is at least k.
    /// Used when translating copies of conditions downward.
    pub fn shift_down_ch(&self, k: u64) -> Option<Ordinal> {
        if k == 0 {
            return Some(self.clone());
        }
        let mut terms = self.terms.clone();
        match terms.first_mut() {
            Some((Exponent::Omega, c)) if *c >= k => {
                *c -= k;
                if *c == 0 {
                    terms.remove(0);
                }
                Some(Ordinal { terms })
            }
            _ => None,
        }
    }

    /// Add ω^ω·k to an ordinal that is already at least ω^ω (no absorption).
    pub fn shift_up_ch(&self, k: u64) -> Result<Ordinal, OrdinalError> {
        if k == 0 {
            return Ok(self.clone());
        }
        let mut terms = self.terms.clone();
        match terms.first_mut() {
            Some((Exponent::Omega, c)) => {
                *c = c.checked_add(k).ok_or(OrdinalError::CoefficientOverflow)?;
            }
            _ => terms.insert(0, (Exponent::Omega, k)),
        }
        Ok(Ordinal { terms })
    }
}

/// The configured bound on all ordinals. The representation itself cannot
/// reach ω^(ω+1), so the default ceiling admits every value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ceiling {
    bound: Option<Ordinal>,
}

impl Default for Ceiling {
    fn default() -> Self {
        Ceiling { bound: None }
    }
}

impl Ceiling {
    pub fn below(bound: Ordinal) -> Self {
        Ceiling { bound: Some(bound) }
    }

    pub fn admits(&self, a: &Ordinal) -> bool {
        self.bound.as_ref().map_or(true, |b| a < b)
    }

    pub fn check(&self, a: Ordinal) -> Result<Ordinal, OrdinalError> {
        if self.admits(&a) {
            Ok(a)
        } else {
            let b = self.bound.as_ref().map(|b| b.to_string()).unwrap_or_default();
            Err(OrdinalError::Overflow(a.to_string(), b))
        }
    }

    pub fn h_of(&self, a: &Ordinal) -> Result<Ordinal, OrdinalError> {
        self.check(a.clone())?;
        Ok(h_of(a))
    }

    pub fn next_in_ch(&self, a: &Ordinal) -> Result<Ordinal, OrdinalError> {
        self.check(next_in_ch(a)?)
    }
}

/// The γ with ω·γ ≤ α < ω·(γ+1): drop the finite tail and divide by ω on
/// the left.
pub fn h_of(a: &Ordinal) -> Ordinal {
    let terms = a
        .terms
        .iter()
        .filter_map(|&(e, c)| match e {
            Exponent::Fin(0) => None,
            Exponent::Fin(n) => Some((Exponent::Fin(n - 1), c)),
            Exponent::Omega => Some((Exponent::Omega, c)),
        })
        .collect();
    Ordinal { terms }
}

/// ω·γ, the first ordinal of height γ.
pub fn block_start(gamma: &Ordinal) -> Result<Ordinal, OrdinalError> {
    gamma.omega_mul()
}

/// δ ∈ C_h iff δ = 0 or ω·δ = δ; below ω^(ω+1) that means δ = ω^ω·k.
pub fn is_in_ch(d: &Ordinal) -> bool {
    d.ch_index().is_some()
}

/// The least δ ∈ C_h strictly above α.
pub fn next_in_ch(a: &Ordinal) -> Result<Ordinal, OrdinalError> {
    let k = match a.terms.first() {
        Some((Exponent::Omega, c)) => c.checked_add(1).ok_or(OrdinalError::CoefficientOverflow)?,
        _ => 1,
    };
    Ok(Ordinal::ch_point(k))
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Fin(n) => write!(f, "{n}"),
            Exponent::Omega => f.write_str("w"),
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "w^{e}*{c}")?;
        }
        Ok(())
    }
}

fn parse_decimal(s: &[u8], pos: &mut usize) -> Result<u64, OrdinalError> {
    let start = *pos;
    while *pos < s.len() && s[*pos].is_ascii_digit() {
        *pos += 1;
    }
    let digits = &s[start..*pos];
    if digits.is_empty() {
        return Err(OrdinalError::Parse { pos: start, msg: "expected digits".into() });
    }
    if digits.len() > 1 && digits[0] == b'0' {
        return Err(OrdinalError::Parse { pos: start, msg: "leading zero".into() });
    }
    std::str::from_utf8(digits)
        .ok()
        .and_then(|d| d.parse().ok())
        .ok_or(OrdinalError::Parse { pos: start, msg: "number out of range".into() })
}

fn expect(s: &[u8], pos: &mut usize, lit: &[u8]) -> Result<(), OrdinalError> {
    if s[*pos..].starts_with(lit) {
        *pos += lit.len();
        Ok(())
    } else {
        Err(OrdinalError::Parse {
            pos: *pos,
            msg: format!("expected `{}`", String::from_utf8_lossy(lit)),
        })
    }
}

/// Parses the canonical rendering only, so `parse(s).to_string() == s`
/// whenever parsing succeeds.
pub fn parse_ordinal(s: &str) -> Result<Ordinal, OrdinalError> {
    if s == "0" {
        return Ok(Ordinal::zero());
    }
    let b = s.as_bytes();
    let mut pos = 0;
    let mut terms = Vec::new();
    loop {
        expect(b, &mut pos, b"w^")?;
        let e = if b.get(pos) == Some(&b'w') {
            pos += 1;
            Exponent::Omega
        } else {
            let n = parse_decimal(b, &mut pos)?;
            Exponent::Fin(u32::try_from(n).map_err(|_| OrdinalError::Parse {
                pos,
                msg: "exponent out of range".into(),
            })?)
        };
        expect(b, &mut pos, b"*")?;
        let c = parse_decimal(b, &mut pos)?;
        terms.push((e, c));
        if pos == b.len() {
            break;
        }
        expect(b, &mut pos, b"+")?;
    }
    Ordinal::from_terms(terms)
}

impl FromStr for Ordinal {
    type Err = OrdinalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ordinal(s)
    }
}

/// Compare two ordinals by brute CNF walk; an independent reference for the
/// derived order, used by tests.
pub fn cnf_cmp(a: &Ordinal, b: &Ordinal) -> Ordering {
    for (x, y) in a.terms.iter().zip(b.terms.iter()) {
        match x.0.cmp(&y.0).then(x.1.cmp(&y.1)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.terms.len().cmp(&b.terms.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn heights() {
        assert_eq!(h_of(&Ordinal::zero()), Ordinal::zero());
        assert_eq!(h_of(&Ordinal::omega_times_plus(5, 2)), Ordinal::nat(5));
        let w2 = Ordinal::monomial(Exponent::Fin(2), 1);
        let g = h_of(&w2);
        assert_eq!(g, Ordinal::omega());
        // ω·ω ≤ ω² < ω·(ω+1)
        assert!(cnf_cmp(&g.omega_mul().unwrap(), &w2) != Ordering::Greater);
        let upper = g.succ().unwrap().omega_mul().unwrap();
        assert_eq!(cnf_cmp(&w2, &upper), Ordering::Less);
    }

    #[test]
    fn club_membership() {
        assert!(is_in_ch(&Ordinal::zero()));
        assert!(!is_in_ch(&Ordinal::omega()));
        assert!(is_in_ch(&Ordinal::ch_point(1)));
        assert!(!is_in_ch(&o("w^w*1+w^0*1")));
    }

    #[test]
    fn next_club_points() {
        assert_eq!(next_in_ch(&Ordinal::zero()).unwrap(), Ordinal::ch_point(1));
        assert_eq!(next_in_ch(&Ordinal::ch_point(1)).unwrap(), Ordinal::ch_point(2));
        assert_eq!(next_in_ch(&Ordinal::ch_point(2)).unwrap(), Ordinal::ch_point(3));
        assert_eq!(next_in_ch(&o("w^7*3")).unwrap(), Ordinal::ch_point(1));
    }

    #[test]
    fn addition_absorbs() {
        assert_eq!(Ordinal::nat(3).add(&Ordinal::omega()).unwrap(), Ordinal::omega());
        assert_eq!(o("w^2*1+w^0*4").add(&o("w^1*2")).unwrap(), o("w^2*1+w^1*2"));
        assert_eq!(o("w^1*2").add(&o("w^1*3+w^0*1")).unwrap(), o("w^1*5+w^0*1"));
    }

    #[test]
    fn omega_mul_fixes_ch_points() {
        let d = Ordinal::ch_point(4);
        assert_eq!(d.omega_mul().unwrap(), d);
        assert_eq!(o("w^w*1+w^3*2").omega_mul().unwrap(), o("w^w*1+w^4*2"));
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "w^0*1", "w^1*5+w^0*2", "w^w*3+w^12*1+w^0*9"] {
            assert_eq!(o(s).to_string(), s);
        }
        for bad in ["", "w^1*0", "w^0*1+w^1*1", "w^01*1", "w^1*1+", "1", "w^w*1+w^w*1"] {
            assert!(parse_ordinal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ceiling_rejects() {
        let c = Ceiling::below(Ordinal::ch_point(2));
        assert!(c.h_of(&Ordinal::ch_point(2)).is_err());
        assert!(c.next_in_ch(&Ordinal::ch_point(1)).is_err());
        assert!(c.next_in_ch(&Ordinal::omega()).is_ok());
    }

    #[test]
    fn shifts() {
        let x = o("w^w*3+w^1*2");
        assert_eq!(x.shift_down_ch(2).unwrap(), o("w^w*1+w^1*2"));
        assert_eq!(x.shift_down_ch(3).unwrap(), o("w^1*2"));
        assert!(x.shift_down_ch(4).is_none());
        assert_eq!(o("w^1*2").shift_up_ch(1).unwrap(), o("w^w*1+w^1*2"));
    }
}
