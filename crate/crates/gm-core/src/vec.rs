//! Finitely supported exact-rational vectors, intervals and projections.
//!
//! `FinVec` plays both roles of the ambient sequence space: vectors and
//! functionals. Indices are 1-based, matching `e_1, e_2, ...`. The text
//! format is comma-separated `index:numerator[/denominator]` pairs; the
//! canonical serialization sorts by index and never contains zero entries.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::rat::{format_rat, parse_rat, Rat};
use crate::value::Val;

/// Interval of positive integers, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interval {
    Empty,
    Range { lo: u32, hi: u32 },
}

impl Interval {
    pub fn new(lo: u32, hi: u32) -> Self {
        assert!(lo >= 1, "indices are 1-based");
        assert!(lo <= hi, "interval bounds out of order");
        Interval::Range { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Interval::Empty)
    }

    pub fn contains(&self, i: u32) -> bool {
        match *self {
            Interval::Empty => false,
            Interval::Range { lo, hi } => lo <= i && i <= hi,
        }
    }

    pub fn intersect(&self, o: &Interval) -> Interval {
        match (*self, *o) {
            (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) => {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo <= hi {
                    Interval::Range { lo, hi }
                } else {
                    Interval::Empty
                }
            }
            _ => Interval::Empty,
        }
    }

    /// `E < F`: every element of `E` precedes every element of `F`.
    pub fn before(&self, o: &Interval) -> bool {
        match (*self, *o) {
            (Interval::Range { hi, .. }, Interval::Range { lo, .. }) => hi < lo,
            _ => true,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Interval::Empty => write!(f, "[]"),
            Interval::Range { lo, hi } => write!(f, "[{lo},{hi}]"),
        }
    }
}

/// Sparse finitely supported vector over the exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct FinVec {
    entries: BTreeMap<u32, Rat>,
}

/// Errors from the vector text format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VecParseError {
    Malformed(String),
    BadIndex(String),
    DuplicateIndex(u32),
    ZeroCoefficient(u32),
}

impl fmt::Display for VecParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VecParseError::Malformed(t) => write!(f, "malformed token: {t}"),
            VecParseError::BadIndex(t) => write!(f, "bad index: {t}"),
            VecParseError::DuplicateIndex(i) => write!(f, "duplicate index: {i}"),
            VecParseError::ZeroCoefficient(i) => write!(f, "zero coefficient at index {i}"),
        }
    }
}

impl FinVec {
    pub fn zero() -> Self {
        FinVec::default()
    }

    pub fn unit(i: u32) -> Self {
        assert!(i >= 1, "indices are 1-based");
        let mut entries = BTreeMap::new();
        entries.insert(i, Rat::from_integer(BigInt::from(1)));
        FinVec { entries }
    }

    pub fn from_entries(it: impl IntoIterator<Item = (u32, Rat)>) -> Self {
        let mut v = FinVec::zero();
        for (i, c) in it {
            v.set(i, c);
        }
        v
    }

    pub fn set(&mut self, i: u32, c: Rat) {
        assert!(i >= 1, "indices are 1-based");
        if c.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, c);
        }
    }

    pub fn get(&self, i: u32) -> Rat {
        self.entries.get(&i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &Rat)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<u32> {
        self.entries.keys().copied().collect()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Smallest interval containing the support. Errors on the zero vector.
    pub fn range(&self) -> Result<Interval, &'static str> {
        match (self.entries.keys().next(), self.entries.keys().next_back()) {
            (Some(&lo), Some(&hi)) => Ok(Interval::Range { lo, hi }),
            _ => Err("range of the zero vector is undefined"),
        }
    }

    /// Projection onto an interval of indices.
    pub fn project(&self, e: &Interval) -> FinVec {
        match *e {
            Interval::Empty => FinVec::zero(),
            Interval::Range { lo, hi } => FinVec {
                entries: self
                    .entries
                    .range(lo..=hi)
                    .map(|(i, c)| (*i, c.clone()))
                    .collect(),
            },
        }
    }

    pub fn add(&self, o: &FinVec) -> FinVec {
        let mut out = self.clone();
        for (i, c) in &o.entries {
            let v = out.get(*i) + c;
            out.set(*i, v);
        }
        out
    }

    pub fn sub(&self, o: &FinVec) -> FinVec {
        self.add(&o.scale(&Rat::from_integer(BigInt::from(-1))))
    }

    pub fn scale(&self, q: &Rat) -> FinVec {
        if q.is_zero() {
            return FinVec::zero();
        }
        FinVec {
            entries: self.entries.iter().map(|(i, c)| (*i, c * q)).collect(),
        }
    }

    /// Exact pairing `sum_i f_i x_i`.
    pub fn pair(&self, x: &FinVec) -> Rat {
        let (small, big) = if self.entries.len() <= x.entries.len() {
            (self, x)
        } else {
            (x, self)
        };
        let mut acc = Rat::zero();
        for (i, c) in &small.entries {
            if let Some(d) = big.entries.get(i) {
                acc += c * d;
            }
        }
        acc
    }

    pub fn l1(&self) -> Rat {
        self.entries.values().map(|c| c.abs()).sum()
    }

    pub fn linf(&self) -> Rat {
        self.entries
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// Q membership: every coordinate rational with modulus at most 1 and
    /// denominator at most `d_max`.
    pub fn in_q(&self, d_max: &BigInt) -> bool {
        self.entries.values().all(|c| {
            c.abs() <= Rat::from_integer(BigInt::from(1)) && c.denom() <= d_max
        })
    }

    /// Canonical serialization: `index:coeff` sorted by index, comma-joined.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, (i, c)) in self.entries.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&i.to_string());
            out.push(':');
            out.push_str(&format_rat(c));
        }
        out
    }

    /// Parse the text format. Whitespace is ignored; duplicate indices and
    /// explicit zero coefficients are rejected.
    pub fn parse(s: &str) -> Result<FinVec, VecParseError> {
        let mut v = FinVec::zero();
        let t = s.trim();
        if t.is_empty() {
            return Ok(v);
        }
        for token in t.split(',') {
            let token = token.trim();
            let mut halves = token.splitn(2, ':');
            let idx = halves.next().unwrap().trim();
            let coeff = halves
                .next()
                .ok_or_else(|| VecParseError::Malformed(token.to_string()))?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| VecParseError::BadIndex(idx.to_string()))?;
            if idx == 0 {
                return Err(VecParseError::BadIndex(idx.to_string()));
            }
            let coeff =
                parse_rat(coeff).map_err(|_| VecParseError::Malformed(token.to_string()))?;
            if coeff.is_zero() {
                return Err(VecParseError::ZeroCoefficient(idx));
            }
            if v.entries.contains_key(&idx) {
                return Err(VecParseError::DuplicateIndex(idx));
            }
            v.set(idx, coeff);
        }
        Ok(v)
    }

    /// Shift-normalized canonical key: offsets from the first support point.
    /// Two translates of the same pattern share a key; used for memoization
    /// where the recursion is translation-invariant by construction.
    pub fn shifted_key(&self) -> Vec<(u32, Rat)> {
        match self.entries.keys().next() {
            None => Vec::new(),
            Some(&first) => self
                .entries
                .iter()
                .map(|(i, c)| (i - first, c.clone()))
                .collect(),
        }
    }
}

/// `x < y` in the block sense: `max ran(x) < min ran(y)`.
pub fn successive(x: &FinVec, y: &FinVec) -> bool {
    match (x.range(), y.range()) {
        (Ok(a), Ok(b)) => a.before(&b),
        _ => false,
    }
}

/// Are all vectors pairwise successive in order?
pub fn all_successive(xs: &[FinVec]) -> bool {
    xs.windows(2).all(|w| successive(&w[0], &w[1]))
}

/// Pair a rational functional against a vector, producing an exact value.
pub fn pair_val(f: &FinVec, x: &FinVec) -> Val {
    Val::from_rat(f.pair(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn e(i: u32) -> FinVec {
        FinVec::unit(i)
    }

    #[test]
    fn projection_examples() {
        let x = e(1).add(&e(5).scale(&rat_int(3)));
        assert_eq!(x.project(&Interval::new(1, 2)), e(1));
        assert_eq!(x.project(&Interval::Empty), FinVec::zero());
        assert_eq!(x.project(&Interval::new(1, 10)), x);
    }

    #[test]
    fn range_support_successive() {
        let x = e(2).add(&e(5));
        assert_eq!(x.range().unwrap(), Interval::new(2, 5));
        assert_eq!(x.support_size(), 2);
        assert!(successive(&e(1), &e(2)));
        assert!(!successive(&e(1).add(&e(3)), &e(3)));
        assert!(FinVec::zero().range().is_err());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(e(1).pair(&e(1)), rat_int(1));
        assert_eq!(e(1).pair(&e(2)), rat_int(0));
        let f = e(1).scale(&rat(1, 2)).add(&e(2).scale(&rat(1, 2)));
        assert_eq!(f.pair(&e(1).add(&e(2))), rat_int(1));
    }

    #[test]
    fn q_membership() {
        let d6 = BigInt::from(6);
        let v = e(1).scale(&rat(1, 2)).add(&e(4).scale(&rat(-1, 3)));
        assert!(v.in_q(&d6));
        assert!(!e(1).scale(&rat_int(2)).in_q(&d6));
        assert!(!e(1).scale(&rat(1, 7)).in_q(&d6));
    }

    #[test]
    fn text_format() {
        let v = FinVec::parse("1:1,2:1").unwrap();
        assert_eq!(v, e(1).add(&e(2)));
        let w = FinVec::parse("3:-1/2").unwrap();
        assert_eq!(w, e(3).scale(&rat(-1, 2)));
        assert_eq!(FinVec::parse(&w.serialize()).unwrap(), w);
        assert!(FinVec::parse("1:0").is_err());
        assert!(FinVec::parse("1:1,1:2").is_err());
        assert!(FinVec::parse("0:1").is_err());
        assert!(FinVec::parse("junk").is_err());
        // canonical ordering
        assert_eq!(FinVec::parse("5:1, 2:1").unwrap().serialize(), "2:1,5:1");
    }

    #[test]
    fn shifted_keys_share_translates() {
        let a = FinVec::parse("2:1,4:-1/2").unwrap();
        let b = FinVec::parse("7:1,9:-1/2").unwrap();
        assert_eq!(a.shifted_key(), b.shifted_key());
        assert_ne!(a.shifted_key(), FinVec::parse("2:1,5:-1/2").unwrap().shifted_key());
    }
}
