//! Exact rational scalars and their text form.
//!
//! Scalars are arbitrary-precision rationals kept in lowest terms with a
//! positive denominator (the invariant `num-rational` maintains). The text
//! form is `numerator` or `numerator/denominator`, the same tokens used by
//! the vector format and by report serialization.

use alloc::string::{String, ToString};
use core::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Parse error for scalar tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatParseError {
    pub token: String,
    pub reason: &'static str,
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `2^k` as a rational, `k >= 0`.
pub fn pow2(k: u64) -> Rat {
    Rat::from_integer(BigInt::from(BigUint::one() << (k as usize)))
}

/// Parse `p` or `p/q`. Whitespace around tokens is accepted.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let t = s.trim();
    let err = |reason| RatParseError {
        token: t.to_string(),
        reason,
    };
    if t.is_empty() {
        return Err(err("empty scalar"));
    }
    let mut parts = t.splitn(2, '/');
    let num = parts.next().unwrap().trim();
    let num: BigInt = num.parse().map_err(|_| err("bad numerator"))?;
    match parts.next() {
        None => Ok(Rat::from_integer(num)),
        Some(den) => {
            let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
            if den.is_zero() {
                return Err(err("zero denominator"));
            }
            Ok(Rat::new(num, den))
        }
    }
}

/// Canonical text form: `p` for integers, else `p/q` in lowest terms.
pub fn format_rat(r: &Rat) -> String {
    let mut s = String::new();
    if r.denom().is_one() {
        let _ = write!(s, "{}", r.numer());
    } else {
        let _ = write!(s, "{}/{}", r.numer(), r.denom());
    }
    s
}

/// Decimal rendering with `digits` fractional digits, round-to-nearest.
/// Used only for human-facing report fields; exact fields keep `p/q`.
pub fn format_decimal(r: &Rat, digits: u32) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let scale = BigInt::from(10u32).pow(digits);
    // round(a * 10^digits)
    let scaled = (a * Rat::from_integer(scale.clone())
        + Rat::new(BigInt::from(1), BigInt::from(2)))
    .floor()
    .to_integer();
    let (int, frac) = (scaled.clone() / &scale, scaled % &scale);
    let mut s = String::new();
    if neg && !(int.is_zero() && frac.is_zero()) {
        s.push('-');
    }
    let _ = write!(s, "{int}");
    if digits > 0 {
        let frac = frac.to_string();
        s.push('.');
        for _ in 0..(digits as usize - frac.len()) {
            s.push('0');
        }
        s.push_str(&frac);
    }
    s
}

/// Is `r + 1` a power of two? Returns the exponent when it is.
/// This is the "exact branch" detector for `f(x) = log2(x+1)`.
pub fn plus_one_pow2_exponent(r: &Rat) -> Option<u64> {
    if !r.denom().is_one() {
        return None;
    }
    let v = r.numer() + BigInt::one();
    if v <= BigInt::zero() {
        return None;
    }
    let v = v.to_biguint().expect("positive");
    if v.count_ones() == 1 {
        Some(v.trailing_zeros().unwrap_or(0))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3", "-4", "1/2", "-7/3", " 5/10 "] {
            let r = parse_rat(s).unwrap();
            let t = format_rat(&r);
            assert_eq!(parse_rat(&t).unwrap(), r);
        }
        assert_eq!(format_rat(&parse_rat("5/10").unwrap()), "1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert!(parse_rat("").is_err());
    }

    #[test]
    fn pow2_exponents() {
        assert_eq!(plus_one_pow2_exponent(&rat_int(1)), Some(1));
        assert_eq!(plus_one_pow2_exponent(&rat_int(3)), Some(2));
        assert_eq!(plus_one_pow2_exponent(&rat_int(4)), None);
        assert_eq!(plus_one_pow2_exponent(&rat(1, 2)), None);
        let big = pow2(144) - rat_int(1);
        assert_eq!(plus_one_pow2_exponent(&big), Some(144));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(&rat(1, 2), 3), "0.500");
        assert_eq!(format_decimal(&rat(-1, 3), 4), "-0.3333");
        assert_eq!(format_decimal(&rat_int(2), 0), "2");
    }
}
