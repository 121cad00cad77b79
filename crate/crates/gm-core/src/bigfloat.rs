//! Directed-rounding enclosures for `log2`, `exp2`, square roots and `ln 2`.
//!
//! All routines return rational intervals `[lo, hi]` that are guaranteed to
//! contain the true value. `prec` is the number of requested result bits;
//! internal working precision carries enough guard bits that the returned
//! width is below `2^(1-prec)` for `log2`/`exp2` on the inputs this crate
//! feeds them (arguments bounded by a few thousand bits).
//!
//! The algorithms are the classical integer fixed-point ones: bit extraction
//! by repeated squaring for `log2`, a square-root chain for fractional powers
//! of two, and the `atanh(1/3)` series for `ln 2`. They exist here because
//! the crate needs *certified* enclosures (every irrational that leaks into a
//! comparison is precision-tagged), not fast floats.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rat::Rat;

/// Rational enclosure `[lo, hi]` of a real number.
#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    pub fn exact(v: Rat) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(BigInt::from(2))
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn mul(&self, o: &Enclosure) -> Enclosure {
        let cands = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if *c < lo {
                lo = c.clone();
            }
            if *c > hi {
                hi = c.clone();
            }
        }
        Enclosure { lo, hi }
    }

    pub fn scale(&self, q: &Rat) -> Enclosure {
        if q.is_negative() {
            Enclosure { lo: &self.hi * q, hi: &self.lo * q }
        } else {
            Enclosure { lo: &self.lo * q, hi: &self.hi * q }
        }
    }

    /// Reciprocal; requires the interval to exclude zero.
    pub fn recip(&self) -> Enclosure {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of interval containing zero"
        );
        Enclosure { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        let lo = self.lo.to_f64().unwrap_or(f64::NEG_INFINITY);
        let hi = self.hi.to_f64().unwrap_or(f64::INFINITY);
        (next_down(lo), next_up(hi))
    }
}

/// Next representable f64 above `x` (hand-rolled: no_std has no float math).
pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    let bits = x.to_bits();
    let next = if x == 0.0 {
        1
    } else if bits >> 63 == 0 {
        bits + 1
    } else {
        bits - 1
    };
    f64::from_bits(next)
}

/// Next representable f64 below `x`.
pub fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

fn floor_div_pow2(v: &BigUint, k: u32) -> BigUint {
    v >> (k as usize)
}

fn ceil_div_pow2(v: &BigUint, k: u32) -> BigUint {
    let mask = (BigUint::one() << (k as usize)) - BigUint::one();
    if (v & &mask).is_zero() {
        v >> (k as usize)
    } else {
        (v >> (k as usize)) + BigUint::one()
    }
}

/// floor(log2(x)) for a positive rational, by bit lengths plus correction.
pub fn floor_log2(x: &Rat) -> i64 {
    assert!(x.is_positive(), "floor_log2 of non-positive value");
    let p = x.numer().magnitude();
    let q = x.denom().magnitude();
    let mut e = p.bits() as i64 - q.bits() as i64;
    // Candidate e satisfies 2^(e-1) < x < 2^(e+1); fix up by comparison.
    let pow = |k: i64| -> Rat {
        if k >= 0 {
            Rat::from_integer(BigInt::from(BigUint::one() << (k as usize)))
        } else {
            Rat::new(BigInt::one(), BigInt::from(BigUint::one() << ((-k) as usize)))
        }
    };
    while pow(e) > *x {
        e -= 1;
    }
    while pow(e + 1) <= *x {
        e += 1;
    }
    e
}

/// Enclosure of `log2(x)` for positive rational `x`, to about `prec` bits.
///
/// Exact when `x` is a power of two.
pub fn log2_interval(x: &Rat, prec: u32) -> Enclosure {
    assert!(x.is_positive(), "log2 of non-positive value");
    let e = floor_log2(x);
    let epow = if e >= 0 {
        Rat::from_integer(BigInt::from(BigUint::one() << (e as usize)))
    } else {
        Rat::new(BigInt::one(), BigInt::from(BigUint::one() << ((-e) as usize)))
    };
    let m = x / &epow; // in [1, 2)
    if m.is_one() {
        return Enclosure::exact(Rat::from_integer(BigInt::from(e)));
    }
    // Fixed-point bit extraction with interval mantissa, W guard bits.
    let w: u32 = 2 * prec + 64;
    let scale = BigUint::one() << (w as usize);
    let two_scale = BigUint::one() << ((w + 1) as usize);
    // m * 2^w rounded both ways
    let num = m.numer().magnitude() * &scale;
    let mut lo = num.div_floor(m.denom().magnitude());
    let mut hi = num.div_ceil(m.denom().magnitude());
    let mut acc = Rat::zero();
    let mut resolved_bits = 0u32;
    for i in 1..=prec {
        lo = floor_div_pow2(&(&lo * &lo), w);
        hi = ceil_div_pow2(&(&hi * &hi), w);
        if lo >= two_scale {
            lo = floor_div_pow2(&lo, 1);
            hi = ceil_div_pow2(&hi, 1);
            acc += Rat::new(BigInt::one(), BigInt::from(BigUint::one() << (i as usize)));
        } else if hi < two_scale {
            // bit is zero
        } else {
            break; // straddling two: stop with what we have
        }
        resolved_bits = i;
    }
    let err = Rat::new(
        BigInt::one(),
        BigInt::from(BigUint::one() << (resolved_bits as usize)),
    );
    let base = Rat::from_integer(BigInt::from(e)) + acc;
    Enclosure { lo: base.clone(), hi: base + err }
}

/// Enclosure of `sqrt(x)` for a non-negative rational, to about `prec` bits.
pub fn sqrt_interval(x: &Rat, prec: u32) -> Enclosure {
    assert!(!x.is_negative(), "sqrt of negative value");
    if x.is_zero() {
        return Enclosure::exact(Rat::zero());
    }
    // Exact when x is a square of a rational.
    let ns = x.numer().magnitude().sqrt();
    let ds = x.denom().magnitude().sqrt();
    if &(&ns * &ns) == x.numer().magnitude() && &(&ds * &ds) == x.denom().magnitude() {
        return Enclosure::exact(Rat::new(BigInt::from(ns), BigInt::from(ds)));
    }
    let w = prec + 32;
    let scale2 = BigUint::one() << ((2 * w) as usize);
    let denom = Rat::from_integer(BigInt::from(BigUint::one() << (w as usize)));
    let lo_scaled = (x * Rat::from_integer(BigInt::from(scale2.clone())))
        .floor()
        .to_integer()
        .to_biguint()
        .expect("non-negative");
    let hi_scaled = (x * Rat::from_integer(BigInt::from(scale2)))
        .ceil()
        .to_integer()
        .to_biguint()
        .expect("non-negative");
    let lo = lo_scaled.sqrt();
    let hi = hi_scaled.sqrt() + BigUint::one();
    Enclosure {
        lo: Rat::from_integer(BigInt::from(lo)) / &denom,
        hi: Rat::from_integer(BigInt::from(hi)) / &denom,
    }
}

/// Enclosure of `sqrt` over an interval.
pub fn sqrt_enclosure(x: &Enclosure, prec: u32) -> Enclosure {
    let lo = sqrt_interval(&x.lo, prec);
    let hi = sqrt_interval(&x.hi, prec);
    Enclosure { lo: lo.lo, hi: hi.hi }
}

/// Enclosure of `2^y` for rational `y`, to about `prec` bits.
///
/// Exact when `y` is an integer.
pub fn exp2_interval(y: &Rat, prec: u32) -> Enclosure {
    let n = y.floor().to_integer();
    let frac = y - Rat::from_integer(n.clone());
    let int_pow = |k: &BigInt| -> Rat {
        let mag = k.magnitude().to_usize().expect("exp2 exponent too large to materialize");
        if k.is_negative() {
            Rat::new(BigInt::one(), BigInt::from(BigUint::one() << mag))
        } else {
            Rat::from_integer(BigInt::from(BigUint::one() << mag))
        }
    };
    let base = int_pow(&n);
    if frac.is_zero() {
        return Enclosure::exact(base);
    }
    // 2^frac via the chain r_i = 2^(2^-i), multiplied per binary digit of frac.
    let w = prec + 32;
    let scale = BigUint::one() << (w as usize);
    let denom = Rat::from_integer(BigInt::from(scale.clone()));
    // Interval fixed-point accumulator, starts at exactly 1.
    let mut acc_lo = scale.clone();
    let mut acc_hi = scale.clone();
    // r = sqrt chain, interval fixed-point. r_1 = sqrt(2).
    let mut r_lo = (BigUint::one() << ((2 * w + 1) as usize)).sqrt();
    let mut r_hi = &r_lo + BigUint::one();
    let mut rem = frac;
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let mut digit_weight = half.clone();
    for _ in 1..=prec {
        if rem >= digit_weight {
            rem -= &digit_weight;
            acc_lo = floor_div_pow2(&(&acc_lo * &r_lo), w);
            acc_hi = ceil_div_pow2(&(&acc_hi * &r_hi), w);
        }
        if rem.is_zero() {
            break;
        }
        digit_weight *= &half;
        r_lo = (&r_lo << (w as usize)).sqrt();
        r_hi = (&r_hi << (w as usize)).sqrt() + BigUint::one();
    }
    // Remaining fraction rem < 2^-prec contributes a factor in [1, 2^rem] <= [1, 1 + 2^(1-prec)].
    let mut hi = Rat::from_integer(BigInt::from(acc_hi)) / &denom;
    if !rem.is_zero() {
        hi *= Rat::one()
            + Rat::new(BigInt::from(2), BigInt::from(BigUint::one() << (prec as usize)));
    }
    let lo = Rat::from_integer(BigInt::from(acc_lo)) / &denom;
    Enclosure { lo: lo * &base, hi: hi * &base }
}

/// Enclosure of `ln 2` via `2 * atanh(1/3)`.
pub fn ln2_interval(prec: u32) -> Enclosure {
    // ln 2 = 2 * sum_{k>=0} (1/3)^(2k+1) / (2k+1); tail after K terms is
    // bounded by (1/9)^K / (2K+1) / (1 - 1/9) * (2/3).
    let terms = prec / 3 + 4;
    let third_sq = Rat::new(BigInt::one(), BigInt::from(9));
    let mut pow = Rat::new(BigInt::one(), BigInt::from(3));
    let mut sum = Rat::zero();
    for k in 0..terms {
        sum += &pow / Rat::from_integer(BigInt::from(2 * k as i64 + 1));
        pow *= &third_sq;
    }
    let tail = pow * Rat::new(BigInt::from(9), BigInt::from(8));
    let two = Rat::from_integer(BigInt::from(2));
    Enclosure { lo: &sum * &two, hi: (&sum + &tail) * &two }
}

/// Enclosure of the natural log of a positive rational: `ln x = log2(x) * ln 2`.
pub fn ln_interval(x: &Rat, prec: u32) -> Enclosure {
    let l2 = log2_interval(x, prec);
    let ln2 = ln2_interval(prec);
    if l2.lo.is_negative() {
        l2.mul(&ln2)
    } else {
        Enclosure { lo: &l2.lo * &ln2.lo, hi: &l2.hi * &ln2.hi }
    }
}

/// Enclosure of `e^n` for integer `n >= 0`: `e^n = 2^(n / ln 2)`.
pub fn exp_interval(n: u64, prec: u32) -> Enclosure {
    let ln2 = ln2_interval(prec + 16);
    let y_lo = Rat::from_integer(BigInt::from(n)) / &ln2.hi;
    let y_hi = Rat::from_integer(BigInt::from(n)) / &ln2.lo;
    let lo = exp2_interval(&y_lo, prec).lo;
    let hi = exp2_interval(&y_hi, prec).hi;
    Enclosure { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn assert_encloses(e: &Enclosure, v: f64, max_width: f64) {
        let lo = e.lo.to_f64().unwrap();
        let hi = e.hi.to_f64().unwrap();
        assert!(lo <= v && v <= hi, "[{lo}, {hi}] misses {v}");
        assert!(hi - lo <= max_width, "width {} too wide", hi - lo);
    }

    #[test]
    fn log2_known_values() {
        assert_encloses(&log2_interval(&rat_int(3), 80), 1.584962500721156, 1e-20);
        assert_encloses(&log2_interval(&rat_int(10), 80), 3.321928094887362, 1e-20);
        assert_encloses(&log2_interval(&rat(1, 3), 80), -1.584962500721156, 1e-20);
        let exact = log2_interval(&rat_int(4096), 80);
        assert_eq!(exact.lo, rat_int(12));
        assert_eq!(exact.hi, rat_int(12));
    }

    #[test]
    fn exp2_known_values() {
        assert_encloses(&exp2_interval(&rat(1, 2), 80), 1.4142135623730951, 1e-18);
        assert_encloses(&exp2_interval(&rat(-3, 2), 80), 2.0f64.sqrt() / 4.0, 1e-15);
        let exact = exp2_interval(&rat_int(20), 80);
        assert_eq!(exact.lo, rat_int(1 << 20));
        // round trip: 2^(log2 x) contains x
        let l = log2_interval(&rat_int(7), 96);
        let lo = exp2_interval(&l.lo, 96);
        let hi = exp2_interval(&l.hi, 96);
        assert!(lo.lo <= rat_int(7) && rat_int(7) <= hi.hi);
    }

    #[test]
    fn sqrt_and_ln2() {
        assert_encloses(&sqrt_interval(&rat_int(2), 80), 1.4142135623730951, 1e-20);
        let exact = sqrt_interval(&rat(9, 4), 80);
        assert_eq!(exact.lo, rat(3, 2));
        assert_eq!(exact.hi, rat(3, 2));
        assert_encloses(&ln2_interval(100), 0.6931471805599453, 1e-25);
        assert_encloses(&ln_interval(&rat_int(4), 80), 1.3862943611198906, 1e-20);
        assert_encloses(&exp_interval(4, 80), 54.598150033144236, 1e-15);
    }

    #[test]
    fn floor_log2_edges() {
        assert_eq!(floor_log2(&rat_int(1)), 0);
        assert_eq!(floor_log2(&rat_int(2)), 1);
        assert_eq!(floor_log2(&rat_int(3)), 1);
        assert_eq!(floor_log2(&rat(1, 2)), -1);
        assert_eq!(floor_log2(&rat(3, 8)), -2);
    }
}
