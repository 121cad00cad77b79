//! The function class calculus: evaluation, membership checks, `M_f` and
//! right derivatives.
//!
//! Every quantity here is either an exact rational or a precision-tagged
//! rational enclosure ([`Num`]): irrational values (logarithms) never lose
//! their error bound. Comparisons between two exact values are exact;
//! comparisons involving approximations use the declared relative tolerance
//! (default `1e-9`), with internal precision far below it.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive};

use crate::bigfloat::{self, Enclosure};
use crate::rat::{format_rat, plus_one_pow2_exponent, Rat};

/// Default relative tolerance for real-valued comparisons.
pub fn default_tolerance() -> Rat {
    Rat::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

/// Default internal working precision in bits.
pub const DEFAULT_PREC: u32 = 160;

/// A numeric value tagged with its precision: exact rational or enclosure.
#[derive(Debug, Clone, PartialEq)]
pub enum Num {
    Exact(Rat),
    Approx(Enclosure),
}

impl Num {
    pub fn exact_int(n: i64) -> Num {
        Num::Exact(Rat::from_integer(BigInt::from(n)))
    }

    pub fn lo(&self) -> Rat {
        match self {
            Num::Exact(q) => q.clone(),
            Num::Approx(e) => e.lo.clone(),
        }
    }

    pub fn hi(&self) -> Rat {
        match self {
            Num::Exact(q) => q.clone(),
            Num::Approx(e) => e.hi.clone(),
        }
    }

    pub fn mid(&self) -> Rat {
        match self {
            Num::Exact(q) => q.clone(),
            Num::Approx(e) => e.mid(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn fold(e: Enclosure) -> Num {
        if e.lo == e.hi {
            Num::Exact(e.lo)
        } else {
            Num::Approx(e)
        }
    }

    pub fn enclosure(&self) -> Enclosure {
        match self {
            Num::Exact(q) => Enclosure::exact(q.clone()),
            Num::Approx(e) => e.clone(),
        }
    }

    pub fn add(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a + b),
            _ => Num::fold(self.enclosure().add(&o.enclosure())),
        }
    }

    pub fn sub(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a - b),
            _ => Num::fold(self.enclosure().sub(&o.enclosure())),
        }
    }

    pub fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a * b),
            _ => Num::fold(self.enclosure().mul(&o.enclosure())),
        }
    }

    pub fn div(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a / b),
            _ => Num::fold(self.enclosure().mul(&o.enclosure().recip())),
        }
    }

    pub fn scale(&self, q: &Rat) -> Num {
        match self {
            Num::Exact(a) => Num::Exact(a * q),
            Num::Approx(e) => Num::fold(e.scale(q)),
        }
    }

    pub fn log2(&self, prec: u32) -> Num {
        match self {
            Num::Exact(q) => Num::fold(bigfloat::log2_interval(q, prec)),
            Num::Approx(e) => {
                let lo = bigfloat::log2_interval(&e.lo, prec);
                let hi = bigfloat::log2_interval(&e.hi, prec);
                Num::fold(Enclosure { lo: lo.lo, hi: hi.hi })
            }
        }
    }

    pub fn exp2(&self, prec: u32) -> Num {
        match self {
            Num::Exact(q) => Num::fold(bigfloat::exp2_interval(q, prec)),
            Num::Approx(e) => {
                let lo = bigfloat::exp2_interval(&e.lo, prec);
                let hi = bigfloat::exp2_interval(&e.hi, prec);
                Num::fold(Enclosure { lo: lo.lo, hi: hi.hi })
            }
        }
    }

    pub fn sqrt(&self, prec: u32) -> Num {
        match self {
            Num::Exact(q) => Num::fold(bigfloat::sqrt_interval(q, prec)),
            Num::Approx(e) => Num::fold(bigfloat::sqrt_enclosure(e, prec)),
        }
    }

    /// `self <= other` under tolerance semantics: exact when both exact,
    /// otherwise allowing `rel_tol` relative slack on the comparison.
    pub fn le_tol(&self, o: &Num, rel_tol: &Rat) -> bool {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => a <= b,
            _ => {
                let a = self.mid();
                let b = o.mid();
                let scale = a.abs().max(b.abs()).max(Rat::one());
                a - b <= rel_tol * scale
            }
        }
    }

    /// Strict midpoint comparison.
    pub fn lt_mid(&self, o: &Num) -> bool {
        self.mid() < o.mid()
    }

    pub fn to_string_tagged(&self) -> String {
        match self {
            Num::Exact(q) => format!("{} (exact)", format_rat(q)),
            Num::Approx(e) => {
                format!(
                    "{} (+/- {})",
                    crate::rat::format_decimal(&e.mid(), 15),
                    crate::rat::format_decimal(&e.width(), 30)
                )
            }
        }
    }
}

/// Errors of the function-class calculus.
#[derive(Debug, Clone, PartialEq)]
pub enum FunclassError {
    DomainBelowOne(Rat),
    NotInvertible(&'static str),
    OffGrid(Rat),
    EmptySpec,
    GridAbscissasNotIncreasing,
    SandwichViolation { point: Rat, detail: String },
    NotConcave { point: Rat },
    NotInL(u64),
    JTooShort { needed: usize, have: usize },
    KOffGrid(u64),
}

impl core::fmt::Display for FunclassError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FunclassError::DomainBelowOne(x) => {
                write!(f, "argument {} below domain [1, inf)", format_rat(x))
            }
            FunclassError::NotInvertible(k) => write!(f, "function kind {k} is not invertible"),
            FunclassError::OffGrid(x) => write!(f, "abscissa {} not on sample grid", format_rat(x)),
            FunclassError::EmptySpec => write!(f, "sampled spec has no points"),
            FunclassError::GridAbscissasNotIncreasing => {
                write!(f, "grid abscissas must be strictly increasing")
            }
            FunclassError::SandwichViolation { point, detail } => {
                write!(f, "sandwich violation at x={}: {detail}", format_rat(point))
            }
            FunclassError::NotConcave { point } => {
                write!(f, "envelope not concave at x={}", format_rat(point))
            }
            FunclassError::NotInL(n) => write!(f, "{n} is not an element of L"),
            FunclassError::JTooShort { needed, have } => {
                write!(f, "J has {have} elements, {needed} required")
            }
            FunclassError::KOffGrid(k) => {
                write!(f, "K element {k} is not a grid point (grid too coarse)")
            }
        }
    }
}

/// The supported function kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// `f(x) = log2(x+1)`.
    Log2p1,
    /// `sqrt(log2(x+1))`.
    SqrtLog2p1,
    /// `phi`: `sqrt(f)` on the set `K`, `f` elsewhere.
    Phi { k_set: BTreeSet<u64> },
    /// `phi'`: like `phi` but one element of `K` is exempted.
    PhiPrime { k_set: BTreeSet<u64>, excluded: u64 },
    /// Finite sample table `(x, y)` with strictly increasing abscissas.
    Sampled { points: Vec<(Rat, Rat)> },
}

impl FunctionSpec {
    pub fn sampled(points: Vec<(Rat, Rat)>) -> Result<Self, FunclassError> {
        if points.is_empty() {
            return Err(FunclassError::EmptySpec);
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(FunclassError::GridAbscissasNotIncreasing);
        }
        Ok(FunctionSpec::Sampled { points })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FunctionSpec::Log2p1 => "log2p1",
            FunctionSpec::SqrtLog2p1 => "sqrt-log2p1",
            FunctionSpec::Phi { .. } => "phi",
            FunctionSpec::PhiPrime { .. } => "phi-prime",
            FunctionSpec::Sampled { .. } => "sampled-grid",
        }
    }

    fn in_k(&self, x: &Rat) -> bool {
        let as_int = if x.denom().is_one() { x.numer().to_u64() } else { None };
        match (self, as_int) {
            (FunctionSpec::Phi { k_set }, Some(n)) => k_set.contains(&n),
            (FunctionSpec::PhiPrime { k_set, excluded }, Some(n)) => {
                k_set.contains(&n) && n != *excluded
            }
            _ => false,
        }
    }

    /// Evaluate at `x >= 1` to roughly `prec` bits.
    pub fn eval(&self, x: &Rat, prec: u32) -> Result<Num, FunclassError> {
        if *x < Rat::one() {
            return Err(FunclassError::DomainBelowOne(x.clone()));
        }
        let f_of = |x: &Rat| -> Num {
            if let Some(e) = plus_one_pow2_exponent(x) {
                Num::Exact(Rat::from_integer(BigInt::from(e)))
            } else {
                Num::Approx(bigfloat::log2_interval(&(x + Rat::one()), prec))
            }
        };
        match self {
            FunctionSpec::Log2p1 => Ok(f_of(x)),
            FunctionSpec::SqrtLog2p1 => Ok(f_of(x).sqrt(prec)),
            FunctionSpec::Phi { .. } | FunctionSpec::PhiPrime { .. } => {
                if self.in_k(x) {
                    Ok(f_of(x).sqrt(prec))
                } else {
                    Ok(f_of(x))
                }
            }
            FunctionSpec::Sampled { points } => points
                .iter()
                .find(|(px, _)| px == x)
                .map(|(_, py)| Num::Exact(py.clone()))
                .ok_or_else(|| FunclassError::OffGrid(x.clone())),
        }
    }

    /// `log2` of the value, used by the hull dynamic program.
    pub fn eval_log2(&self, x: &Rat, prec: u32) -> Result<Num, FunclassError> {
        let v = self.eval(x, prec + 8)?;
        Ok(v.log2(prec))
    }
}

/// Result of one membership condition with an optional counterexample.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub pass: bool,
    pub witness: Option<String>,
}

impl ConditionReport {
    fn ok() -> Self {
        ConditionReport { pass: true, witness: None }
    }

    fn fail(w: String) -> Self {
        ConditionReport { pass: false, witness: Some(w) }
    }
}

/// The five conditions of the function class, checked on a sample grid.
#[derive(Debug, Clone)]
pub struct ClassFReport {
    pub normalized: ConditionReport,        // (i)  f(1)=1 and f(x)<x
    pub increasing: ConditionReport,        // (ii) strictly increasing, unbounded (proxy)
    pub subpolynomial: ConditionReport,     // (iii) x^{-q} f(x) decreasing tail, sampled q
    pub ratio_concave: ConditionReport,     // (iv) x/f(x) concave non-decreasing
    pub submultiplicative: ConditionReport, // (v) f(xy) <= f(x) f(y)
}

impl ClassFReport {
    pub fn all_pass(&self) -> bool {
        self.normalized.pass
            && self.increasing.pass
            && self.subpolynomial.pass
            && self.ratio_concave.pass
            && self.submultiplicative.pass
    }

    pub fn conditions(&self) -> [(&'static str, &ConditionReport); 5] {
        [
            ("normalized", &self.normalized),
            ("increasing", &self.increasing),
            ("subpolynomial", &self.subpolynomial),
            ("ratio_concave", &self.ratio_concave),
            ("submultiplicative", &self.submultiplicative),
        ]
    }
}

/// Check the five conditions of the class on the given grid. Condition (iii)
/// is spot-checked for `q` in `{1, 1/2, 1/4}` over the tail half of the grid
/// (a full limit is untestable from samples), and condition (ii)'s
/// unboundedness as continued growth over the tail.
pub fn check_class_f(
    spec: &FunctionSpec,
    grid: &[Rat],
    prec: u32,
    tol: &Rat,
) -> Result<ClassFReport, FunclassError> {
    assert!(!grid.is_empty(), "empty grid");
    let vals: Vec<Num> = grid
        .iter()
        .map(|x| spec.eval(x, prec))
        .collect::<Result<_, _>>()?;

    // (i)
    let one = Rat::one();
    let f1 = spec.eval(&one, prec)?;
    let mut normalized = if f1.le_tol(&Num::Exact(one.clone()), tol)
        && Num::Exact(one.clone()).le_tol(&f1, tol)
    {
        ConditionReport::ok()
    } else {
        ConditionReport::fail(format!("f(1) = {}", f1.to_string_tagged()))
    };
    if normalized.pass {
        for (x, v) in grid.iter().zip(&vals) {
            if *x > one && !v.lt_mid(&Num::Exact(x.clone())) {
                normalized =
                    ConditionReport::fail(format!("f(x) >= x at x = {}", format_rat(x)));
                break;
            }
        }
    }

    // (ii): strict increase everywhere; growth still visible over the tail.
    let mut increasing = ConditionReport::ok();
    for (w, xw) in vals.windows(2).zip(grid.windows(2)) {
        if !w[0].lt_mid(&w[1]) {
            increasing = ConditionReport::fail(format!(
                "not increasing between x = {} and x = {}",
                format_rat(&xw[0]),
                format_rat(&xw[1])
            ));
            break;
        }
    }
    if increasing.pass && grid.len() >= 4 {
        let mid = grid.len() / 2;
        if !vals[mid].lt_mid(&vals[vals.len() - 1]) {
            increasing = ConditionReport::fail("no growth over the grid tail".into());
        }
    }

    // (iii): in log2 domain, f(x)/x^q decreasing means
    // log2 f(x') - log2 f(x) <= q (log2 x' - log2 x).
    let mut subpolynomial = ConditionReport::ok();
    let tail_start = grid.len() / 2;
    let qs = [
        Rat::one(),
        Rat::new(BigInt::one(), BigInt::from(2)),
        Rat::new(BigInt::one(), BigInt::from(4)),
    ];
    'qloop: for q in qs {
        for j in tail_start..grid.len().saturating_sub(1) {
            let lf0 = vals[j].log2(prec);
            let lf1 = vals[j + 1].log2(prec);
            let lx0 = Num::fold(bigfloat::log2_interval(&grid[j], prec));
            let lx1 = Num::fold(bigfloat::log2_interval(&grid[j + 1], prec));
            let lhs = lf1.sub(&lf0);
            let rhs = lx1.sub(&lx0).scale(&q);
            if !lhs.le_tol(&rhs, tol) {
                subpolynomial = ConditionReport::fail(format!(
                    "x^-q f(x) not decreasing at x = {} for q = {}",
                    format_rat(&grid[j]),
                    format_rat(&q)
                ));
                break 'qloop;
            }
        }
    }

    // (iv): x/f(x) non-decreasing with non-increasing slopes.
    let ratios: Vec<Num> = grid
        .iter()
        .zip(&vals)
        .map(|(x, v)| Num::Exact(x.clone()).div(v))
        .collect();
    let mut ratio_concave = ConditionReport::ok();
    for (w, xw) in ratios.windows(2).zip(grid.windows(2)) {
        if !w[0].le_tol(&w[1], tol) {
            ratio_concave =
                ConditionReport::fail(format!("x/f(x) decreasing at x = {}", format_rat(&xw[0])));
            break;
        }
    }
    if ratio_concave.pass {
        for j in 0..grid.len().saturating_sub(2) {
            let dx0 = Num::Exact(&grid[j + 1] - &grid[j]);
            let dx1 = Num::Exact(&grid[j + 2] - &grid[j + 1]);
            let s0 = ratios[j + 1].sub(&ratios[j]).div(&dx0);
            let s1 = ratios[j + 2].sub(&ratios[j + 1]).div(&dx1);
            if !s1.le_tol(&s0, tol) {
                ratio_concave = ConditionReport::fail(format!(
                    "x/f(x) slope increases at x = {}",
                    format_rat(&grid[j + 1])
                ));
                break;
            }
        }
    }

    // (v): all sampled pairs with product inside the grid range.
    let x_max = grid.last().unwrap().clone();
    let mut submultiplicative = ConditionReport::ok();
    'pairs: for (i, xi) in grid.iter().enumerate() {
        for xj in grid.iter().skip(i) {
            let prod = xi * xj;
            if prod > x_max {
                break;
            }
            let fxy = match spec.eval(&prod, prec) {
                Ok(v) => v,
                Err(FunclassError::OffGrid(_)) => continue, // sampled spec: skip
                Err(e) => return Err(e),
            };
            let bound = vals[i].mul(&spec.eval(xj, prec)?);
            if !fxy.le_tol(&bound, tol) {
                submultiplicative = ConditionReport::fail(format!(
                    "f(xy) > f(x)f(y) at x = {}, y = {}",
                    format_rat(xi),
                    format_rat(xj)
                ));
                break 'pairs;
            }
        }
    }

    Ok(ClassFReport {
        normalized,
        increasing,
        subpolynomial,
        ratio_concave,
        submultiplicative,
    })
}

/// `M_f(x) = f^{-1}(36 x^2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MfValue {
    /// Materialized exact integer.
    Exact(BigUint),
    /// Exponent form `2^e - 1` for `e` beyond the materialization cap.
    Symbolic { exponent: Rat },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfResult {
    pub value: MfValue,
    /// Non-integer inverse was rounded up to the next integer.
    pub rounded_up: bool,
    /// Small enough to serve as a vector support bound (fits 64 bits).
    pub materializable: bool,
}

impl MfResult {
    pub fn display(&self) -> String {
        match &self.value {
            MfValue::Exact(v) => {
                if let Some(e) = exact_pow2_minus_one(v) {
                    if e >= 16 {
                        return format!("2^{e} - 1");
                    }
                }
                format!("{v}")
            }
            MfValue::Symbolic { exponent } => format!("2^({}) - 1", format_rat(exponent)),
        }
    }
}

fn exact_pow2_minus_one(v: &BigUint) -> Option<u64> {
    let w = v + BigUint::one();
    if w.count_ones() == 1 {
        Some(w.trailing_zeros().unwrap_or(0))
    } else {
        None
    }
}

const MF_MATERIALIZE_EXP_CAP: u64 = 4096;

/// Compute `M_f(x)`, exactly when the result has at most 4096 bits,
/// otherwise in exponent form flagged non-materializable. Non-integer
/// inverses are rounded up: downstream bounds only use `M_f` as a lower
/// threshold, so rounding up is conservative.
pub fn m_f(x: &Rat, spec: &FunctionSpec) -> Result<MfResult, FunclassError> {
    assert!(x.is_positive(), "M_f is used with positive arguments");
    let y = Rat::from_integer(BigInt::from(36)) * x * x;
    let exponent: Rat = match spec {
        FunctionSpec::Log2p1 => y,
        FunctionSpec::SqrtLog2p1 => &y * &y,
        _ => return Err(FunclassError::NotInvertible(spec.kind_name())),
    };
    let materializable = exponent <= Rat::from_integer(BigInt::from(64));
    if exponent > Rat::from_integer(BigInt::from(MF_MATERIALIZE_EXP_CAP)) {
        return Ok(MfResult {
            value: MfValue::Symbolic { exponent },
            rounded_up: false,
            materializable: false,
        });
    }
    if exponent.denom().is_one() {
        let e = exponent.numer().to_u64().expect("capped");
        let v = (BigUint::one() << (e as usize)) - BigUint::one();
        return Ok(MfResult { value: MfValue::Exact(v), rounded_up: false, materializable });
    }
    // ceil(2^e) - 1, determined by refining the enclosure. The exponent is a
    // non-integer rational, so 2^e is irrational and the ceiling is well
    // defined; refinement terminates.
    let mut prec = 96u32;
    loop {
        let enc = bigfloat::exp2_interval(&exponent, prec);
        let clo = enc.lo.ceil().to_integer();
        let chi = enc.hi.ceil().to_integer();
        if clo == chi {
            let v = (clo - BigInt::one()).to_biguint().expect("positive");
            return Ok(MfResult { value: MfValue::Exact(v), rounded_up: true, materializable });
        }
        prec *= 2;
        assert!(prec <= 1 << 20, "m_f rounding did not converge");
    }
}

/// Right derivative at 1 with the step used (for sampled specs).
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub value: Num,
    pub step: Option<Rat>,
}

pub fn right_derivative_at_1(
    spec: &FunctionSpec,
    prec: u32,
) -> Result<DerivativeReport, FunclassError> {
    let ln2 = bigfloat::ln2_interval(prec);
    match spec {
        // d/dx log2(x+1) at 1 is 1/(2 ln 2); phi kinds agree with f just
        // right of 1 (K contains integers >= 2 only).
        FunctionSpec::Log2p1 | FunctionSpec::Phi { .. } | FunctionSpec::PhiPrime { .. } => {
            Ok(DerivativeReport {
                value: Num::fold(ln2.scale(&Rat::from_integer(BigInt::from(2))).recip()),
                step: None,
            })
        }
        FunctionSpec::SqrtLog2p1 => Ok(DerivativeReport {
            value: Num::fold(ln2.scale(&Rat::from_integer(BigInt::from(4))).recip()),
            step: None,
        }),
        FunctionSpec::Sampled { points } => {
            if points.len() < 2 {
                return Err(FunclassError::EmptySpec);
            }
            let (x0, y0) = &points[0];
            let (x1, y1) = &points[1];
            let step = x1 - x0;
            Ok(DerivativeReport {
                value: Num::Exact((y1 - y0) / &step),
                step: Some(step),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{pow2, rat, rat_int};

    #[test]
    fn eval_f_examples() {
        let f = FunctionSpec::Log2p1;
        assert_eq!(f.eval(&rat_int(1), 96).unwrap(), Num::Exact(rat_int(1)));
        assert_eq!(f.eval(&rat_int(3), 96).unwrap(), Num::Exact(rat_int(2)));
        let big = pow2(36) - rat_int(1);
        assert_eq!(f.eval(&big, 96).unwrap(), Num::Exact(rat_int(36)));
        assert!(f.eval(&rat(1, 2), 96).is_err());
        // irrational value is precision-tagged
        let v = f.eval(&rat_int(2), 96).unwrap();
        assert!(!v.is_exact());
        assert!((v.mid().to_f64().unwrap() - 1.584962500721156).abs() < 1e-12);
    }

    #[test]
    fn phi_branches() {
        let k: BTreeSet<u64> = [15u64].into_iter().collect();
        let phi = FunctionSpec::Phi { k_set: k.clone() };
        // at 15 in K: sqrt(f(15)) = 2 exactly
        assert_eq!(phi.eval(&rat_int(15), 96).unwrap(), Num::Exact(rat_int(2)));
        // off K: f
        assert_eq!(phi.eval(&rat_int(3), 96).unwrap(), Num::Exact(rat_int(2)));
        let phip = FunctionSpec::PhiPrime { k_set: k, excluded: 15 };
        assert_eq!(phip.eval(&rat_int(15), 96).unwrap(), Num::Exact(rat_int(4)));
    }

    #[test]
    fn class_f_log2p1_passes() {
        let grid: Vec<Rat> = (0..=40).map(pow2).collect();
        let rep = check_class_f(&FunctionSpec::Log2p1, &grid, 128, &default_tolerance()).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        let rep =
            check_class_f(&FunctionSpec::SqrtLog2p1, &grid, 128, &default_tolerance()).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn class_f_identity_fails_normalization() {
        let pts: Vec<(Rat, Rat)> = (1..=16).map(|i| (rat_int(i), rat_int(i))).collect();
        let spec = FunctionSpec::sampled(pts).unwrap();
        let grid: Vec<Rat> = (1..=16).map(rat_int).collect();
        let rep = check_class_f(&spec, &grid, 96, &default_tolerance()).unwrap();
        assert!(!rep.normalized.pass);
        assert!(rep.normalized.witness.is_some());
    }

    #[test]
    fn m_f_examples() {
        let f = FunctionSpec::Log2p1;
        let r = m_f(&rat_int(1), &f).unwrap();
        assert_eq!(r.value, MfValue::Exact((BigUint::one() << 36) - BigUint::one()));
        assert!(r.materializable);
        assert!(!r.rounded_up);
        let r2 = m_f(&rat_int(2), &f).unwrap();
        assert_eq!(r2.value, MfValue::Exact((BigUint::one() << 144) - BigUint::one()));
        assert!(!r2.materializable);
        assert_eq!(r2.display(), "2^144 - 1");
        // inversion identity M_f(sqrt(k/36)) = 2^k - 1, via k = 25
        let r3 = m_f(&rat(5, 6), &f).unwrap();
        assert_eq!(r3.value, MfValue::Exact((BigUint::one() << 25) - BigUint::one()));
        // integer exponent without rounding
        let r4 = m_f(&rat(1, 3), &f).unwrap(); // 36/9 = 4
        assert_eq!(r4.value, MfValue::Exact(BigUint::from(15u32)));
        assert!(!r4.rounded_up);
        // non-integer exponent rounds up: 36/25 = 1.44, 2^1.44 = 2.713 -> 3 - 1 = 2
        let r5 = m_f(&rat(1, 5), &f).unwrap();
        assert!(r5.rounded_up);
        assert_eq!(r5.value, MfValue::Exact(BigUint::from(2u32)));
        // far beyond the cap: symbolic
        let r6 = m_f(&rat_int(1000), &f).unwrap();
        assert!(matches!(r6.value, MfValue::Symbolic { .. }));
        assert!(!r6.materializable);
    }

    #[test]
    fn m_f_strictly_increasing() {
        let f = FunctionSpec::Log2p1;
        let mut prev: Option<BigUint> = None;
        for i in 1..=12 {
            let x = rat(i, 10);
            let r = m_f(&x, &f).unwrap();
            if let MfValue::Exact(v) = r.value {
                if let Some(p) = prev.replace(v.clone()) {
                    assert!(p < v, "not increasing at {i}");
                }
            }
        }
    }

    #[test]
    fn right_derivatives() {
        let d = right_derivative_at_1(&FunctionSpec::Log2p1, 128).unwrap();
        assert!((d.value.mid().to_f64().unwrap() - 0.7213475204444817).abs() < 1e-12);
        assert!(!d.value.is_exact());
        let d = right_derivative_at_1(&FunctionSpec::SqrtLog2p1, 128).unwrap();
        assert!((d.value.mid().to_f64().unwrap() - 0.36067376022224085).abs() < 1e-12);
        let pts =
            vec![(rat_int(1), rat_int(1)), (rat_int(2), rat_int(2)), (rat_int(3), rat_int(3))];
        let spec = FunctionSpec::sampled(pts).unwrap();
        let d = right_derivative_at_1(&spec, 96).unwrap();
        assert_eq!(d.value, Num::Exact(rat_int(1)));
        assert_eq!(d.step, Some(rat_int(1)));
    }
}
