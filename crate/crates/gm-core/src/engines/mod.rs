//! Norm engines: evaluators returning exact values or certified brackets,
//! with norming-functional witnesses.
//!
//! An engine's result is a bracket `[lower, upper]` of exact field values;
//! `exact` means the two coincide. Witnesses are functional expressions that
//! pair exactly against the input and lie in the relevant norming set, so a
//! reported lower bound is always independently checkable by one exact
//! pairing.
//!
//! Faithful-mode parameters are intentionally refused, never approximated:
//! the thresholds they would require (for example `f(j_1) >= 36`, i.e.
//! `j_1 >= 2^36 - 1`) are reported symbolically instead.

mod gm;
mod renormed;
mod schlumprecht;

pub use gm::{gm_dictionary, DictElem, Dictionary, GmEngine, Provenance};
pub use renormed::{
    enumerate_special_functionals, renorm_codomain, renorm_params, renorm_r, RenormedEngine,
};
pub use schlumprecht::SchlumprechtEngine;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::funclass::FunclassError;
use crate::rat::Rat;
use crate::value::Val;
use crate::vec::{FinVec, Interval};

/// Errors shared by the engines and constructions.
#[derive(Debug, Clone)]
pub enum EngineError {
    /// Faithful-mode computation refused: the parameters are not
    /// materializable. Carries the symbolic threshold.
    FaithfulRefusal { operation: &'static str, threshold: String },
    InvalidParams(String),
    ZeroVector(&'static str),
    CapExceeded { what: &'static str, needed: u64, cap: u64 },
    GeneratorExhausted { stage: String },
    Unsupported(&'static str),
    Funclass(FunclassError),
}

impl From<FunclassError> for EngineError {
    fn from(e: FunclassError) -> Self {
        EngineError::Funclass(e)
    }
}

impl core::fmt::Display for EngineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EngineError::FaithfulRefusal { operation, threshold } => {
                write!(f, "refused: faithful-mode {operation} is not materializable; requires {threshold}")
            }
            EngineError::InvalidParams(s) => write!(f, "invalid parameters: {s}"),
            EngineError::ZeroVector(op) => write!(f, "{op}: zero vector"),
            EngineError::CapExceeded { what, needed, cap } => {
                write!(f, "{what}: needs {needed}, cap {cap}")
            }
            EngineError::GeneratorExhausted { stage } => {
                write!(f, "block generator exhausted at {stage}")
            }
            EngineError::Unsupported(s) => write!(f, "unsupported: {s}"),
            EngineError::Funclass(e) => write!(f, "{e}"),
        }
    }
}

/// Toy or faithful parameter mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Toy,
    Faithful,
}

/// Parameters of the layered space: the lacunary set `J`, its alternating
/// split into `K` and `L`, the denominator bound of `Q` and the generation
/// budget of the norming dictionary.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SpaceParams {
    pub mode: Mode,
    /// Strictly increasing finite list in toy mode; ignored in faithful mode
    /// (the faithful `J` is a generator rule whose members are not
    /// materializable).
    #[serde(default)]
    pub j: Vec<u64>,
    pub d_max: u64,
    pub dict_depth: u32,
    pub support_bound: u32,
}

impl SpaceParams {
    pub fn toy(j: Vec<u64>, d_max: u64, dict_depth: u32, support_bound: u32) -> Self {
        SpaceParams { mode: Mode::Toy, j, d_max, dict_depth, support_bound }
    }

    pub fn faithful() -> Self {
        SpaceParams { mode: Mode::Faithful, j: Vec::new(), d_max: 0, dict_depth: 0, support_bound: 0 }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        match self.mode {
            Mode::Faithful => Ok(()),
            Mode::Toy => {
                if self.j.is_empty() {
                    return Err(EngineError::InvalidParams("toy J must be nonempty".into()));
                }
                if self.j[0] < 1 {
                    return Err(EngineError::InvalidParams("J elements start at 1".into()));
                }
                if self.j.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(EngineError::InvalidParams(
                        "J must be strictly increasing".into(),
                    ));
                }
                if self.d_max == 0 {
                    return Err(EngineError::InvalidParams("d_max must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// The symbolic faithful constraints, for refusal messages.
    pub fn faithful_threshold() -> String {
        "f(j_1) >= 36 (j_1 >= 2^36 - 1) and log log log j_{i+1} >= 2 j_i".to_string()
    }

    /// `K = {j_2, j_4, ...}`.
    pub fn k_set(&self) -> BTreeSet<u64> {
        self.j.iter().skip(1).step_by(2).copied().collect()
    }

    /// `L = {j_1, j_3, ...}`, in order.
    pub fn l_list(&self) -> Vec<u64> {
        self.j.iter().step_by(2).copied().collect()
    }

    /// `j_pos` with a 1-based position.
    pub fn j_at(&self, pos: usize) -> Option<u64> {
        if pos == 0 {
            return None;
        }
        self.j.get(pos - 1).copied()
    }

    /// Root length of a special sequence of length `k`: `j_{2k-1}`.
    pub fn special_root_length(&self, k: u64) -> Result<u64, EngineError> {
        let pos = k
            .checked_mul(2)
            .and_then(|p| p.checked_sub(1))
            .and_then(|p| usize::try_from(p).ok())
            .unwrap_or(usize::MAX);
        self.j_at(pos).ok_or(EngineError::CapExceeded {
            what: "special sequence root j_{2k-1}: J too short",
            needed: pos.min(u64::MAX as usize) as u64,
            cap: self.j.len() as u64,
        })
    }

    pub fn d_max_int(&self) -> BigInt {
        BigInt::from(self.d_max)
    }
}

/// A norm evaluation: certified bracket plus optional witness.
#[derive(Debug, Clone)]
pub struct NormResult {
    pub lower: Val,
    pub upper: Val,
    pub exact: bool,
    pub witness: Option<Functional>,
}

impl NormResult {
    pub fn exact(v: Val, witness: Option<Functional>) -> Self {
        NormResult { lower: v.clone(), upper: v, exact: true, witness }
    }

    pub fn bracket(lower: Val, upper: Val, witness: Option<Functional>) -> Self {
        let exact = lower == upper;
        NormResult { lower, upper, exact, witness }
    }

    pub fn value(&self) -> &Val {
        &self.lower
    }
}

/// Functional expressions: the elements of the norming sets, kept in the
/// shape that certifies them.
#[derive(Debug, Clone)]
pub enum Functional {
    /// `±e_i`.
    Unit { index: u32, negative: bool },
    /// An explicit rational functional; certified through its l1 norm
    /// (membership in the l1 unit ball when at most 1).
    Rational(FinVec),
    /// Plain sum (dual norm bounded by the sum of the parts' bounds).
    Sum(Vec<Functional>),
    ScaleRat(Rat, Box<Functional>),
    /// Scaling by an exact field value (used for parts like `f(m) q e_i`).
    ScaleVal(Val, Box<Functional>),
    /// `f(m)^{-1} (g_1 + ... + g_m)` over successive parts: dual norm at
    /// most 1 when each part has dual norm at most 1, by the lower
    /// f-estimate.
    MForm { m: u64, parts: Vec<Functional> },
    /// `f(k)^{-1/2} (g_1 + ... + g_k)`; `chain_checked` records that the
    /// parts were built as a sigma-consistent special sequence, which is
    /// what makes the functional a norming one.
    Special { k: u64, parts: Vec<Functional>, chain_checked: bool },
    /// Interval restriction (norming sets are closed under these).
    Restrict(Interval, Box<Functional>),
}

impl Functional {
    pub fn unit(index: u32, negative: bool) -> Self {
        Functional::Unit { index, negative }
    }

    pub fn mform(m: u64, parts: Vec<Functional>) -> Self {
        Functional::MForm { m, parts }
    }

    /// Exact pairing against a vector.
    pub fn pair(&self, x: &FinVec) -> Val {
        match self {
            Functional::Unit { index, negative } => {
                let c = x.get(*index);
                Val::from_rat(if *negative { -c } else { c })
            }
            Functional::Rational(g) => Val::from_rat(g.pair(x)),
            Functional::Sum(parts) => {
                Val::sum(parts.iter().map(|p| p.pair(x)).collect())
            }
            Functional::ScaleRat(q, inner) => inner.pair(x).mul_rat(q),
            Functional::ScaleVal(v, inner) => inner.pair(x).mul(v),
            Functional::MForm { m, parts } => {
                Val::sum(parts.iter().map(|p| p.pair(x)).collect()).div_f(*m)
            }
            Functional::Special { k, parts, .. } => {
                Val::sum(parts.iter().map(|p| p.pair(x)).collect()).div_sqrt_f(*k)
            }
            Functional::Restrict(e, inner) => inner.pair(&x.project(e)),
        }
    }

    /// Range of indices the functional can see.
    pub fn range(&self) -> Interval {
        fn hull(a: Interval, b: Interval) -> Interval {
            match (a, b) {
                (Interval::Empty, x) | (x, Interval::Empty) => x,
                (Interval::Range { lo: a1, hi: a2 }, Interval::Range { lo: b1, hi: b2 }) => {
                    Interval::Range { lo: a1.min(b1), hi: a2.max(b2) }
                }
            }
        }
        match self {
            Functional::Unit { index, .. } => Interval::Range { lo: *index, hi: *index },
            Functional::Rational(g) => g.range().unwrap_or(Interval::Empty),
            Functional::Sum(parts)
            | Functional::MForm { parts, .. }
            | Functional::Special { parts, .. } => {
                parts.iter().fold(Interval::Empty, |acc, p| hull(acc, p.range()))
            }
            Functional::ScaleRat(_, inner) | Functional::ScaleVal(_, inner) => inner.range(),
            Functional::Restrict(e, inner) => inner.range().intersect(e),
        }
    }

    /// Certified upper bound on the dual norm in any space of the family
    /// (normalized bimonotone basis with a lower f-estimate).
    pub fn dual_norm_upper(&self) -> Val {
        match self {
            Functional::Unit { .. } => Val::one(),
            Functional::Rational(g) => Val::from_rat(g.l1()),
            Functional::Sum(parts) => {
                Val::sum(parts.iter().map(|p| p.dual_norm_upper()).collect())
            }
            Functional::ScaleRat(q, inner) => inner.dual_norm_upper().mul_rat(&q.abs()),
            Functional::ScaleVal(v, inner) => inner.dual_norm_upper().mul(&v.abs()),
            Functional::MForm { m, parts } => {
                let one = Val::one();
                let successive = parts_successive(parts);
                let all_unit = parts.iter().all(|p| p.dual_norm_upper() <= one);
                if successive && all_unit && parts.len() as u64 <= *m {
                    one
                } else {
                    Val::sum(parts.iter().map(|p| p.dual_norm_upper()).collect()).div_f(*m)
                }
            }
            Functional::Special { k, parts, chain_checked } => {
                let one = Val::one();
                if *chain_checked {
                    one
                } else {
                    Val::sum(parts.iter().map(|p| p.dual_norm_upper()).collect())
                        .div_sqrt_f(*k)
                }
            }
            Functional::Restrict(_, inner) => inner.dual_norm_upper(),
        }
    }

    /// Coordinates as exact values (for canonical-form work on dictionaries).
    pub fn coords(&self) -> alloc::collections::BTreeMap<u32, Val> {
        use alloc::collections::BTreeMap;
        fn add_into(acc: &mut BTreeMap<u32, Val>, i: u32, v: Val) {
            let cur = acc.remove(&i).unwrap_or_else(Val::zero);
            let next = cur.add(&v);
            if !next.is_zero() {
                acc.insert(i, next);
            }
        }
        match self {
            Functional::Unit { index, negative } => {
                let mut m = BTreeMap::new();
                m.insert(*index, if *negative { Val::one().neg() } else { Val::one() });
                m
            }
            Functional::Rational(g) => g
                .iter()
                .map(|(i, c)| (*i, Val::from_rat(c.clone())))
                .collect(),
            Functional::Sum(parts) => {
                let mut acc = BTreeMap::new();
                for p in parts {
                    for (i, v) in p.coords() {
                        add_into(&mut acc, i, v);
                    }
                }
                acc
            }
            Functional::ScaleRat(q, inner) => inner
                .coords()
                .into_iter()
                .map(|(i, v)| (i, v.mul_rat(q)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
            Functional::ScaleVal(s, inner) => inner
                .coords()
                .into_iter()
                .map(|(i, v)| (i, v.mul(s)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
            Functional::MForm { m, parts } => {
                let sum = Functional::Sum(parts.clone()).coords();
                sum.into_iter().map(|(i, v)| (i, v.div_f(*m))).collect()
            }
            Functional::Special { k, parts, .. } => {
                let sum = Functional::Sum(parts.clone()).coords();
                sum.into_iter().map(|(i, v)| (i, v.div_sqrt_f(*k))).collect()
            }
            Functional::Restrict(e, inner) => inner
                .coords()
                .into_iter()
                .filter(|(i, _)| e.contains(*i))
                .collect(),
        }
    }

    /// Rational coordinate view, when every coordinate is rational.
    pub fn as_rational_vec(&self) -> Option<FinVec> {
        let mut v = FinVec::zero();
        for (i, c) in self.coords() {
            v.set(i, c.as_rational()?);
        }
        Some(v)
    }
}

fn parts_successive(parts: &[Functional]) -> bool {
    parts.windows(2).all(|w| w[0].range().before(&w[1].range()))
}

/// Engines evaluate norms of finitely supported vectors.
pub trait NormEval: Send + Sync {
    fn norm(&self, x: &FinVec) -> Result<NormResult, EngineError>;
    fn name(&self) -> &'static str;
    /// Whether the engine's norm satisfies a lower f-estimate.
    fn has_lower_f_estimate(&self) -> bool;
}

/// The sup norm.
#[derive(Debug, Default, Clone)]
pub struct SupEngine;

impl NormEval for SupEngine {
    fn norm(&self, x: &FinVec) -> Result<NormResult, EngineError> {
        if x.is_zero() {
            return Ok(NormResult::exact(Val::zero(), None));
        }
        let (idx, c) = x
            .iter()
            .max_by(|a, b| a.1.abs().cmp(&b.1.abs()).then(b.0.cmp(a.0)))
            .expect("nonzero");
        let w = Functional::unit(*idx, c.is_negative());
        Ok(NormResult::exact(Val::from_rat(c.abs()), Some(w)))
    }

    fn name(&self) -> &'static str {
        "sup"
    }

    fn has_lower_f_estimate(&self) -> bool {
        false
    }
}

/// The l1 norm.
#[derive(Debug, Default, Clone)]
pub struct L1Engine;

impl NormEval for L1Engine {
    fn norm(&self, x: &FinVec) -> Result<NormResult, EngineError> {
        if x.is_zero() {
            return Ok(NormResult::exact(Val::zero(), None));
        }
        let sign = FinVec::from_entries(x.iter().map(|(i, c)| {
            (*i, if c.is_negative() { -Rat::one() } else { Rat::one() })
        }));
        Ok(NormResult::exact(Val::from_rat(x.l1()), Some(Functional::Rational(sign))))
    }

    fn name(&self) -> &'static str {
        "ell1"
    }

    fn has_lower_f_estimate(&self) -> bool {
        true
    }
}

/// Verify the lower f-estimate `f(N)^{-1} sum ||E_i x|| <= ||x||` for one
/// interval family, bracket-soundly: the left side uses piece uppers, the
/// right side the lower bound of `x`. Returns the pass flag and the slack.
pub fn lower_f_estimate_check(
    engine: &dyn NormEval,
    x: &FinVec,
    partition: &[Interval],
) -> Result<(bool, Val), EngineError> {
    assert!(
        partition.windows(2).all(|w| w[0].before(&w[1])),
        "intervals must be successive"
    );
    let n = partition.len().max(1) as u64;
    let mut piece_vals = Vec::new();
    for e in partition {
        piece_vals.push(engine.norm(&x.project(e))?.upper);
    }
    // f(1) = 1: a single-interval family divides by nothing.
    let lhs = if n == 1 {
        Val::sum(piece_vals)
    } else {
        Val::sum(piece_vals).div_f(n)
    };
    let rhs = engine.norm(x)?.lower;
    let slack = rhs.sub(&lhs);
    Ok((slack >= Val::zero(), slack))
}

/// Result of the unconditional-constant estimation.
#[derive(Debug, Clone)]
pub struct UncondReport {
    /// Certified lower bound on the unconditional constant (exact for exact
    /// engines).
    pub constant: Val,
    pub worst_pattern: Vec<i8>,
    pub exact: bool,
    pub patterns_tried: u64,
}

/// Estimate the unconditional constant of `sum a_i x_i` over sign patterns:
/// `max_eps ||sum eps_i a_i x_i|| / ||sum a_i x_i||`. For real scalars the
/// supremum over moduli <= 1 is attained at signs by convexity. Bracket
/// semantics: lower bounds of flipped sums against the upper bound of the
/// base, so the result is a certified lower bound on the constant.
pub fn unconditional_constant(
    engine: &dyn NormEval,
    vectors: &[FinVec],
    coeffs: &[Rat],
    pattern_cap: u32,
) -> Result<UncondReport, EngineError> {
    if vectors.is_empty() || vectors.len() != coeffs.len() {
        return Err(EngineError::InvalidParams(
            "need equally many vectors and coefficients".into(),
        ));
    }
    let n = vectors.len();
    if n > 1 && !crate::vec::all_successive(vectors) && !linearly_independent(vectors) {
        return Err(EngineError::InvalidParams(
            "vectors must be successive or linearly independent".into(),
        ));
    }
    if n as u32 > pattern_cap {
        return Err(EngineError::CapExceeded {
            what: "sign pattern enumeration",
            needed: n as u64,
            cap: pattern_cap as u64,
        });
    }
    let base: FinVec = vectors
        .iter()
        .zip(coeffs)
        .fold(FinVec::zero(), |acc, (v, c)| acc.add(&v.scale(c)));
    let base_res = engine.norm(&base)?;
    if base_res.lower.is_zero() {
        return Err(EngineError::ZeroVector("unconditional constant denominator"));
    }
    let mut best = Val::zero();
    let mut best_pattern: Vec<i8> = alloc::vec![1; n];
    let mut all_exact = base_res.exact;
    // By homogeneity the pattern and its negation give the same norm; fix
    // the first sign to +1.
    let count = 1u64 << (n - 1);
    for bits in 0..count {
        let mut flipped = FinVec::zero();
        let mut pattern = Vec::with_capacity(n);
        pattern.push(1i8);
        for (i, (v, c)) in vectors.iter().zip(coeffs).enumerate() {
            let sign = if i == 0 {
                Rat::one()
            } else if (bits >> (i - 1)) & 1 == 1 {
                -Rat::one()
            } else {
                Rat::one()
            };
            if i > 0 {
                pattern.push(if sign.is_one() { 1 } else { -1 });
            }
            flipped = flipped.add(&v.scale(&(c * sign)));
        }
        let res = engine.norm(&flipped)?;
        all_exact &= res.exact;
        let ratio = res.lower.div(&base_res.upper);
        if ratio > best {
            best = ratio;
            best_pattern = pattern;
        }
    }
    Ok(UncondReport {
        constant: best,
        worst_pattern: best_pattern,
        exact: all_exact,
        patterns_tried: count,
    })
}

/// Rank check by fraction-free elimination on the support columns.
fn linearly_independent(vectors: &[FinVec]) -> bool {
    let cols: Vec<u32> = {
        let mut s = BTreeSet::new();
        for v in vectors {
            s.extend(v.support());
        }
        s.into_iter().collect()
    };
    let mut rows: Vec<Vec<Rat>> = vectors
        .iter()
        .map(|v| cols.iter().map(|c| v.get(*c)).collect())
        .collect();
    let mut rank = 0usize;
    for col in 0..cols.len() {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in rank + 1..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &pivot;
            for c in col..cols.len() {
                let v = &rows[r][c] - &(&factor * &rows[rank][c]);
                rows[r][c] = v;
            }
        }
        rank += 1;
    }
    rank == vectors.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn e(i: u32) -> FinVec {
        FinVec::unit(i)
    }

    #[test]
    fn sup_and_l1_engines() {
        let x = e(1).add(&e(3).scale(&rat(-5, 2)));
        let s = SupEngine.norm(&x).unwrap();
        assert_eq!(s.lower, Val::from_rat(rat(5, 2)));
        assert!(s.exact);
        assert_eq!(s.witness.unwrap().pair(&x), Val::from_rat(rat(5, 2)));
        let l = L1Engine.norm(&x).unwrap();
        assert_eq!(l.lower, Val::from_rat(rat(7, 2)));
        assert_eq!(l.witness.unwrap().pair(&x), Val::from_rat(rat(7, 2)));
    }

    #[test]
    fn sup_norm_lacks_lower_f_estimate() {
        let x = e(1).add(&e(2));
        let part = [Interval::new(1, 1), Interval::new(2, 2)];
        let (ok, slack) = lower_f_estimate_check(&SupEngine, &x, &part).unwrap();
        assert!(!ok, "sup norm should fail the estimate, slack {slack:?}");
        // 2/f(2) > 1
        assert!(slack < Val::zero());
    }

    #[test]
    fn functional_machinery() {
        let w = Functional::mform(
            2,
            alloc::vec![Functional::unit(1, false), Functional::unit(2, false)],
        );
        let x = e(1).add(&e(2));
        // pairing = 2/f(2)
        assert_eq!(w.pair(&x), Val::from_int(2).div_f(2));
        assert_eq!(w.dual_norm_upper(), Val::one());
        assert_eq!(w.range(), Interval::new(1, 2));
        // restriction
        let r = Functional::Restrict(Interval::new(1, 1), Box::new(w.clone()));
        assert_eq!(r.pair(&x), Val::one().div_f(2));
        // rational view
        let rv = w.as_rational_vec();
        assert!(rv.is_none(), "f(2) scale is irrational");
        let w3 = Functional::mform(
            3,
            alloc::vec![
                Functional::unit(1, false),
                Functional::unit(2, false),
                Functional::unit(3, false)
            ],
        );
        // f(3) = 2: rational coordinates 1/2
        assert_eq!(
            w3.as_rational_vec().unwrap(),
            FinVec::parse("1:1/2,2:1/2,3:1/2").unwrap()
        );
    }

    #[test]
    fn params_sets() {
        let p = SpaceParams::toy(alloc::vec![1, 2, 3, 7, 15], 64, 2, 8);
        p.validate().unwrap();
        assert_eq!(p.k_set().into_iter().collect::<Vec<_>>(), alloc::vec![2, 7]);
        assert_eq!(p.l_list(), alloc::vec![1, 3, 15]);
        assert_eq!(p.special_root_length(2).unwrap(), 3);
        assert!(p.special_root_length(7).is_err());
        assert!(SpaceParams::toy(alloc::vec![3, 2], 64, 1, 4).validate().is_err());
    }

    #[test]
    fn uncond_single_vector_is_one() {
        let rep =
            unconditional_constant(&SupEngine, &[e(1).add(&e(2))], &[rat_int(1)], 10).unwrap();
        assert_eq!(rep.constant, Val::one());
        assert_eq!(rep.worst_pattern, alloc::vec![1]);
    }

    #[test]
    fn independence_check() {
        let a = e(1).add(&e(2));
        let b = e(2).add(&e(3));
        assert!(linearly_independent(&[a.clone(), b.clone()]));
        let c = a.add(&b);
        assert!(!linearly_independent(&[a, b, c]));
    }
}
