//! The exact value field for norm computations.
//!
//! Norm values in this crate are generated from rationals by the operations
//! `+`, `*`, `1/x`, multiplication by `f(m) = log2(m+1)` and by
//! `sqrt(f(m))`. They are therefore elements of the field of rational
//! functions in the symbols
//!
//! * `log2(p)` for odd primes `p` (so `f(m)` expands exactly through the
//!   prime factorization of `m+1`, with the power-of-two part rational),
//! * `sqrt(f(m))` for `m` where `f(m)` is irrational,
//! * `sqrt(n)` for squarefree integers `n` (arising from `sqrt` of rational
//!   `f`-values such as `f(3) = 2`).
//!
//! A [`Val`] is a shared expression node carrying an eagerly propagated
//! `f64` enclosure. Comparisons resolve through the enclosure when it
//! separates, otherwise through the cached exact normal form (a quotient of
//! polynomials over the symbols), with a final escalating-precision interval
//! evaluation for structurally distinct values. Equal normal forms are equal
//! reals; distinct normal forms that agree as reals would require an
//! algebraic relation among logarithms of multiplicatively independent
//! integers, which is not known to exist and never arises from these
//! constructions — the comparator panics past a generous precision cap
//! rather than guess.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::race::OnceBox;

use crate::bigfloat::{self, Enclosure};
use crate::rat::{format_decimal, format_rat, Rat};

/// Trial-division factorization; arguments are small (piece counts, set
/// elements) so this is never a bottleneck.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut push = |p: u64, e: u32| {
        if e > 0 {
            out.push((p, e));
        }
    };
    let mut e = 0;
    while n % 2 == 0 {
        n /= 2;
        e += 1;
    }
    push(2, e);
    let mut d = 3u64;
    while (d as u128) * (d as u128) <= n as u128 {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        push(d, e);
        d += 2;
    }
    push(n, if n > 1 { 1 } else { 0 });
    out
}

// ---------------------------------------------------------------------------
// Symbols, monomials, polynomials
// ---------------------------------------------------------------------------

/// An irrational symbol of the value field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `log2(p)`, `p` an odd prime.
    Log(u64),
    /// `sqrt(log2(m+1))` where `f(m)` is irrational.
    SqrtF(u64),
    /// `sqrt(n)`, `n` squarefree, `n >= 2`.
    SqrtInt(u64),
}

impl Atom {
    fn enclosure(&self, prec: u32) -> Enclosure {
        match *self {
            Atom::Log(p) => bigfloat::log2_interval(&Rat::from_integer(BigInt::from(p)), prec),
            Atom::SqrtF(m) => {
                let f = f_enclosure(m, prec + 8);
                bigfloat::sqrt_enclosure(&f, prec)
            }
            Atom::SqrtInt(n) => {
                bigfloat::sqrt_interval(&Rat::from_integer(BigInt::from(n)), prec)
            }
        }
    }
}

fn fmt_atom(a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match *a {
        Atom::Log(p) => write!(f, "log2({p})"),
        Atom::SqrtF(m) => write!(f, "sqrt(log2({}))", m + 1),
        Atom::SqrtInt(n) => write!(f, "sqrt({n})"),
    }
}

/// Monomial: sorted `(atom, exponent)` pairs. Square-root atoms always carry
/// exponent 1 (pairs reduce on multiplication).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Mono(Vec<(Atom, u32)>);

impl Mono {
    fn one() -> Self {
        Mono(Vec::new())
    }

    fn atom(a: Atom) -> Self {
        Mono(vec![(a, 1)])
    }

    fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sparse polynomial over [`Mono`] with rational coefficients, terms sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly(Vec<(Mono, Rat)>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(q: Rat) -> Self {
        if q.is_zero() {
            Poly::zero()
        } else {
            Poly(vec![(Mono::one(), q)])
        }
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    fn atom(a: Atom) -> Self {
        Poly(vec![(Mono::atom(a), Rat::one())])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_constant(&self) -> Option<Rat> {
        if self.0.is_empty() {
            return Some(Rat::zero());
        }
        if self.0.len() == 1 && self.0[0].0.is_one() {
            return Some(self.0[0].1.clone());
        }
        None
    }

    fn add_term(acc: &mut Vec<(Mono, Rat)>, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        match acc.binary_search_by(|(em, _)| em.cmp(&m)) {
            Ok(i) => {
                acc[i].1 += c;
                if acc[i].1.is_zero() {
                    acc.remove(i);
                }
            }
            Err(i) => acc.insert(i, (m, c)),
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut acc = self.0.clone();
        for (m, c) in &o.0 {
            Self::add_term(&mut acc, m.clone(), c.clone());
        }
        Poly(acc)
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, q: &Rat) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * q)).collect())
    }

    /// Multiply two monomials; reduction of paired square roots can produce
    /// a whole polynomial, hence the return type.
    fn mono_mul(a: &Mono, b: &Mono, coef: Rat) -> Poly {
        let mut logs: Vec<(u64, u32)> = Vec::new();
        let mut roots_f: Vec<u64> = Vec::new();
        let mut roots_i: Vec<u64> = Vec::new();
        let mut reduce_f: Vec<u64> = Vec::new();
        let mut reduce_i: Vec<u64> = Vec::new();
        let mut push = |atom: &Atom, e: u32| match *atom {
            Atom::Log(p) => match logs.binary_search_by_key(&p, |t| t.0) {
                Ok(i) => logs[i].1 += e,
                Err(i) => logs.insert(i, (p, e)),
            },
            Atom::SqrtF(m) => {
                debug_assert_eq!(e, 1);
                if let Some(i) = roots_f.iter().position(|&x| x == m) {
                    roots_f.remove(i);
                    reduce_f.push(m);
                } else {
                    roots_f.push(m);
                }
            }
            Atom::SqrtInt(n) => {
                debug_assert_eq!(e, 1);
                if let Some(i) = roots_i.iter().position(|&x| x == n) {
                    roots_i.remove(i);
                    reduce_i.push(n);
                } else {
                    roots_i.push(n);
                }
            }
        };
        for (atom, e) in a.0.iter().chain(b.0.iter()) {
            push(atom, *e);
        }
        let mut atoms: Vec<(Atom, u32)> = logs.into_iter().map(|(p, e)| (Atom::Log(p), e)).collect();
        for m in roots_f {
            atoms.push((Atom::SqrtF(m), 1));
        }
        for n in roots_i {
            atoms.push((Atom::SqrtInt(n), 1));
        }
        atoms.sort();
        let mut out = Poly(vec![(Mono(atoms), coef)]);
        for m in reduce_f {
            out = out.mul(&f_poly(m));
        }
        let mut int_factor = Rat::one();
        for n in reduce_i {
            int_factor *= Rat::from_integer(BigInt::from(n));
        }
        if !int_factor.is_one() {
            out = out.scale(&int_factor);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut acc: Vec<(Mono, Rat)> = Vec::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &o.0 {
                let prod = Self::mono_mul(ma, mb, ca * cb);
                for (m, c) in prod.0 {
                    Self::add_term(&mut acc, m, c);
                }
            }
        }
        Poly(acc)
    }

    fn enclosure(&self, prec: u32) -> Enclosure {
        let mut acc = Enclosure::exact(Rat::zero());
        for (m, c) in &self.0 {
            let mut term = Enclosure::exact(c.clone());
            for (atom, e) in &m.0 {
                let a = atom.enclosure(prec);
                for _ in 0..*e {
                    term = term.mul(&a);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Sign of the polynomial's value; `None` for the zero polynomial.
    /// Panics if precision escalation cannot separate a structurally nonzero
    /// polynomial from zero (see module docs).
    fn sign(&self) -> Option<Ordering> {
        if self.is_zero() {
            return None;
        }
        if let Some(c) = self.as_constant() {
            return Some(c.cmp(&Rat::zero()));
        }
        let mut prec = 64u32;
        while prec <= 16384 {
            let e = self.enclosure(prec);
            if e.lo.is_positive() {
                return Some(Ordering::Greater);
            }
            if e.hi.is_negative() {
                return Some(Ordering::Less);
            }
            prec *= 2;
        }
        panic!("value comparison unresolved at 16384 bits: {self:?}");
    }
}

/// `f(m) = log2(m+1)` expanded into the symbol polynomial.
pub fn f_poly(m: u64) -> Poly {
    let mut out = Poly::zero();
    for (p, e) in factorize(m + 1) {
        if p == 2 {
            out = out.add(&Poly::constant(Rat::from_integer(BigInt::from(e))));
        } else {
            out = out.add(&Poly::atom(Atom::Log(p)).scale(&Rat::from_integer(BigInt::from(e))));
        }
    }
    out
}

/// Is `f(m)` rational, i.e. `m+1` a power of two? Returns the exponent.
pub fn f_rational(m: u64) -> Option<u64> {
    let v = m + 1;
    if v.count_ones() == 1 {
        Some(v.trailing_zeros() as u64)
    } else {
        None
    }
}

fn f_enclosure(m: u64, prec: u32) -> Enclosure {
    bigfloat::log2_interval(&Rat::from_integer(BigInt::from(m) + BigInt::one()), prec)
}

// ---------------------------------------------------------------------------
// Val: shared expression nodes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Expr {
    Rat(Rat),
    /// `f(m)`, irrational.
    FLog(u64),
    /// `sqrt(f(m))`, `f(m)` irrational.
    SqrtF(u64),
    /// `sqrt(n)`, `n` squarefree.
    SqrtInt(u64),
    Sum(Vec<Val>),
    Neg(Val),
    MulRat(Rat, Val),
    Mul(Val, Val),
    /// Reciprocal of a value known to be nonzero.
    Recip(Val),
}

/// Exact normal form: `num/den`, `den` structurally nonzero with positive
/// real value.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub num: Poly,
    pub den: Poly,
}

#[derive(Debug)]
struct Node {
    expr: Expr,
    lo: f64,
    hi: f64,
    nf: OnceBox<NormalForm>,
}

/// An exact value of the norm field with a certified `f64` enclosure.
#[derive(Clone)]
pub struct Val(Arc<Node>);

impl fmt::Debug for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Val[{}, {}]({})", self.0.lo, self.0.hi, self)
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    (bigfloat::next_down(lo), bigfloat::next_up(hi))
}

fn mul_bounds(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    let mut lo = c[0];
    let mut hi = c[0];
    for v in &c[1..] {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    widen(lo, hi)
}

impl Val {
    fn new(expr: Expr, lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "invalid enclosure {lo} > {hi}");
        Val(Arc::new(Node { expr, lo, hi, nf: OnceBox::new() }))
    }

    pub fn from_rat(q: Rat) -> Self {
        let f = q.to_f64().unwrap_or(0.0);
        let (lo, hi) = if f.is_finite() { widen(f, f) } else { (f64::MIN, f64::MAX) };
        Val::new(Expr::Rat(q), lo, hi)
    }

    pub fn from_int(n: i64) -> Self {
        Val::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Val::from_int(0)
    }

    pub fn one() -> Self {
        Val::from_int(1)
    }

    /// `f(m) = log2(m+1)` as an exact value.
    pub fn f(m: u64) -> Self {
        assert!(m >= 1, "f is defined on [1, infinity)");
        if let Some(a) = f_rational(m) {
            return Val::from_rat(Rat::from_integer(BigInt::from(a)));
        }
        let (lo, hi) = f_enclosure(m, 64).to_f64_bounds();
        Val::new(Expr::FLog(m), lo, hi)
    }

    /// `sqrt(f(m))` as an exact value.
    pub fn sqrt_f(m: u64) -> Self {
        if let Some(a) = f_rational(m) {
            return Val::sqrt_int_val(a);
        }
        let (lo, hi) = bigfloat::sqrt_enclosure(&f_enclosure(m, 64), 64).to_f64_bounds();
        Val::new(Expr::SqrtF(m), lo, hi)
    }

    /// `sqrt(n)` for a non-negative integer, reduced to `a*sqrt(r)` with `r`
    /// squarefree.
    fn sqrt_int_val(n: u64) -> Self {
        if n == 0 {
            return Val::zero();
        }
        let mut outside = 1u64;
        let mut inside = 1u64;
        for (p, e) in factorize(n) {
            outside *= p.pow(e / 2);
            if e % 2 == 1 {
                inside *= p;
            }
        }
        let coef = Rat::from_integer(BigInt::from(outside));
        if inside == 1 {
            return Val::from_rat(coef);
        }
        let (lo, hi) = bigfloat::sqrt_interval(&Rat::from_integer(BigInt::from(inside)), 64)
            .to_f64_bounds();
        let root = Val::new(Expr::SqrtInt(inside), lo, hi);
        root.mul_rat(&coef)
    }

    pub fn f64_bounds(&self) -> (f64, f64) {
        (self.0.lo, self.0.hi)
    }

    pub fn sum(terms: Vec<Val>) -> Self {
        if terms.is_empty() {
            return Val::zero();
        }
        if terms.len() == 1 {
            return terms.into_iter().next().unwrap();
        }
        let mut lo = 0.0;
        let mut hi = 0.0;
        for t in &terms {
            lo += t.0.lo;
            hi += t.0.hi;
        }
        let (lo, hi) = widen(lo, hi);
        Val::new(Expr::Sum(terms), lo, hi)
    }

    pub fn add(&self, o: &Val) -> Self {
        Val::sum(vec![self.clone(), o.clone()])
    }

    pub fn neg(&self) -> Self {
        Val::new(Expr::Neg(self.clone()), -self.0.hi, -self.0.lo)
    }

    pub fn sub(&self, o: &Val) -> Self {
        self.add(&o.neg())
    }

    pub fn mul_rat(&self, q: &Rat) -> Self {
        if q.is_zero() {
            return Val::zero();
        }
        if q.is_one() {
            return self.clone();
        }
        let qf = q.to_f64().unwrap_or(0.0);
        let (lo, hi) = if qf >= 0.0 {
            widen(self.0.lo * qf, self.0.hi * qf)
        } else {
            widen(self.0.hi * qf, self.0.lo * qf)
        };
        Val::new(Expr::MulRat(q.clone(), self.clone()), lo, hi)
    }

    pub fn mul(&self, o: &Val) -> Self {
        let (lo, hi) = mul_bounds((self.0.lo, self.0.hi), (o.0.lo, o.0.hi));
        Val::new(Expr::Mul(self.clone(), o.clone()), lo, hi)
    }

    /// Reciprocal. The caller must know the value is nonzero (all uses are
    /// norms or `f`-values, which are positive).
    pub fn recip(&self) -> Self {
        let (lo, hi) = if self.0.lo > 0.0 || self.0.hi < 0.0 {
            widen(1.0 / self.0.hi, 1.0 / self.0.lo)
        } else {
            // Enclosure straddles zero but the value is nonzero; the exact
            // comparator will be used for any decision on this node.
            (f64::MIN, f64::MAX)
        };
        Val::new(Expr::Recip(self.clone()), lo, hi)
    }

    pub fn div(&self, o: &Val) -> Self {
        self.mul(&o.recip())
    }

    /// `x / f(m)`.
    pub fn div_f(&self, m: u64) -> Self {
        if let Some(a) = f_rational(m) {
            if a == 0 {
                panic!("f(0) division");
            }
            return self.mul_rat(&Rat::new(BigInt::one(), BigInt::from(a)));
        }
        self.mul(&Val::f(m).recip())
    }

    /// `x / sqrt(f(m))`.
    pub fn div_sqrt_f(&self, m: u64) -> Self {
        let s = Val::sqrt_f(m);
        if let Some(q) = s.as_rational() {
            return self.mul_rat(&q.recip());
        }
        self.mul(&s.recip())
    }

    pub fn normal_form(&self) -> &NormalForm {
        self.0.nf.get_or_init(|| Box::new(self.compute_nf()))
    }

    fn compute_nf(&self) -> NormalForm {
        let nf = match &self.0.expr {
            Expr::Rat(q) => NormalForm { num: Poly::constant(q.clone()), den: Poly::one() },
            Expr::FLog(m) => NormalForm { num: f_poly(*m), den: Poly::one() },
            Expr::SqrtF(m) => {
                NormalForm { num: Poly::atom(Atom::SqrtF(*m)), den: Poly::one() }
            }
            Expr::SqrtInt(n) => {
                NormalForm { num: Poly::atom(Atom::SqrtInt(*n)), den: Poly::one() }
            }
            Expr::Sum(ts) => {
                let mut acc = NormalForm { num: Poly::zero(), den: Poly::one() };
                for t in ts {
                    let tn = t.normal_form();
                    if acc.den == tn.den {
                        acc.num = acc.num.add(&tn.num);
                    } else {
                        acc = NormalForm {
                            num: acc.num.mul(&tn.den).add(&tn.num.mul(&acc.den)),
                            den: acc.den.mul(&tn.den),
                        };
                    }
                }
                acc
            }
            Expr::Neg(v) => {
                let n = v.normal_form();
                NormalForm { num: n.num.neg(), den: n.den.clone() }
            }
            Expr::MulRat(q, v) => {
                let n = v.normal_form();
                NormalForm { num: n.num.scale(q), den: n.den.clone() }
            }
            Expr::Mul(a, b) => {
                let (na, nb) = (a.normal_form(), b.normal_form());
                NormalForm { num: na.num.mul(&nb.num), den: na.den.mul(&nb.den) }
            }
            Expr::Recip(v) => {
                let n = v.normal_form();
                assert!(!n.num.is_zero(), "reciprocal of zero value");
                NormalForm { num: n.den.clone(), den: n.num.clone() }
            }
        };
        // Normalize: positive denominator, unit content on the denominator.
        let mut nf = nf;
        if nf.num.is_zero() {
            return NormalForm { num: Poly::zero(), den: Poly::one() };
        }
        if nf.den.sign() == Some(Ordering::Less) {
            nf.num = nf.num.neg();
            nf.den = nf.den.neg();
        }
        if let Some(c) = nf.den.as_constant() {
            nf.num = nf.num.scale(&c.recip());
            nf.den = Poly::one();
        } else {
            let lead = nf.den.0[0].1.clone();
            nf.num = nf.num.scale(&lead.recip());
            nf.den = nf.den.scale(&lead.recip());
        }
        nf
    }

    /// Exact rational view, when the value is rational. Detects the
    /// constant quotient case `num = c * den` as well, which arises when a
    /// symbol multiplies in and divides back out.
    pub fn as_rational(&self) -> Option<Rat> {
        if let Expr::Rat(q) = &self.0.expr {
            return Some(q.clone());
        }
        let nf = self.normal_form();
        if let (Some(n), Some(d)) = (nf.num.as_constant(), nf.den.as_constant()) {
            return Some(n / d);
        }
        // num == c * den?
        if nf.num.0.len() == nf.den.0.len() && !nf.den.0.is_empty() {
            let c = &nf.num.0[0].1 / &nf.den.0[0].1;
            if nf.num == nf.den.scale(&c) {
                return Some(c);
            }
        }
        None
    }

    pub fn is_zero(&self) -> bool {
        if self.0.lo > 0.0 || self.0.hi < 0.0 {
            return false;
        }
        self.normal_form().num.is_zero()
    }

    /// Total order on values (as reals).
    pub fn cmp_val(&self, o: &Val) -> Ordering {
        if Arc::ptr_eq(&self.0, &o.0) {
            return Ordering::Equal;
        }
        if self.0.hi < o.0.lo {
            return Ordering::Less;
        }
        if self.0.lo > o.0.hi {
            return Ordering::Greater;
        }
        let (a, b) = (self.normal_form(), o.normal_form());
        // den signs are normalized positive, so cross-multiplication keeps order.
        let diff = a.num.mul(&b.den).sub(&b.num.mul(&a.den));
        diff.sign().unwrap_or(Ordering::Equal)
    }

    pub fn max(&self, o: &Val) -> Val {
        if self.cmp_val(o) == Ordering::Less {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(&self, o: &Val) -> Val {
        if self.cmp_val(o) == Ordering::Greater {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn abs(&self) -> Val {
        if self.cmp_val(&Val::zero()) == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Certified rational enclosure at the given precision.
    pub fn enclosure(&self, prec: u32) -> Enclosure {
        let nf = self.normal_form();
        let num = nf.num.enclosure(prec);
        let den = nf.den.enclosure(prec);
        if den.contains_zero() {
            // Positive denominators only; refine.
            let den = nf.den.enclosure(prec * 2 + 64);
            return num.mul(&den.recip());
        }
        num.mul(&den.recip())
    }

    /// Deterministic decimal rendering (12 fractional digits of the midpoint
    /// of a 96-bit enclosure). For human-facing report fields.
    pub fn decimal(&self) -> String {
        format_decimal(&self.enclosure(96).mid(), 12)
    }

    /// Canonical exact rendering: `p/q` for rationals, otherwise a
    /// deterministic symbolic form.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for Val {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_val(other) == Ordering::Equal
    }
}

impl Eq for Val {}

impl PartialOrd for Val {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_val(other))
    }
}

impl Ord for Val {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_val(other)
    }
}

fn fmt_poly(p: &Poly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    for (i, (m, c)) in p.0.iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                write!(f, "-")?;
            }
        } else if neg {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        let a = c.abs();
        if m.is_one() {
            write!(f, "{}", format_rat(&a))?;
        } else {
            if !a.is_one() {
                write!(f, "{}*", format_rat(&a))?;
            }
            for (j, (atom, e)) in m.0.iter().enumerate() {
                if j > 0 {
                    write!(f, "*")?;
                }
                fmt_atom(atom, f)?;
                if *e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
    }
    Ok(())
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{}", format_rat(&q));
        }
        let nf = self.normal_form();
        let num_simple = nf.num.0.len() == 1;
        let den_one = nf.den.as_constant().map(|c| c.is_one()).unwrap_or(false);
        if den_one {
            return fmt_poly(&nf.num, f);
        }
        if num_simple {
            fmt_poly(&nf.num, f)?;
        } else {
            write!(f, "(")?;
            fmt_poly(&nf.num, f)?;
            write!(f, ")")?;
        }
        write!(f, "/")?;
        if nf.den.0.len() == 1 {
            fmt_poly(&nf.den, f)
        } else {
            write!(f, "(")?;
            fmt_poly(&nf.den, f)?;
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn rational_folding() {
        // f(3) = 2, f(15) = 4, f(2^36 - 1) = 36
        assert_eq!(Val::f(3).as_rational(), Some(rat_int(2)));
        assert_eq!(Val::f(15).as_rational(), Some(rat_int(4)));
        assert_eq!(Val::sqrt_f(15).as_rational(), Some(rat_int(2)));
        assert!(Val::f(2).as_rational().is_none());
        // sqrt(f(3)) = sqrt(2), irrational
        assert!(Val::sqrt_f(3).as_rational().is_none());
    }

    #[test]
    fn field_identities() {
        let f2 = Val::f(2); // log2(3)
        let f8 = Val::f(8); // log2(9) = 2 log2(3)
        assert_eq!(f2.mul_rat(&rat_int(2)), f8);
        // f(5) = 1 + log2(3)
        let f5 = Val::f(5);
        assert_eq!(f5.sub(&f2), Val::one());
        // sqrt reduces on squaring: sqrt(f(2))^2 = f(2)
        let s = Val::sqrt_f(2);
        assert_eq!(s.mul(&s), f2);
        let s2 = Val::sqrt_f(3); // sqrt(2)
        assert_eq!(s2.mul(&s2), Val::from_int(2));
        // division round trip
        let x = Val::from_int(7).div_f(2);
        assert_eq!(x.mul(&Val::f(2)), Val::from_int(7));
    }

    #[test]
    fn ordering_and_known_inequalities() {
        // 2/log2(3) vs 3/2: 1.2618... < 1.5
        let a = Val::from_int(2).div_f(2);
        let b = Val::from_rat(rat(3, 2));
        assert_eq!(a.cmp_val(&b), Ordering::Less);
        // submultiplicativity sample: f(4)*f(4) >= f(16)
        let lhs = Val::f(4).mul(&Val::f(4));
        assert_eq!(lhs.cmp_val(&Val::f(16)), Ordering::Greater);
        // a tie through different expression shapes
        let x = Val::f(5).sub(&Val::one()); // = log2(3)
        assert_eq!(x.cmp_val(&Val::f(2)), Ordering::Equal);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Val::from_rat(rat(3, 2)).to_string(), "3/2");
        assert_eq!(Val::from_int(2).div_f(2).to_string(), "2/log2(3)");
        assert_eq!(Val::f(5).to_string(), "1 + log2(3)");
        let s = Val::one().div_sqrt_f(3); // 1/sqrt(2) = sqrt(2)/2 after nf
        let d = s.decimal();
        assert!(d.starts_with("0.7071067811"), "{d}");
    }

    #[test]
    fn enclosures_are_sound() {
        let v = Val::from_int(3).div_f(2).add(&Val::sqrt_f(4)); // 3/log2(3) + sqrt(log2(5))
        let (lo, hi) = v.f64_bounds();
        let expected = 3.0 / 1.584962500721156 + 2.321928094887362f64.sqrt();
        assert!(lo <= expected && expected <= hi);
        let e = v.enclosure(128);
        assert!(e.width() < rat(1, i64::MAX));
    }

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
        assert_eq!(factorize(1), vec![]);
    }
}
