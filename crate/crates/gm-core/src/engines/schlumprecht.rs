//! Exact dynamic program for the implicitly defined norm
//! `||x|| = ||x||_inf  v  sup f(N)^{-1} sum ||E_i x||`.
//!
//! The recursion is well founded: a partition improves on the sup norm only
//! if it has at least two pieces meeting the support, and every such piece
//! has strictly smaller support. Partitions with support-free pieces are
//! dominated (dropping them shrinks `f(N)` without changing the sum), so
//! the program enumerates splits of the support positions into `p >= 2`
//! nonempty runs and scales by `f(p)`.
//!
//! Memoization is keyed on the shift-normalized content of a sub-vector
//! (offsets from its first support point, with coefficients): the recursion
//! only sees relative structure, so translates share entries. Constant
//! modulus vectors take a closed form, `|| c * sum of n units || =
//! |c| n / f(n)`: by the lower f-estimate the n-fold split attains it, and
//! Jensen's inequality on the concave `s/f(s)` (condition (iv)) shows no
//! coarser split beats it; the closed form is cross-checked against the
//! full program in tests.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::rat::Rat;
use crate::value::Val;
use crate::vec::FinVec;

use super::{EngineError, Functional, NormEval, NormResult};

/// Exact evaluator for the implicitly defined norm of the base space.
#[derive(Debug, Clone)]
pub struct SchlumprechtEngine {
    /// Use the constant-modulus closed form. On by default; the slow path
    /// exists so tests can cross-check the closed form.
    pub flat_fast_path: bool,
}

impl Default for SchlumprechtEngine {
    fn default() -> Self {
        SchlumprechtEngine { flat_fast_path: true }
    }
}

impl SchlumprechtEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn without_fast_path() -> Self {
        SchlumprechtEngine { flat_fast_path: false }
    }

    /// Exact norm with a norming-functional witness.
    pub fn eval(&self, x: &FinVec) -> NormResult {
        if x.is_zero() {
            return NormResult::exact(Val::zero(), None);
        }
        let entries: Vec<(u32, Rat)> = x.iter().map(|(i, c)| (*i, c.clone())).collect();
        let mut memo = Memo::default();
        let node = dp(&entries, self.flat_fast_path, &mut memo);
        NormResult::exact(node.value.clone(), Some(node.witness.clone()))
    }
}

impl NormEval for SchlumprechtEngine {
    fn norm(&self, x: &FinVec) -> Result<NormResult, EngineError> {
        Ok(self.eval(x))
    }

    fn name(&self) -> &'static str {
        "schlumprecht"
    }

    fn has_lower_f_estimate(&self) -> bool {
        true
    }
}

struct Eval {
    value: Val,
    witness: Functional,
    /// First support index of the translate the witness was built at.
    anchor: u32,
}

type Memo = BTreeMap<Vec<(u32, Rat)>, Rc<Eval>>;

fn shifted(entries: &[(u32, Rat)]) -> Vec<(u32, Rat)> {
    let first = entries[0].0;
    entries.iter().map(|(i, c)| (i - first, c.clone())).collect()
}

fn unit_witness(idx: u32, c: &Rat) -> Functional {
    Functional::unit(idx, c.is_negative())
}

fn dp(entries: &[(u32, Rat)], fast: bool, memo: &mut Memo) -> Rc<Eval> {
    debug_assert!(!entries.is_empty());
    let key = shifted(entries);
    if let Some(hit) = memo.get(&key) {
        // Memo entries are translation-shared; re-anchor the stored witness
        // to this translate when they differ.
        let delta = entries[0].0 as i64 - hit.anchor as i64;
        if delta == 0 {
            return hit.clone();
        }
        return Rc::new(Eval {
            value: hit.value.clone(),
            witness: shift_functional(&hit.witness, delta),
            anchor: entries[0].0,
        });
    }
    let n = entries.len();
    let anchor = entries[0].0;
    let result = if n == 1 {
        let (idx, c) = &entries[0];
        Eval { value: Val::from_rat(c.abs()), witness: unit_witness(*idx, c), anchor }
    } else if fast && constant_modulus(entries) {
        flat_closed_form(entries)
    } else {
        general_dp(entries, fast, memo)
    };
    let rc = Rc::new(result);
    memo.insert(key, rc.clone());
    rc
}

fn shift_functional(f: &Functional, delta: i64) -> Functional {
    let sh = |i: u32| -> u32 { (i as i64 + delta) as u32 };
    match f {
        Functional::Unit { index, negative } => {
            Functional::Unit { index: sh(*index), negative: *negative }
        }
        Functional::Rational(v) => Functional::Rational(FinVec::from_entries(
            v.iter().map(|(i, c)| (sh(*i), c.clone())),
        )),
        Functional::Sum(parts) => {
            Functional::Sum(parts.iter().map(|p| shift_functional(p, delta)).collect())
        }
        Functional::ScaleRat(q, inner) => {
            Functional::ScaleRat(q.clone(), alloc::boxed::Box::new(shift_functional(inner, delta)))
        }
        Functional::ScaleVal(v, inner) => {
            Functional::ScaleVal(v.clone(), alloc::boxed::Box::new(shift_functional(inner, delta)))
        }
        Functional::MForm { m, parts } => Functional::MForm {
            m: *m,
            parts: parts.iter().map(|p| shift_functional(p, delta)).collect(),
        },
        Functional::Special { k, parts, chain_checked } => Functional::Special {
            k: *k,
            parts: parts.iter().map(|p| shift_functional(p, delta)).collect(),
            chain_checked: *chain_checked,
        },
        Functional::Restrict(e, inner) => {
            let e = match e {
                crate::vec::Interval::Empty => crate::vec::Interval::Empty,
                crate::vec::Interval::Range { lo, hi } => {
                    crate::vec::Interval::Range { lo: sh(*lo), hi: sh(*hi) }
                }
            };
            Functional::Restrict(e, alloc::boxed::Box::new(shift_functional(inner, delta)))
        }
    }
}

fn constant_modulus(entries: &[(u32, Rat)]) -> bool {
    let c0 = entries[0].1.abs();
    entries.iter().all(|(_, c)| c.abs() == c0)
}

fn flat_closed_form(entries: &[(u32, Rat)]) -> Eval {
    let n = entries.len() as u64;
    let c = entries[0].1.abs();
    let value = Val::from_rat(&c * Rat::from_integer(num_bigint::BigInt::from(n))).div_f(n);
    let parts: Vec<Functional> =
        entries.iter().map(|(i, c)| unit_witness(*i, c)).collect();
    Eval { value, witness: Functional::mform(n, parts), anchor: entries[0].0 }
}

fn general_dp(entries: &[(u32, Rat)], fast: bool, memo: &mut Memo) -> Eval {
    let n = entries.len();
    // Sub-values for every contiguous run [a..=b].
    let sub = |a: usize, b: usize, memo: &mut Memo| -> Rc<Eval> {
        dp(&entries[a..=b], fast, memo)
    };
    // Champion: sup-norm leaf.
    let mut best_val;
    let mut best_wit;
    {
        let (mut bi, mut bc) = (0usize, entries[0].1.abs());
        for (i, (_, c)) in entries.iter().enumerate().skip(1) {
            if c.abs() > bc {
                bc = c.abs();
                bi = i;
            }
        }
        best_val = Val::from_rat(bc);
        best_wit = unit_witness(entries[bi].0, &entries[bi].1);
    }
    // best[p][t]: best sum of piece values splitting the first t entries
    // into exactly p nonempty runs, with a back pointer for the witness.
    // Row p=1 holds proper prefixes only: the full slice never appears as
    // a single piece of its own partition.
    let mut prev: Vec<Option<(Val, Vec<usize>)>> = (0..=n)
        .map(|t| {
            if t == 0 || t == n {
                None
            } else {
                Some((sub(0, t - 1, memo).value.clone(), alloc::vec![t]))
            }
        })
        .collect();
    for p in 2..=n {
        let mut cur: Vec<Option<(Val, Vec<usize>)>> = alloc::vec![None; n + 1];
        for t in p..=n {
            let mut best: Option<(Val, Vec<usize>)> = None;
            for cut in (p - 1)..t {
                let Some((left_val, left_cuts)) = &prev[cut] else { continue };
                let piece = sub(cut, t - 1, memo);
                let cand = left_val.add(&piece.value);
                let better = match &best {
                    None => true,
                    Some((b, _)) => cand > *b,
                };
                if better {
                    let mut cuts = left_cuts.clone();
                    cuts.push(t);
                    best = Some((cand, cuts));
                }
            }
            cur[t] = best;
        }
        // Candidate: f(p)^{-1} * best p-split of the whole vector.
        if let Some((sum, cuts)) = &cur[n] {
            let cand = sum.div_f(p as u64);
            if cand > best_val {
                let mut parts = Vec::with_capacity(p);
                let mut start = 0usize;
                for &cut in cuts {
                    parts.push(sub(start, cut - 1, memo).witness.clone());
                    start = cut;
                }
                best_val = cand;
                best_wit = Functional::mform(p as u64, parts);
            }
        }
        prev = cur;
    }
    Eval { value: best_val, witness: best_wit, anchor: entries[0].0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use num_bigint::BigInt;
    use num_traits::One;

    fn e(i: u32) -> FinVec {
        FinVec::unit(i)
    }

    fn norm(x: &FinVec) -> NormResult {
        SchlumprechtEngine::new().eval(x)
    }

    #[test]
    fn unit_vectors_have_norm_one() {
        for i in [1u32, 5, 100] {
            let r = norm(&e(i));
            assert_eq!(r.lower, Val::one());
            assert!(r.exact);
        }
    }

    #[test]
    fn two_and_three_units() {
        // ||e1 + e2|| = 2/log2(3)
        let r = norm(&e(1).add(&e(2)));
        assert_eq!(r.lower, Val::from_int(2).div_f(2));
        // ||e1 + e2 + e3|| = 3/2 exactly (f(3) = 2)
        let r = norm(&e(1).add(&e(2)).add(&e(3)));
        assert_eq!(r.lower, Val::from_rat(rat(3, 2)));
        assert_eq!(r.lower.canonical(), "3/2");
    }

    #[test]
    fn witness_pairs_to_value() {
        let x = FinVec::parse("1:1,2:-1/2,4:2,7:1").unwrap();
        let r = norm(&x);
        let w = r.witness.expect("witness");
        assert_eq!(w.pair(&x), r.lower);
        assert!(w.dual_norm_upper() <= Val::one());
    }

    #[test]
    fn fast_path_matches_slow_path() {
        let slow = SchlumprechtEngine::without_fast_path();
        let fast = SchlumprechtEngine::new();
        for n in 1..=14u32 {
            for c in [rat_int(1), rat(1, 2), rat_int(3)] {
                let x = FinVec::from_entries((1..=n).map(|i| {
                    let sign = if i % 3 == 0 { -c.clone() } else { c.clone() };
                    (i, sign)
                }));
                let a = fast.eval(&x);
                let b = slow.eval(&x);
                assert_eq!(a.lower, b.lower, "mismatch at n={n} c={c}");
            }
        }
    }

    #[test]
    fn flat_closed_form_value() {
        // || sum_{i<=32} e_i || = 32 / f(32) and the n-split witness attains it
        let x = FinVec::from_entries((1..=32).map(|i| (i, rat_int(1))));
        let r = norm(&x);
        assert_eq!(r.lower, Val::from_int(32).div_f(32));
        assert_eq!(r.witness.unwrap().pair(&x), r.lower);
    }

    #[test]
    fn gaps_do_not_change_flat_values() {
        let dense = FinVec::from_entries((1..=6).map(|i| (i, rat_int(1))));
        let gapped = FinVec::from_entries((1..=6).map(|i| (i * 7, rat_int(1))));
        assert_eq!(norm(&dense).lower, norm(&gapped).lower);
    }

    #[test]
    fn sign_flips_do_not_change_values() {
        let x = FinVec::parse("1:1,2:1/2,3:2,5:1").unwrap();
        let base = norm(&x).lower;
        for bits in 0..16u32 {
            let flipped = FinVec::from_entries(x.iter().enumerate().map(|(k, (i, c))| {
                let s = if (bits >> k) & 1 == 1 { -Rat::one() } else { Rat::one() };
                (*i, c * s)
            }));
            assert_eq!(norm(&flipped).lower, base, "pattern {bits}");
        }
    }

    #[test]
    fn lower_f_estimate_holds_for_random_splits() {
        let x = FinVec::parse("1:1,2:-1,3:1/2,4:2,6:1").unwrap();
        let eng = SchlumprechtEngine::new();
        use crate::vec::Interval;
        let parts = [Interval::new(1, 2), Interval::new(3, 4), Interval::new(5, 6)];
        let (ok, slack) = super::super::lower_f_estimate_check(&eng, &x, &parts).unwrap();
        assert!(ok, "slack {slack:?}");
    }

    #[test]
    fn bimonotone_projections() {
        let x = FinVec::parse("1:1,2:1,3:1,4:1,5:1").unwrap();
        let full = norm(&x).lower;
        for lo in 1..=5u32 {
            for hi in lo..=5u32 {
                let piece = x.project(&crate::vec::Interval::new(lo, hi));
                if piece.is_zero() {
                    continue;
                }
                assert!(norm(&piece).lower <= full);
            }
        }
    }

    #[test]
    fn homogeneity_is_exact() {
        let x = FinVec::parse("1:1,3:-2,4:1/2").unwrap();
        let r1 = norm(&x).lower;
        let r2 = norm(&x.scale(&rat(7, 3))).lower;
        assert_eq!(r2, r1.mul_rat(&rat(7, 3)));
        let big = Rat::new(BigInt::from(12345678901234i64), BigInt::from(99991));
        assert_eq!(norm(&x.scale(&big)).lower, r1.mul_rat(&big));
    }
}
