//! Brute-force enumeration oracles, kept deliberately independent of the
//! engine implementations they check.
//!
//! [`oracle_norm`] maximizes over *all* interval-partition trees by direct
//! recursive enumeration of compositions, memoized on slice positions (not
//! content: no translation sharing, no constant-modulus closed form, no
//! split table). [`oracle_norm_treewalk`] is the same quantity computed with
//! no memoization at all, feasible only for tiny supports; it exists to
//! check the oracle itself.

use std::collections::HashMap;

use gm_core::rat::Rat;
use gm_core::value::Val;
use gm_core::vec::FinVec;
use num_traits::Signed;

/// Exact norm by exhaustive enumeration of interval-partition trees.
pub fn oracle_norm(x: &FinVec) -> Val {
    if x.is_zero() {
        return Val::zero();
    }
    let entries: Vec<(u32, Rat)> = x.iter().map(|(i, c)| (*i, c.clone())).collect();
    let n = entries.len();
    let mut memo: HashMap<(usize, usize), Val> = HashMap::new();
    eval_range(&entries, 0, n - 1, &mut memo)
}

fn eval_range(
    entries: &[(u32, Rat)],
    a: usize,
    b: usize,
    memo: &mut HashMap<(usize, usize), Val>,
) -> Val {
    if let Some(v) = memo.get(&(a, b)) {
        return v.clone();
    }
    let mut best = entries[a..=b]
        .iter()
        .map(|(_, c)| c.abs())
        .max()
        .map(Val::from_rat)
        .expect("nonempty range");
    let mut pieces: Vec<Val> = Vec::new();
    enumerate_compositions(entries, a, b, &mut pieces, &mut best, memo);
    memo.insert((a, b), best.clone());
    best
}

fn enumerate_compositions(
    entries: &[(u32, Rat)],
    cursor: usize,
    end: usize,
    pieces: &mut Vec<Val>,
    best: &mut Val,
    memo: &mut HashMap<(usize, usize), Val>,
) {
    for cut in cursor..=end {
        if pieces.is_empty() && cut == end {
            // single piece covering the whole range: not a partition
            continue;
        }
        let piece = eval_range(entries, cursor, cut, memo);
        pieces.push(piece);
        if cut == end {
            let p = pieces.len() as u64;
            if p >= 2 {
                let cand = Val::sum(pieces.clone()).div_f(p);
                if cand > *best {
                    *best = cand;
                }
            }
        } else {
            enumerate_compositions(entries, cut + 1, end, pieces, best, memo);
        }
        pieces.pop();
    }
}

/// The same maximum with no sharing at all: a literal walk over every
/// partition tree. Exponential; use only for supports up to about 5.
pub fn oracle_norm_treewalk(x: &FinVec) -> Val {
    if x.is_zero() {
        return Val::zero();
    }
    let entries: Vec<(u32, Rat)> = x.iter().map(|(i, c)| (*i, c.clone())).collect();
    let n = entries.len();
    tree_eval(&entries, 0, n - 1)
}

fn tree_eval(entries: &[(u32, Rat)], a: usize, b: usize) -> Val {
    let mut best = entries[a..=b]
        .iter()
        .map(|(_, c)| c.abs())
        .max()
        .map(Val::from_rat)
        .expect("nonempty");
    fn rec(
        entries: &[(u32, Rat)],
        cursor: usize,
        end: usize,
        pieces: &mut Vec<Val>,
        best: &mut Val,
    ) {
        for cut in cursor..=end {
            if pieces.is_empty() && cut == end {
                continue;
            }
            let piece = tree_eval(entries, cursor, cut);
            pieces.push(piece);
            if cut == end {
                let p = pieces.len() as u64;
                if p >= 2 {
                    let cand = Val::sum(pieces.clone()).div_f(p);
                    if cand > *best {
                        *best = cand;
                    }
                }
            } else {
                rec(entries, cut + 1, end, pieces, best);
            }
            pieces.pop();
        }
    }
    let mut pieces = Vec::new();
    rec(entries, a, b, &mut pieces, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use gm_core::rat::{rat, rat_int};

    #[test]
    fn oracle_small_values() {
        let e = |i: u32| FinVec::unit(i);
        assert_eq!(oracle_norm(&e(1)), Val::one());
        assert_eq!(oracle_norm(&e(1).add(&e(2))), Val::from_int(2).div_f(2));
        assert_eq!(oracle_norm(&e(1).add(&e(2)).add(&e(3))), Val::from_rat(rat(3, 2)));
    }

    #[test]
    fn memoized_oracle_matches_treewalk() {
        let vecs = [
            "1:1,2:1,3:1,4:1",
            "1:1,3:-1/2,4:2,7:1,8:1",
            "2:1/2,3:1/2,5:-2",
            "1:2,2:-2,3:1",
        ];
        for s in vecs {
            let x = FinVec::parse(s).unwrap();
            assert_eq!(oracle_norm(&x), oracle_norm_treewalk(&x), "{s}");
        }
    }

    #[test]
    fn oracle_flat_matches_closed_form() {
        for n in 1..=9u32 {
            let x = FinVec::from_entries((1..=n).map(|i| (i, rat_int(1))));
            assert_eq!(oracle_norm(&x), Val::from_int(n as i64).div_f(n as u64));
        }
    }
}
