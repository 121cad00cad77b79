//! The layered norm with special functionals: dictionary generation and
//! bracketed evaluation.
//!
//! Faithful parameters are refused outright (`f(j_1) >= 36` alone forces
//! `j_1 >= 2^36 - 1`). In toy mode the evaluator returns certified
//! brackets:
//!
//! * The lower bound is the exact base-space dynamic program (the partition
//!   rules alone) improved by pairings against an enumerated set of special
//!   functionals — sound because every functional used lies in the norming
//!   set; possibly incomplete because the sigma-chained special functionals
//!   are enumerated from the registry, never exhaustively (the Q-restricted
//!   generation may under-generate, which the lower-bound contract absorbs).
//! * The upper bound runs the partition recursion with the special terms
//!   dominated by `f(k)^{-1/2}`-weighted splits into at most `k` pieces:
//!   for any special functional `g = f(k)^{-1/2}(g_1 + ... + g_k)` and any
//!   interval `E`, `|g(Ex)| <= f(k)^{-1/2} sum ||F_i x||` over at most `k`
//!   successive intervals. A `k`-term is dropped when no special of length
//!   `k` can see two pieces of the support: the first chain member lies in
//!   `A*_{j_{2k-1}}`, so it spans at least `j_{2k-1}` coordinates, and when
//!   `max supp(x) < j_{2k-1}` only that one member meets `x`, giving
//!   `|g(Ex)| <= f(k)^{-1/2} ||Ex||`, absorbed by bimonotonicity.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::constructions::SigmaRegistry;
use crate::rat::Rat;
use crate::value::Val;
use crate::vec::{FinVec, Interval};

use super::{EngineError, Functional, Mode, NormEval, NormResult, SchlumprechtEngine, SpaceParams};

/// Provenance of a dictionary element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Atom,
    MOp { m: u64 },
    Special { k: u64 },
    Projection,
}

#[derive(Debug, Clone)]
pub struct DictElem {
    pub functional: Functional,
    pub provenance: Provenance,
    /// Canonical coordinate rendering, the deduplication key.
    pub key: String,
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    pub elems: Vec<DictElem>,
    /// A closure pass added nothing new within the caps.
    pub stabilized: bool,
    pub depth: u32,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Best pairing against `x` over the dictionary: a sound lower bound on
    /// the norm.
    pub fn best_pairing(&self, x: &FinVec) -> Val {
        let mut best = Val::zero();
        for e in &self.elems {
            let p = e.functional.pair(x).abs();
            if p > best {
                best = p;
            }
        }
        best
    }
}

fn canonical_key(f: &Functional) -> String {
    let coords = f.coords();
    let mut out = String::new();
    for (i, v) in coords {
        out.push_str(&format!("{i}:{};", v.canonical()));
    }
    out
}

/// Generate extreme candidates of the norming set up to `depth` closure
/// passes, restricted to `support_bound` coordinates: atoms `±e_i`, then
/// closure under `(M,f)`-operations on successive members, special
/// functionals of lengths in `K` chained through the sigma registry over
/// Q-members, and interval projections. Deduplication is by canonical
/// coordinate form. `max_elems` caps growth; hitting a cap clears the
/// `stabilized` flag.
pub fn gm_dictionary(
    params: &SpaceParams,
    registry: &mut SigmaRegistry,
    depth: u32,
    max_elems: usize,
) -> Result<Dictionary, EngineError> {
    params.validate()?;
    if params.mode == Mode::Faithful {
        return Err(EngineError::FaithfulRefusal {
            operation: "dictionary generation",
            threshold: SpaceParams::faithful_threshold(),
        });
    }
    let s = params.support_bound;
    let mut elems: Vec<DictElem> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let push = |elems: &mut Vec<DictElem>,
                    seen: &mut BTreeSet<String>,
                    f: Functional,
                    prov: Provenance|
     -> bool {
        if elems.len() >= max_elems {
            return false;
        }
        let key = canonical_key(&f);
        if key.is_empty() || !seen.insert(key.clone()) {
            return true; // zero or duplicate: ignored, not a cap event
        }
        elems.push(DictElem { functional: f, provenance: prov, key });
        true
    };
    for i in 1..=s {
        for neg in [false, true] {
            push(&mut elems, &mut seen, Functional::unit(i, neg), Provenance::Atom);
        }
    }
    let mut stabilized = false;
    let mut capped = false;
    for _pass in 0..depth {
        let snapshot_len = elems.len();
        // (a) (M,f)-operations over successive tuples of existing members.
        let ranges: Vec<Interval> = elems.iter().map(|e| e.functional.range()).collect();
        let mut new_ops: Vec<Functional> = Vec::new();
        {
            // DFS over index tuples with strictly increasing ranges.
            let mut stack: Vec<(Vec<usize>, u32)> = (0..snapshot_len)
                .map(|i| (alloc::vec![i], range_hi(&ranges[i])))
                .collect();
            while let Some((tuple, hi)) = stack.pop() {
                if tuple.len() >= 2 {
                    let m = tuple.len() as u64;
                    let parts: Vec<Functional> =
                        tuple.iter().map(|&i| elems[i].functional.clone()).collect();
                    new_ops.push(Functional::MForm { m, parts });
                }
                if (tuple.len() as u32) < s {
                    for j in 0..snapshot_len {
                        if range_lo(&ranges[j]) > hi {
                            let mut t = tuple.clone();
                            t.push(j);
                            stack.push((t, range_hi(&ranges[j])));
                        }
                    }
                }
                if new_ops.len() + elems.len() > 4 * max_elems {
                    capped = true;
                    break;
                }
            }
        }
        for f in new_ops {
            if !push(&mut elems, &mut seen, f, Provenance::MOp { m: 0 }) {
                capped = true;
                break;
            }
        }
        // fix provenance arity (the m is the part count)
        for e in elems.iter_mut() {
            if let (Provenance::MOp { m }, Functional::MForm { m: fm, .. }) =
                (&mut e.provenance, &e.functional)
            {
                *m = *fm;
            }
        }
        // (b) special functionals over Q-members of the dictionary.
        let specials = enumerate_dictionary_specials(params, registry, &elems, max_elems)?;
        for (k, f) in specials {
            if !push(&mut elems, &mut seen, f, Provenance::Special { k }) {
                capped = true;
                break;
            }
        }
        // (c) interval projections onto support sub-intervals.
        let snapshot: Vec<Functional> =
            elems.iter().map(|e| e.functional.clone()).collect();
        'proj: for f in &snapshot {
            let Interval::Range { lo, hi } = f.range() else { continue };
            for a in lo..=hi {
                for b in a..=hi {
                    if a == lo && b == hi {
                        continue;
                    }
                    let p = Functional::Restrict(Interval::new(a, b), Box::new(f.clone()));
                    if !push(&mut elems, &mut seen, p, Provenance::Projection) {
                        capped = true;
                        break 'proj;
                    }
                }
            }
        }
        if elems.len() == snapshot_len && !capped {
            stabilized = true;
            break;
        }
    }
    if capped {
        stabilized = false;
    }
    Ok(Dictionary { elems, stabilized, depth })
}

fn range_lo(i: &Interval) -> u32 {
    match i {
        Interval::Empty => u32::MAX,
        Interval::Range { lo, .. } => *lo,
    }
}

fn range_hi(i: &Interval) -> u32 {
    match i {
        Interval::Empty => 0,
        Interval::Range { hi, .. } => *hi,
    }
}

/// Chains of Q-members of the dictionary through the sigma registry:
/// `g_1` an `(j_{2k-1},f)`-operation in Q, `g_{i+1}` an
/// `(sigma(g_1..g_i),f)`-operation in Q placed after `g_i`.
fn enumerate_dictionary_specials(
    params: &SpaceParams,
    registry: &mut SigmaRegistry,
    elems: &[DictElem],
    cap: usize,
) -> Result<Vec<(u64, Functional)>, EngineError> {
    // Q-members that are (m,f)-operations, grouped by m.
    let mut by_m: BTreeMap<u64, Vec<(FinVec, Functional)>> = BTreeMap::new();
    let d_max = params.d_max_int();
    for e in elems {
        if let Functional::MForm { m, .. } = &e.functional {
            if let Some(v) = e.functional.as_rational_vec() {
                if v.in_q(&d_max) {
                    by_m.entry(*m).or_default().push((v, e.functional.clone()));
                }
            }
        }
    }
    let mut out = Vec::new();
    for k in params.k_set() {
        if k < 1 {
            continue;
        }
        let Ok(root_m) = params.special_root_length(k) else { continue };
        // DFS over chains of length k.
        let mut stack: Vec<(Vec<(FinVec, Functional)>, u64)> = Vec::new();
        if let Some(roots) = by_m.get(&root_m) {
            for r in roots {
                stack.push((alloc::vec![r.clone()], root_m));
            }
        }
        while let Some((chain, _m)) = stack.pop() {
            if out.len() >= cap {
                return Ok(out);
            }
            if chain.len() as u64 == k {
                let parts: Vec<Functional> =
                    chain.iter().map(|(v, _)| Functional::Rational(v.clone())).collect();
                out.push((k, Functional::Special { k, parts, chain_checked: true }));
                continue;
            }
            let prefix: Vec<FinVec> = chain.iter().map(|(v, _)| v.clone()).collect();
            let next_m = match registry.assign(&prefix, params) {
                Ok(m) => m,
                // L exhausted: sigma is undefined on further prefixes, so
                // no further chains exist in this toy space.
                Err(crate::constructions::SigmaError::Exhausted { .. }) => break,
                Err(e) => return Err(EngineError::from(e)),
            };
            let last_hi = range_hi(&chain.last().unwrap().1.range());
            if let Some(cands) = by_m.get(&next_m) {
                for c in cands {
                    if range_lo(&c.1.range()) > last_hi {
                        let mut chain2 = chain.clone();
                        chain2.push(c.clone());
                        stack.push((chain2, next_m));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Toy evaluator for the layered norm: exact-partition lower bound plus
/// enumerated special pairings; upper bound by the dominated recursion.
pub struct GmEngine {
    pub params: SpaceParams,
    base: SchlumprechtEngine,
    specials: Vec<Functional>,
}

impl GmEngine {
    pub fn toy(params: SpaceParams, specials: Vec<Functional>) -> Result<Self, EngineError> {
        params.validate()?;
        if params.mode == Mode::Faithful {
            return Err(EngineError::FaithfulRefusal {
                operation: "layered norm evaluation",
                threshold: SpaceParams::faithful_threshold(),
            });
        }
        for s in &specials {
            match s {
                Functional::Special { chain_checked: true, .. } => {}
                _ => {
                    return Err(EngineError::InvalidParams(
                        "attached specials must be chain-checked special functionals".into(),
                    ))
                }
            }
        }
        Ok(GmEngine { params, base: SchlumprechtEngine::new(), specials })
    }

    /// Attach further enumerated special functionals (norming-set members).
    pub fn push_special(&mut self, s: Functional) -> Result<(), EngineError> {
        match s {
            Functional::Special { chain_checked: true, .. } => {
                self.specials.push(s);
                Ok(())
            }
            _ => Err(EngineError::InvalidParams("not a chain-checked special".into())),
        }
    }

    pub fn specials(&self) -> &[Functional] {
        &self.specials
    }

    fn special_lower(&self, x: &FinVec) -> Val {
        let mut best = Val::zero();
        let support = x.support();
        for g in &self.specials {
            // |g(Ex)| over the full range and sub-intervals cut at support
            // points (coarser E sets are sound, this is a lower bound).
            let full = g.pair(x).abs();
            if full > best {
                best = full;
            }
            if support.len() <= 16 {
                for (ai, a) in support.iter().enumerate() {
                    for b in support.iter().skip(ai) {
                        let e = Interval::new(*a, *b);
                        let p = g.pair(&x.project(&e)).abs();
                        if p > best {
                            best = p;
                        }
                    }
                }
            }
        }
        best
    }

    fn upper(&self, x: &FinVec) -> Val {
        let entries: Vec<(u32, Rat)> = x.iter().map(|(i, c)| (*i, c.clone())).collect();
        let mut memo: BTreeMap<Vec<(u32, Rat)>, Val> = BTreeMap::new();
        let u = self.upper_rec(&entries, &mut memo);
        Val::min(&u, &Val::from_rat(x.l1()))
    }

    fn upper_rec(
        &self,
        entries: &[(u32, Rat)],
        memo: &mut BTreeMap<Vec<(u32, Rat)>, Val>,
    ) -> Val {
        let key: Vec<(u32, Rat)> = entries.to_vec();
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let n = entries.len();
        let mut best = Val::from_rat(
            entries.iter().map(|(_, c)| c.abs()).max().expect("nonempty"),
        );
        if n >= 2 {
            // split sums: table best_sum[p][t] over exact p-piece splits
            let max_index = entries.last().expect("nonempty").0;
            let mut split_best: Vec<Vec<Option<Val>>> =
                alloc::vec![alloc::vec![None; n + 1]; n + 1];
            for t in 1..n {
                split_best[1][t] = Some(self.upper_rec(&entries[0..t], memo));
            }
            for p in 2..=n {
                for t in p..=n {
                    let mut row_best: Option<Val> = None;
                    for cut in (p - 1)..t {
                        let Some(left) = &split_best[p - 1][cut] else { continue };
                        let piece = self.upper_rec(&entries[cut..t], memo);
                        let cand = left.add(&piece);
                        row_best = Some(match row_best {
                            None => cand,
                            Some(b) => Val::max(&b, &cand),
                        });
                    }
                    split_best[p][t] = row_best;
                }
            }
            for p in 2..=n {
                if let Some(sum) = &split_best[p][n] {
                    let cand = sum.div_f(p as u64);
                    best = Val::max(&best, &cand);
                }
            }
            // special terms: f(k)^{-1/2} times the best split into at most
            // min(k, n) pieces, gated by reachability of length-k specials.
            for k in self.params.k_set() {
                if k < 2 {
                    continue;
                }
                let Ok(root) = self.params.special_root_length(k) else { continue };
                if (max_index as u64) < root {
                    continue;
                }
                let pieces = (k as usize).min(n);
                if pieces < 2 {
                    continue;
                }
                if let Some(sum) = &split_best[pieces][n] {
                    let cand = sum.div_sqrt_f(k);
                    best = Val::max(&best, &cand);
                }
            }
        }
        memo.insert(key, best.clone());
        best
    }
}

impl NormEval for GmEngine {
    fn norm(&self, x: &FinVec) -> Result<NormResult, EngineError> {
        if x.is_zero() {
            return Ok(NormResult::exact(Val::zero(), None));
        }
        let base = self.base.eval(x);
        let special = self.special_lower(x);
        let (lower, witness) = if special > base.lower {
            (special, None)
        } else {
            (base.lower, base.witness)
        };
        let upper = Val::max(&self.upper(x), &lower);
        Ok(NormResult::bracket(lower, upper, witness))
    }

    fn name(&self) -> &'static str {
        "gm"
    }

    fn has_lower_f_estimate(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::SigmaCodomain;
    use crate::rat::rat_int;

    fn sparse_params() -> SpaceParams {
        // K = {2^63}: specials unreachable at toy supports
        SpaceParams::toy(alloc::vec![4, 1 << 63], 1 << 20, 2, 4)
    }

    fn dense_params() -> SpaceParams {
        SpaceParams::toy(alloc::vec![1, 2, 3, 7, 15], 64, 2, 4)
    }

    #[test]
    fn faithful_refusal() {
        let err = match GmEngine::toy(SpaceParams::faithful(), alloc::vec![]) {
            Err(e) => e,
            Ok(_) => panic!("faithful mode must refuse"),
        };
        match err {
            EngineError::FaithfulRefusal { threshold, .. } => {
                assert!(threshold.contains("2^36 - 1"), "{threshold}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn units_are_exact() {
        let eng = GmEngine::toy(sparse_params(), alloc::vec![]).unwrap();
        let r = eng.norm(&FinVec::unit(3)).unwrap();
        assert!(r.exact);
        assert_eq!(r.lower, Val::one());
    }

    #[test]
    fn unreachable_specials_reduce_to_base_norm() {
        // max support index below j_{2k-1} = 2^63: values equal the base
        // dynamic program exactly.
        let eng = GmEngine::toy(sparse_params(), alloc::vec![]).unwrap();
        let base = SchlumprechtEngine::new();
        for s in ["1:1,2:1", "1:1,2:1,3:1", "1:1,2:-1/2,4:2,6:1"] {
            let x = FinVec::parse(s).unwrap();
            let r = eng.norm(&x).unwrap();
            let b = base.eval(&x);
            assert!(r.exact, "{s}: bracket [{}, {}]", r.lower.canonical(), r.upper.canonical());
            assert_eq!(r.lower, b.lower, "{s}");
        }
    }

    #[test]
    fn dense_k_widens_bracket_but_stays_sound() {
        let eng = GmEngine::toy(dense_params(), alloc::vec![]).unwrap();
        let base = SchlumprechtEngine::new();
        let x = FinVec::parse("1:1,2:1,3:1,4:1").unwrap();
        let r = eng.norm(&x).unwrap();
        let b = base.eval(&x);
        assert!(r.lower >= b.lower);
        assert!(r.upper >= r.lower);
        // the sup and l1 bounds hold
        assert!(r.lower >= Val::one());
        assert!(r.upper <= Val::from_rat(x.l1()));
    }

    #[test]
    fn dictionary_depth0_and_growth() {
        let params = SpaceParams::toy(alloc::vec![1, 2, 3], 64, 2, 2);
        let mut reg = SigmaRegistry::new(SigmaCodomain::List(params.l_list()));
        let d0 = gm_dictionary(&params, &mut reg, 0, 1000).unwrap();
        assert_eq!(d0.len(), 4); // ±e1, ±e2
        let mut reg = SigmaRegistry::new(SigmaCodomain::List(params.l_list()));
        let d1 = gm_dictionary(&params, &mut reg, 1, 1000).unwrap();
        assert!(d1.len() > d0.len());
        // rule (a) with M = 2 appears
        let target = Functional::MForm {
            m: 2,
            parts: alloc::vec![Functional::unit(1, false), Functional::unit(2, false)],
        };
        let key = super::canonical_key(&target);
        assert!(d1.elems.iter().any(|e| e.key == key));
        // monotone growth with depth
        let mut reg = SigmaRegistry::new(SigmaCodomain::List(params.l_list()));
        let d2 = gm_dictionary(&params, &mut reg, 2, 4000).unwrap();
        assert!(d2.len() >= d1.len());
    }

    #[test]
    fn dictionary_pairing_is_sound_lower_bound() {
        let params = SpaceParams::toy(alloc::vec![1, 2, 3], 16, 2, 3);
        let mut reg = SigmaRegistry::new(SigmaCodomain::List(params.l_list()));
        let dict = gm_dictionary(&params, &mut reg, 2, 3000).unwrap();
        let eng = GmEngine::toy(params, alloc::vec![]).unwrap();
        let x = FinVec::parse("1:1,2:1,3:1").unwrap();
        let lower = dict.best_pairing(&x);
        let r = eng.norm(&x).unwrap();
        assert!(lower <= r.upper, "dictionary pairing exceeds upper bracket");
        // the partition dynamic program subsumes (a)+(c) closure pairings
        assert!(lower <= r.lower);
    }

    #[test]
    fn gm_brackets_are_monotone_in_attached_specials() {
        let params = dense_params();
        let mut eng = GmEngine::toy(params.clone(), alloc::vec![]).unwrap();
        let x = FinVec::parse("1:1/2,2:1/2,3:1/2,4:1/2").unwrap();
        let before = eng.norm(&x).unwrap();
        // a legitimate chain-checked special of length k = 2 over Q-members
        let mut reg = SigmaRegistry::new(SigmaCodomain::List(params.l_list()));
        let mut src = crate::constructions::CoordinateAStar;
        let seq =
            crate::constructions::special_sequence_build(&params, &mut reg, 2, &mut src).unwrap();
        eng.push_special(crate::constructions::special_functional(&seq)).unwrap();
        let after = eng.norm(&x).unwrap();
        assert!(after.lower >= before.lower);
        assert!(after.lower <= after.upper);
        let _ = rat_int(0);
    }
}
