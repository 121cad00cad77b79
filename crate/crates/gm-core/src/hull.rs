//! Submultiplicative hulls, concave envelopes and the derived function
//! chain `phi -> h -> H -> G -> g`.
//!
//! Hulls and envelopes are computed on a geometric sample grid with an
//! integer ratio (so abscissas are exact rationals and the grid is
//! multiplicatively closed, which is what the factorization dynamic program
//! needs). The hull DP runs in the log2 domain: on the grid `base^i` a
//! factorization `x_1 ... x_k >= x` is a choice of exponents summing to at
//! least `i`, and minimal witnesses never need an exponent sum beyond
//! `2 * max_exp` (dropping a factor from any longer witness keeps the
//! constraint while never increasing the cost).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::bigfloat;
use crate::funclass::{FunclassError, FunctionSpec, Num, DEFAULT_PREC};
use crate::rat::Rat;

/// Geometric sample grid `base^0 .. base^max_exp`, `base >= 2` integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub base: u64,
    pub max_exp: u32,
}

impl Grid {
    pub fn new(base: u64, max_exp: u32) -> Self {
        assert!(base >= 2, "grid ratio must be an integer >= 2");
        assert!(max_exp >= 2, "grid needs at least three points");
        Grid { base, max_exp }
    }

    /// Default grid: ratio 2 covering `[1, 2^64]`.
    pub fn default_grid() -> Self {
        Grid::new(2, 64)
    }

    pub fn len(&self) -> usize {
        self.max_exp as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> Rat {
        let mut v = BigInt::one();
        for _ in 0..i {
            v *= BigInt::from(self.base);
        }
        Rat::from_integer(v)
    }

    pub fn points(&self) -> Vec<Rat> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Exponent of a grid point, if the abscissa is on the grid.
    pub fn exponent_of(&self, x: &Rat) -> Option<usize> {
        if !x.denom().is_one() {
            return None;
        }
        let mut v = x.numer().clone();
        let base = BigInt::from(self.base);
        let mut e = 0usize;
        while v > BigInt::one() {
            if (&v % &base) != BigInt::zero() {
                return None;
            }
            v /= &base;
            e += 1;
        }
        if v.is_one() && e <= self.max_exp as usize {
            Some(e)
        } else {
            None
        }
    }
}

/// Sampled submultiplicative hull of a function on a grid.
#[derive(Debug, Clone)]
pub struct HullResult {
    pub grid: Grid,
    /// `log2 h(base^i)` per grid point.
    pub log_values: Vec<Num>,
    /// Largest factor count used by an optimal factorization.
    pub achieved_depth: u32,
    /// Set when some requested dip point was not a grid point, so the DP
    /// cannot see it; the hull is then only the hull of the sampled values.
    pub coarse_points: Vec<u64>,
}

impl HullResult {
    /// Hull value at grid exponent `i` (leaves the log domain).
    pub fn value(&self, i: usize, prec: u32) -> Num {
        self.log_values[i].exp2(prec)
    }
}

/// Submultiplicative hull of `phi` over the grid, by shortest-path
/// relaxation in the log domain over grid-point factorizations.
pub fn submultiplicative_hull(
    phi: &FunctionSpec,
    grid: &Grid,
    prec: u32,
) -> Result<HullResult, FunclassError> {
    let n = grid.max_exp as usize;
    // cost[s] = log2 phi(base^s), s = 1..=n (a factor base^0 = 1 is free).
    let mut cost: Vec<Num> = Vec::with_capacity(n + 1);
    cost.push(Num::Exact(Rat::zero()));
    for s in 1..=n {
        cost.push(phi.eval_log2(&grid.point(s), prec)?);
    }
    // A[w] = min total cost over factorizations with exponents summing to
    // exactly w; minimal >=-witnesses stay below 2n.
    let cap = 2 * n;
    let mut a: Vec<Num> = Vec::with_capacity(cap + 1);
    let mut depth: Vec<u32> = Vec::with_capacity(cap + 1);
    a.push(Num::Exact(Rat::zero()));
    depth.push(0);
    for w in 1..=cap {
        let mut best: Option<(Num, u32)> = None;
        for s in 1..=n.min(w) {
            let cand = a[w - s].add(&cost[s]);
            let cand_depth = depth[w - s] + 1;
            let better = match &best {
                None => true,
                Some((b, _)) => cand.lt_mid(b),
            };
            if better {
                best = Some((cand, cand_depth));
            }
        }
        let (b, d) = best.expect("w >= 1 always has a single-factor option");
        a.push(b);
        depth.push(d);
    }
    // Suffix minima give the >= t constraint.
    let mut log_values: Vec<Num> = Vec::with_capacity(n + 1);
    let mut achieved_depth = 0u32;
    for t in 0..=n {
        let mut best = a[t].clone();
        let mut best_d = depth[t];
        for w in (t + 1)..=cap {
            if a[w].lt_mid(&best) {
                best = a[w].clone();
                best_d = depth[w];
            }
        }
        achieved_depth = achieved_depth.max(best_d);
        log_values.push(best);
    }
    // Flag dip points that the grid cannot see.
    let coarse_points = match phi {
        FunctionSpec::Phi { k_set } => k_set
            .iter()
            .filter(|k| grid.exponent_of(&Rat::from_integer(BigInt::from(**k))).is_none())
            .copied()
            .collect(),
        FunctionSpec::PhiPrime { k_set, excluded } => k_set
            .iter()
            .filter(|k| {
                **k != *excluded
                    && grid.exponent_of(&Rat::from_integer(BigInt::from(**k))).is_none()
            })
            .copied()
            .collect(),
        _ => Vec::new(),
    };
    Ok(HullResult { grid: grid.clone(), log_values, achieved_depth, coarse_points })
}

/// Concave envelope (upper hull) of sampled points, as the polyline through
/// the hull vertices, extended analytically by `G(x) = x` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Envelope {
    /// Input abscissas (strictly increasing, first one must be 1).
    pub xs: Vec<Rat>,
    /// Envelope values at the input abscissas.
    pub values: Vec<Num>,
    /// Indices of the hull vertices among the inputs.
    pub vertices: Vec<usize>,
}

impl Envelope {
    /// Evaluate the envelope anywhere in `[0, x_max]`: the segment `y = x`
    /// on `[0, 1]` and the vertex polyline beyond.
    pub fn eval(&self, x: &Rat) -> Result<Num, FunclassError> {
        if *x < Rat::zero() || *x > *self.xs.last().unwrap() {
            return Err(FunclassError::OffGrid(x.clone()));
        }
        if *x <= Rat::one() {
            return Ok(Num::Exact(x.clone()));
        }
        // Find bracketing vertices.
        let pos = self
            .vertices
            .iter()
            .position(|&v| self.xs[v] >= *x)
            .expect("x below max abscissa");
        let hi = self.vertices[pos];
        if self.xs[hi] == *x {
            return Ok(self.values[hi].clone());
        }
        let lo = self.vertices[pos - 1];
        let (x0, x1) = (&self.xs[lo], &self.xs[hi]);
        let t = (x - x0) / (x1 - x0);
        let y0 = &self.values[lo];
        let y1 = &self.values[hi];
        Ok(y0.add(&y1.sub(y0).scale(&t)))
    }
}

/// Smallest concave majorant of the samples `(xs[i], ys[i])`; `xs[0]` must
/// be 1 so the `[0,1]` extension joins continuously (a join with slope at
/// most 1 holds automatically for `H <= x`).
pub fn concave_envelope(xs: &[Rat], ys: &[Num]) -> Result<Envelope, FunclassError> {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    assert!(xs[0] == Rat::one(), "envelope inputs start at x = 1");
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FunclassError::GridAbscissasNotIncreasing);
    }
    // Upper hull by monotone chain on midpoint coordinates. The inputs carry
    // tiny enclosure widths (far below the comparison tolerance); hull
    // *structure* decisions use midpoints and are deterministic.
    let my: Vec<Rat> = ys.iter().map(|y| y.mid()).collect();
    let mut chain: Vec<usize> = Vec::new();
    for i in 0..xs.len() {
        while chain.len() >= 2 {
            let a = chain[chain.len() - 2];
            let b = chain[chain.len() - 1];
            // cross((b-a), (i-a)) >= 0 means b is on or below chord a->i.
            let cross = (&xs[b] - &xs[a]) * (&my[i] - &my[a])
                - (&xs[i] - &xs[a]) * (&my[b] - &my[a]);
            if cross >= Rat::zero() {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    // Envelope values: vertices keep their sample value; interior points get
    // the chord value.
    let mut values: Vec<Num> = Vec::with_capacity(xs.len());
    let mut seg = 0usize;
    for i in 0..xs.len() {
        while seg + 1 < chain.len() && chain[seg + 1] < i {
            seg += 1;
        }
        if chain.contains(&i) {
            values.push(ys[i].clone());
        } else {
            let lo = chain[seg];
            let hi = chain[seg + 1];
            let t = (&xs[i] - &xs[lo]) / (&xs[hi] - &xs[lo]);
            values.push(ys[lo].add(&ys[hi].sub(&ys[lo]).scale(&t)));
        }
    }
    Ok(Envelope { xs: xs.to_vec(), values, vertices: chain })
}

/// Everything derived from one choice of `J` and grid: the function chain
/// `f, sqrt f, phi, h, H, G, g` with the right derivative of `f` at 1.
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct FunctionContext {
    pub j: Vec<u64>,
    pub grid: Grid,
    pub prec: u32,
    pub f: FunctionSpec,
    pub phi: FunctionSpec,
    pub grid_x: Vec<Rat>,
    pub f_vals: Vec<Num>,
    pub sqrt_f_vals: Vec<Num>,
    pub phi_vals: Vec<Num>,
    pub hull: HullResult,
    pub h_vals: Vec<Num>,
    pub big_h_vals: Vec<Num>,
    pub envelope: Envelope,
    pub g_vals: Vec<Num>,
    pub fprime1: Num,
}

impl FunctionContext {
    /// K: elements of J at even 1-based positions (`j_2, j_4, ...`).
    pub fn k_set(&self) -> BTreeSet<u64> {
        self.j.iter().skip(1).step_by(2).copied().collect()
    }

    /// L: elements of J at odd 1-based positions (`j_1, j_3, ...`).
    pub fn l_set(&self) -> BTreeSet<u64> {
        self.j.iter().step_by(2).copied().collect()
    }

    /// Build the chain for the given `J` on the given grid, verifying the
    /// sandwich and concavity along the way. `excluded` removes one element
    /// of `K` from the dip set (the `phi'`/`g'` variant).
    pub fn build(
        j: Vec<u64>,
        grid: Grid,
        prec: u32,
        excluded: Option<u64>,
    ) -> Result<FunctionContext, FunclassError> {
        assert!(j.windows(2).all(|w| w[0] < w[1]), "J must be strictly increasing");
        let k_set: BTreeSet<u64> = j.iter().skip(1).step_by(2).copied().collect();
        let f = FunctionSpec::Log2p1;
        let phi = match excluded {
            None => FunctionSpec::Phi { k_set: k_set.clone() },
            Some(e) => FunctionSpec::PhiPrime { k_set: k_set.clone(), excluded: e },
        };
        let grid_x = grid.points();
        let f_vals: Vec<Num> =
            grid_x.iter().map(|x| f.eval(x, prec)).collect::<Result<_, _>>()?;
        let sqrt_f_vals: Vec<Num> = f_vals.iter().map(|v| v.sqrt(prec)).collect();
        let phi_vals: Vec<Num> =
            grid_x.iter().map(|x| phi.eval(x, prec)).collect::<Result<_, _>>()?;
        let hull = submultiplicative_hull(&phi, &grid, prec)?;
        let h_vals: Vec<Num> = (0..grid.len()).map(|i| hull.value(i, prec)).collect();
        // H = x / h, exact at x = 1.
        let big_h_vals: Vec<Num> = grid_x
            .iter()
            .zip(&h_vals)
            .map(|(x, h)| Num::Exact(x.clone()).div(h))
            .collect();
        let envelope = concave_envelope(&grid_x, &big_h_vals)?;
        let g_vals: Vec<Num> = grid_x
            .iter()
            .zip(&envelope.values)
            .map(|(x, gv)| Num::Exact(x.clone()).div(gv))
            .collect();
        let fprime1 = crate::funclass::right_derivative_at_1(&f, prec)?.value;
        let ctx = FunctionContext {
            j,
            grid,
            prec,
            f,
            phi,
            grid_x,
            f_vals,
            sqrt_f_vals,
            phi_vals,
            hull,
            h_vals,
            big_h_vals,
            envelope,
            g_vals,
            fprime1,
        };
        ctx.verify_sandwich()?;
        ctx.verify_concavity()?;
        Ok(ctx)
    }

    pub fn default_toy(j: Vec<u64>) -> Result<FunctionContext, FunclassError> {
        FunctionContext::build(j, Grid::default_grid(), DEFAULT_PREC, None)
    }

    /// The sandwich `sqrt f <= g <= phi <= f` at every grid point, at the
    /// default tolerance.
    pub fn verify_sandwich(&self) -> Result<(), FunclassError> {
        let tol = crate::funclass::default_tolerance();
        for i in 0..self.grid_x.len() {
            let x = &self.grid_x[i];
            let checks = [
                (&self.sqrt_f_vals[i], &self.g_vals[i], "sqrt f <= g"),
                (&self.g_vals[i], &self.phi_vals[i], "g <= phi"),
                (&self.phi_vals[i], &self.f_vals[i], "phi <= f"),
            ];
            for (lo, hi, name) in checks {
                if !lo.le_tol(hi, &tol) {
                    return Err(FunclassError::SandwichViolation {
                        point: x.clone(),
                        detail: format!(
                            "{name} fails: {} vs {}",
                            lo.to_string_tagged(),
                            hi.to_string_tagged()
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Non-positive second differences of `G` across grid triples (slope
    /// monotonicity, tolerance-aware), plus the `[0,1]` join.
    pub fn verify_concavity(&self) -> Result<(), FunclassError> {
        let tol = crate::funclass::default_tolerance();
        let xs = &self.grid_x;
        let gv = &self.envelope.values;
        // join: slope out of (1, G(1)) must be <= 1 and G(1) = 1
        let one = Num::Exact(Rat::one());
        if !gv[0].le_tol(&one, &tol) || !one.le_tol(&gv[0], &tol) {
            return Err(FunclassError::NotConcave { point: Rat::one() });
        }
        let mut prev_slope: Option<Num> = None;
        for w in 0..xs.len() - 1 {
            let dx = Num::Exact(&xs[w + 1] - &xs[w]);
            let slope = gv[w + 1].sub(&gv[w]).div(&dx);
            if let Some(p) = prev_slope {
                if !slope.le_tol(&p, &tol) {
                    return Err(FunclassError::NotConcave { point: xs[w].clone() });
                }
            }
            prev_slope = Some(slope);
        }
        if let Some(first) = xs.get(1) {
            let dx = Num::Exact(first - &xs[0]);
            let slope = gv[1].sub(&gv[0]).div(&dx);
            if !slope.le_tol(&Num::Exact(Rat::one()), &tol) {
                return Err(FunclassError::NotConcave { point: Rat::one() });
            }
        }
        Ok(())
    }

    /// `g(x) = x / G(x)` anywhere on `(0, x_max]`, via the envelope polyline.
    pub fn g_at(&self, x: &Rat) -> Result<Num, FunclassError> {
        let gx = self.envelope.eval(x)?;
        Ok(Num::Exact(x.clone()).div(&gx))
    }

    /// `f` value helper at arbitrary points.
    pub fn f_at(&self, x: &Rat) -> Result<Num, FunclassError> {
        self.f.eval(x, self.prec)
    }
}

/// Result of the region identity check of the envelope: `G(x) f(x) = x`
/// on the grid restricted to `[ln N, e^N]`.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub n: u64,
    pub checked: Vec<(Rat, Rat)>,
    pub max_rel_deviation: Rat,
    pub tolerance: Rat,
    pub pass: bool,
}

/// Check `G(x) f(x) = x` within `tol` (relative) on `grid ∩ [ln N, e^N]`
/// for `N` in `L`. Points outside the region carry no claim.
pub fn lemma7_region(
    n: u64,
    ctx: &FunctionContext,
    tol: &Rat,
) -> Result<RegionReport, FunclassError> {
    if !ctx.l_set().contains(&n) {
        return Err(FunclassError::NotInL(n));
    }
    let prec = ctx.prec;
    let ln_n = bigfloat::ln_interval(&Rat::from_integer(BigInt::from(n)), prec);
    // e^N may be astronomically large; only compare when it bounds the grid.
    let exp_cap_applies = (n as f64) * core::f64::consts::LOG2_E < (1 << 24) as f64;
    let exp_n = if exp_cap_applies { Some(bigfloat::exp_interval(n, prec)) } else { None };
    let mut checked = Vec::new();
    let mut max_dev = Rat::zero();
    for (i, x) in ctx.grid_x.iter().enumerate() {
        // Conservative inner region: ln(N).hi <= x and x <= exp(N).lo.
        if *x < ln_n.hi {
            continue;
        }
        if let Some(e) = &exp_n {
            if *x > e.lo {
                continue;
            }
        }
        let prod = ctx.envelope.values[i].mul(&ctx.f_vals[i]);
        let dev = (prod.mid() / x - Rat::one()).abs();
        if dev > max_dev {
            max_dev = dev.clone();
        }
        checked.push((x.clone(), dev));
    }
    let pass = max_dev <= *tol;
    Ok(RegionReport { n, checked, max_rel_deviation: max_dev, tolerance: tol.clone(), pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funclass::default_tolerance;
    use num_traits::ToPrimitive;
    use crate::rat::{rat, rat_int};

    fn toy_ctx() -> FunctionContext {
        // Sparse toy parameters: L = {4}, K = {2^63}; dip on-grid, region
        // [ln 4, e^4] clean (analyzed tangency is near x = 67).
        FunctionContext::build(alloc::vec![4, 1u64 << 63], Grid::default_grid(), 160, None)
            .expect("context builds")
    }

    #[test]
    fn grid_points_and_exponents() {
        let g = Grid::new(2, 8);
        assert_eq!(g.point(3), rat_int(8));
        assert_eq!(g.exponent_of(&rat_int(64)), Some(6));
        assert_eq!(g.exponent_of(&rat_int(3)), None);
        assert_eq!(g.exponent_of(&rat(1, 2)), None);
    }

    #[test]
    fn hull_of_f_is_f() {
        // f is already submultiplicative: the hull agrees with f on the grid.
        let grid = Grid::new(2, 24);
        let hull = submultiplicative_hull(&FunctionSpec::Log2p1, &grid, 128).unwrap();
        let tol = default_tolerance();
        for i in 1..grid.len() {
            let h = hull.value(i, 128);
            let f = FunctionSpec::Log2p1.eval(&grid.point(i), 128).unwrap();
            assert!(h.le_tol(&f, &tol) && f.le_tol(&h, &tol), "i={i}");
        }
        assert!(hull.coarse_points.is_empty());
    }

    #[test]
    fn hull_keeps_isolated_dip() {
        // K = {2^20} inside a [1, 2^24] grid: at the dip the hull is sqrt f.
        let kset: BTreeSet<u64> = [1u64 << 20].into_iter().collect();
        let phi = FunctionSpec::Phi { k_set: kset };
        let grid = Grid::new(2, 24);
        let hull = submultiplicative_hull(&phi, &grid, 128).unwrap();
        let dip = hull.value(20, 128);
        let expect = FunctionSpec::Log2p1
            .eval(&grid.point(20), 128)
            .unwrap()
            .sqrt(128);
        let tol = default_tolerance();
        assert!(dip.le_tol(&expect, &tol) && expect.le_tol(&dip, &tol));
        // h <= phi pointwise (single-factor factorization)
        for i in 0..grid.len() {
            let h = hull.value(i, 128);
            let p = phi.eval(&grid.point(i), 128).unwrap();
            assert!(h.le_tol(&p, &tol), "h > phi at {i}");
        }
    }

    #[test]
    fn hull_submultiplicative_on_pairs() {
        let kset: BTreeSet<u64> = [1u64 << 10].into_iter().collect();
        let phi = FunctionSpec::Phi { k_set: kset };
        let grid = Grid::new(2, 16);
        let hull = submultiplicative_hull(&phi, &grid, 128).unwrap();
        let tol = default_tolerance();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                if i + j > grid.max_exp as usize {
                    continue;
                }
                let sum = hull.log_values[i].add(&hull.log_values[j]);
                assert!(
                    hull.log_values[i + j].le_tol(&sum, &tol),
                    "submultiplicativity fails at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn envelope_of_concave_input_is_identity() {
        let xs: Vec<Rat> = (0..10).map(|i| rat_int(1 << i)).collect();
        // strictly concave samples: y = sqrt(x) mids
        let ys: Vec<Num> = xs
            .iter()
            .map(|x| Num::fold(bigfloat::sqrt_interval(x, 96)))
            .collect();
        let env = concave_envelope(&xs, &ys).unwrap();
        assert_eq!(env.vertices.len(), xs.len());
        for (a, b) in env.values.iter().zip(&ys) {
            assert_eq!(a.mid(), b.mid());
        }
        // G(1) = 1 from the sample; [0,1] extension evaluates to x
        assert_eq!(env.eval(&rat(1, 2)).unwrap().mid(), rat(1, 2));
    }

    #[test]
    fn envelope_lifts_dips() {
        let xs = alloc::vec![rat_int(1), rat_int(2), rat_int(4), rat_int(8)];
        let ys = alloc::vec![
            Num::Exact(rat_int(1)),
            Num::Exact(rat_int(1)), // dip below chord 1 -> 5
            Num::Exact(rat_int(3)),
            Num::Exact(rat_int(5)),
        ];
        let env = concave_envelope(&xs, &ys).unwrap();
        // (4,3) stays a vertex; the dip at x=2 lifts onto the chord
        // from (1,1) to (4,3): value 5/3.
        assert_eq!(env.values[1].mid(), rat(5, 3));
        assert_eq!(env.values[2].mid(), rat_int(3));
        // G >= input pointwise
        for (v, y) in env.values.iter().zip(&ys) {
            assert!(v.mid() >= y.mid());
        }
    }

    #[test]
    fn context_builds_with_sandwich() {
        let ctx = toy_ctx();
        // g(1) = 1
        assert_eq!(ctx.g_vals[0].mid(), rat_int(1));
        // supermultiplicativity of G on sampled pairs
        let tol = default_tolerance();
        for i in 0..ctx.grid_x.len() {
            for j in 0..ctx.grid_x.len() {
                if i + j >= ctx.grid_x.len() {
                    continue;
                }
                let prod = ctx.envelope.values[i].mul(&ctx.envelope.values[j]);
                assert!(
                    prod.le_tol(&ctx.envelope.values[i + j], &tol),
                    "supermultiplicativity fails at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn lemma7_identity_on_toy_region() {
        let ctx = toy_ctx();
        let tol = default_tolerance();
        let rep = lemma7_region(4, &ctx, &tol).unwrap();
        assert!(rep.pass, "max deviation {}", rep.max_rel_deviation.to_f64().unwrap());
        assert!(!rep.checked.is_empty());
        // N not in L errors
        assert!(matches!(lemma7_region(8, &ctx, &tol), Err(FunclassError::NotInL(8))));
        // g >= sqrt f restated: G(x) <= x / sqrt f(x) everywhere
        for i in 0..ctx.grid_x.len() {
            let bound = Num::Exact(ctx.grid_x[i].clone()).div(&ctx.sqrt_f_vals[i]);
            assert!(ctx.envelope.values[i].le_tol(&bound, &tol), "fails at {i}");
        }
    }
}
