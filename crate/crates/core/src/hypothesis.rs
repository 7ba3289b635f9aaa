//! Neyman-Pearson errors for simple hypotheses, the achievability tests
//! built from universal symmetric states, and evaluators for the
//! single-letter exponent formulas.
//!
//! Conventions: a test `T` is charged `Tr[null (1 - T)]` as type-I error and
//! `Tr[alt T]` as type-II error; `beta(eps)` is the least type-II error with
//! type-I error at most `eps`, randomisation allowed.

use crate::divergence::petz_divergence;
use crate::error::{Error, Result};
use crate::measures::{tumula_information, AlphaCurve, CurveMeasure, SolverOptions, ThresholdPair, Variant};
use crate::operator::{
    binomial, eigh_unchecked, nonneg_projector, permute_subsystems, trace_product_re, universal_symmetric_state,
    BipartiteState, CMatrix, DensityMatrix, HermitianOperator,
};
use crate::optimize::golden_max;
use crate::random::{random_density, seeded};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Most type classes [`classical_np_beta`] enumerates.
pub const TYPE_CLASS_LIMIT: u64 = 10_000_000;
/// Largest `n`-copy dimension accepted by [`quantum_np_beta`].
pub const NP_DIM_LIMIT: usize = 256;
/// Grid spacing the exponent formulas require of their curves.
pub const CURVE_GAP: f64 = 0.01;
/// Bracket width of the golden-section refinement.
pub const REFINE_WIDTH: f64 = 1e-8;
/// Tolerance for deciding that a numerically estimated threshold is zero.
pub const THRESHOLD_ZERO_TOL: f64 = 1e-3;

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("type-I budget {eps} outside [0, 1]")));
    }
    Ok(())
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} must be a non-empty non-negative vector")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("{what} sums to {s}")));
    }
    Ok(())
}

fn compositions(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(left: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if k == 1 {
            cur.push(left);
            visit(cur);
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(left - i, k - 1, cur, visit);
            cur.pop();
        }
    }
    rec(n, k, &mut Vec::with_capacity(k), &mut visit);
}

/// Exact least type-II error between `p^n` (null) and `q^n` (alternative)
/// with type-I error exactly `eps`. Outcomes are grouped by type class;
/// classes are accepted for the null in decreasing likelihood ratio and the
/// boundary class is randomised.
pub fn classical_np_beta(p: &[f64], q: &[f64], n: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    check_distribution(p, "null distribution")?;
    check_distribution(q, "alternative distribution")?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("alphabets of size {} and {}", p.len(), q.len())));
    }
    if n == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let k = p.len();
    let classes = binomial((n + k - 1) as u64, (k - 1) as u64);
    if classes > TYPE_CLASS_LIMIT || classes == 0 {
        return Err(Error::ResourceGuard(format!("{classes} type classes exceed {TYPE_CLASS_LIMIT}")));
    }
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let ln_q: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    let log_mass = |c: &[usize], ln: &[f64]| -> f64 {
        c.iter().zip(ln).map(|(&ci, &l)| if ci == 0 { 0.0 } else { ci as f64 * l }).sum()
    };
    // (log likelihood ratio, null mass, alternative mass)
    let mut table: Vec<(f64, f64, f64)> = Vec::with_capacity(classes as usize);
    compositions(n, k, |c| {
        let mult = ln_fact[n] - c.iter().map(|&ci| ln_fact[ci]).sum::<f64>();
        let lp = log_mass(c, &ln_p);
        let lq = log_mass(c, &ln_q);
        let key = match (lp == f64::NEG_INFINITY, lq == f64::NEG_INFINITY) {
            (true, _) => f64::NEG_INFINITY,
            (false, true) => f64::INFINITY,
            _ => lp - lq,
        };
        table.push((key, (mult + lp).exp(), (mult + lq).exp()));
    });
    table.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut need = 1.0 - eps;
    let mut beta = 0.0;
    for &(_, pm, qm) in &table {
        if need <= 0.0 {
            break;
        }
        if pm <= 0.0 {
            continue;
        }
        if pm >= need {
            beta += qm * need / pm;
            need = 0.0;
        } else {
            beta += qm;
            need -= pm;
        }
    }
    Ok(beta.clamp(0.0, 1.0))
}

fn density_power(rho: &DensityMatrix, n: usize) -> DensityMatrix {
    let mut out = rho.clone();
    for _ in 1..n {
        out = out.tensor(rho);
    }
    out
}

/// Eigenvectors of `x` with eigenvalue above `tol`, as the errors
/// `(1 - Tr[rho P], Tr[sigma P])` of the projector `P` they span.
fn projector_errors(x: &CMatrix, rho: &CMatrix, sigma: &CMatrix, rel_tol: f64) -> (f64, f64) {
    let e = eigh_unchecked(x);
    let scale = e.values.iter().fold(0.0f64, |a, l| a.max(l.abs())).max(1e-300);
    let mut tr_rho = 0.0;
    let mut tr_sigma = 0.0;
    for k in 0..e.values.len() {
        if e.values[k] > rel_tol * scale {
            let v = e.vectors.column(k);
            tr_rho += (v.adjoint() * rho * v)[(0, 0)].re;
            tr_sigma += (v.adjoint() * sigma * v)[(0, 0)].re;
        }
    }
    ((1.0 - tr_rho).clamp(0.0, 1.0), tr_sigma.clamp(0.0, 1.0))
}

/// Least type-II error between `rho^n` and `sigma^n` at type-I budget `eps`,
/// attained by mixing the two Neyman-Pearson projectors `{t rho^n > sigma^n}`
/// that bracket the budget. Exact for simple hypotheses up to the bisection
/// in `t`.
pub fn quantum_np_beta(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("dimensions {} and {}", rho.dim(), sigma.dim())));
    }
    if n == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let total = (rho.dim() as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > NP_DIM_LIMIT as u64 {
        return Err(Error::ResourceGuard(format!("dimension {total} exceeds {NP_DIM_LIMIT}")));
    }
    let r = density_power(rho, n).matrix().clone();
    let s = density_power(sigma, n).matrix().clone();
    Ok(np_beta_matrices(&r, &s, eps))
}

fn np_beta_matrices(r: &CMatrix, s: &CMatrix, eps: f64) -> f64 {
    if eps >= 1.0 {
        return 0.0;
    }
    // t = 0 rejects the null always; t = infinity accepts on supp(rho).
    let mut lo = (1.0, 0.0);
    let mut hi = projector_errors(r, r, s, 1e-12);
    let (mut u_lo, mut u_hi) = (-90.0f64, 90.0f64);
    for _ in 0..400 {
        if u_hi - u_lo < 1e-13 {
            break;
        }
        let u = 0.5 * (u_lo + u_hi);
        let x = r.scale(u.exp()) - s;
        let pt = projector_errors(&x, r, s, 1e-13);
        if pt.0 > eps {
            lo = pt;
            u_lo = u;
        } else {
            hi = pt;
            u_hi = u;
        }
    }
    if hi.0 > eps {
        return hi.1;
    }
    let lam = if lo.0 - hi.0 > 0.0 { ((eps - hi.0) / (lo.0 - hi.0)).clamp(0.0, 1.0) } else { 0.0 };
    (lam * lo.1 + (1.0 - lam) * hi.1).clamp(0.0, 1.0)
}

/// Dual value `t (1 - eps) - Tr[(t rho - sigma)_+]`, a lower bound on the
/// least type-II error for every `t >= 0`.
pub fn np_dual_value(rho: &CMatrix, sigma: &CMatrix, eps: f64, t: f64) -> f64 {
    let e = eigh_unchecked(&(rho.scale(t) - sigma));
    t * (1.0 - eps) - e.values.iter().filter(|&&l| l > 0.0).sum::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct AchievabilityRecord {
    pub n: usize,
    pub rate: f64,
    pub s: f64,
    pub lambda_n: f64,
    /// `D_(1-s)(rho^n || omega_A^n (x) omega_B^n)`.
    pub divergence: f64,
    /// `Tr[rho^n T]`.
    pub type1: f64,
    /// `e^(-nR)`.
    pub type1_bound: f64,
    /// Largest `Tr[sigma (x) tau (1 - T)]` over the sampled symmetric products.
    pub type2_sampled: f64,
    /// `g_A g_B Tr[omega_A^n (x) omega_B^n (1 - T)]`.
    pub type2_omega: f64,
    /// `g_A g_B exp(-D + (1 - s)/s n R)`.
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub type2_bound: f64,
    pub g_a: u64,
    pub g_b: u64,
    pub samples: usize,
}

impl AchievabilityRecord {
    pub fn type1_holds(&self, slack: f64) -> bool {
        self.type1 <= self.type1_bound + slack
    }

    pub fn type2_holds(&self, slack: f64) -> bool {
        self.type2_sampled <= self.type2_omega + slack && self.type2_omega <= self.type2_bound + slack
    }
}

/// Number of symmetric product alternatives sampled by [`achievability_test`].
pub const ACHIEVABILITY_SAMPLES: usize = 50;

/// Test `{rho^n <= e^(lambda_n) omega_A^n (x) omega_B^n}` with
/// `lambda_n = D_(1-s)(rho^n || omega omega) - nR/s`, its type-I error and
/// the type-II bounds over permutation-invariant product alternatives.
pub fn achievability_test(rho: &BipartiteState, n: usize, rate: f64, s: f64, seed: u64) -> Result<AchievabilityRecord> {
    achievability_core(rho, n, rate, s, ACHIEVABILITY_SAMPLES, seed)
}

fn symmetrize(m: &CMatrix, n: usize, d: usize) -> Result<CMatrix> {
    let dims = vec![d; n];
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for p in &perms {
        out += permute_subsystems(m, &dims, p)?;
    }
    Ok(out.unscale(perms.len() as f64))
}

fn random_symmetric(n: usize, d: usize, iid: bool, rng: &mut crate::random::SeededRng) -> Result<CMatrix> {
    if iid {
        Ok(density_power(&random_density(d, rng), n).matrix().clone())
    } else {
        symmetrize(random_density(d.pow(n as u32), rng).matrix(), n, d)
    }
}

fn achievability_core(
    rho: &BipartiteState,
    n: usize,
    rate: f64,
    s: f64,
    samples: usize,
    seed: u64,
) -> Result<AchievabilityRecord> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("order {s} outside (0, 1)")));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate {rate} must be positive")));
    }
    if n == 0 || n > 2 {
        return Err(Error::ResourceGuard(format!("n = {n} outside 1..=2")));
    }
    if (rho.da * rho.db).pow(n as u32) > 64 {
        return Err(Error::ResourceGuard("n-copy dimension exceeds 64".into()));
    }
    let ua = universal_symmetric_state(n, rho.da)?;
    let ub = universal_symmetric_state(n, rho.db)?;
    let rho_n = rho.tensor_power(n);
    let ww = ua.omega.tensor(&ub.omega);
    let d = petz_divergence(1.0 - s, rho_n.rho.operator(), ww.operator())?.value();
    let nf = n as f64;
    let lambda = d - nf * rate / s;
    let x = HermitianOperator::from_raw(ww.matrix().scale(lambda.exp()) - rho_n.matrix());
    let t = nonneg_projector(&x).into_matrix();
    let dim = t.nrows();
    let reject = CMatrix::identity(dim, dim) - &t;
    let type1 = trace_product_re(rho_n.matrix(), &t);
    let g = (ua.g * ub.g) as f64;
    let type2_omega = g * trace_product_re(ww.matrix(), &reject);
    let type2_bound = g * (-d + (1.0 - s) / s * nf * rate).exp();
    let mut rng = seeded(seed);
    let mut sampled = 0.0f64;
    for k in 0..samples {
        let sa = random_symmetric(n, rho.da, k % 2 == 0, &mut rng)?;
        let tb = random_symmetric(n, rho.db, k % 2 == 0, &mut rng)?;
        let alt = crate::operator::tensor_product(&sa, &tb);
        sampled = sampled.max(trace_product_re(&alt, &reject));
    }
    Ok(AchievabilityRecord {
        n,
        rate,
        s,
        lambda_n: lambda,
        divergence: d,
        type1,
        type1_bound: (-nf * rate).exp(),
        type2_sampled: sampled,
        type2_omega,
        type2_bound,
        g_a: ua.g,
        g_b: ub.g,
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaKind {
    /// `sup (1-s)/s (I_s - R)` on mutual-information curves.
    Direct,
    /// `sup (1-s)/s (L_s - R)` on lautum curves.
    Reverse,
}

impl std::str::FromStr for FormulaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(FormulaKind::Direct),
            "reverse" => Ok(FormulaKind::Reverse),
            other => Err(Error::InvalidInput(format!("unknown formula kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExponentQuery {
    pub family: Variant,
    pub rate: f64,
    pub curve: AlphaCurve,
    pub thresholds: Option<ThresholdPair>,
    /// `T(A:B)`, bounding the doubly minimised reverse range from above.
    pub tumula: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormulaValue {
    /// The supremum itself; may be negative.
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub value: f64,
    /// `max(value, 0)`.
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub exponent: f64,
    pub s_star: f64,
    pub s_range: (f64, f64),
    /// False when the rate lies outside the range where the formula is the
    /// exponent; the value is then formula-only.
    pub valid: bool,
}

/// Optional exact evaluator `s -> L_s` (or `I_s`) used to refine between
/// grid points; without it the curve is interpolated linearly.
pub type CurveEvaluator<'a> = &'a dyn Fn(f64) -> f64;

/// Open interval of orders the formula ranges over.
pub fn formula_range(kind: FormulaKind, family: Variant) -> (f64, f64) {
    match (kind, family) {
        (FormulaKind::Reverse, Variant::Doubly) => (0.0, 0.5),
        (FormulaKind::Direct, Variant::Doubly) => (0.5, 1.0),
        _ => (0.0, 1.0),
    }
}

fn interpolate(alphas: &[f64], values: &[f64], s: f64) -> f64 {
    let k = alphas.partition_point(|&a| a < s).clamp(1, alphas.len() - 1);
    let (a0, a1) = (alphas[k - 1], alphas[k]);
    let (v0, v1) = (values[k - 1], values[k]);
    v0 + (v1 - v0) * (s - a0) / (a1 - a0)
}

/// Checks that the curve samples `[lo, hi]` with gaps of at most
/// [`CURVE_GAP`].
pub fn check_coverage(curve: &AlphaCurve, lo: f64, hi: f64) -> Result<()> {
    if curve.alphas.len() != curve.values.len() {
        return Err(Error::DimensionMismatch("curve orders and values differ in length".into()));
    }
    if curve.alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("curve orders must be strictly increasing".into()));
    }
    let tol = CURVE_GAP + 1e-9;
    let inside: Vec<f64> = curve.alphas.iter().cloned().filter(|&a| a >= lo && a <= hi).collect();
    let ok = match (inside.first(), inside.last()) {
        (Some(&first), Some(&last)) => {
            first - lo <= tol && hi - last <= tol && inside.windows(2).all(|w| w[1] - w[0] <= tol)
        }
        _ => false,
    };
    if !ok {
        return Err(Error::InvalidInput(format!("curve does not cover [{lo}, {hi}] with gaps <= {CURVE_GAP}")));
    }
    Ok(())
}

/// `sup_{s in (lo, hi)} (1-s)/s (f(s) - R)` for the sampled `f`, over the
/// grid and then golden-section refined on the bracket around the best grid
/// point. The closed end values count as limits; at `s -> 1` the limit is 0.
pub fn formula_sup(
    curve: &AlphaCurve,
    rate: f64,
    lo: f64,
    hi: f64,
    refine: Option<CurveEvaluator<'_>>,
) -> Result<(f64, f64)> {
    check_coverage(curve, lo, hi)?;
    let g = |s: f64, v: f64| (1.0 - s) / s * (v - rate);
    let pts: Vec<(f64, f64)> = curve
        .alphas
        .iter()
        .zip(&curve.values)
        .filter(|(&a, _)| a > 0.0 && a < 1.0 && a >= lo && a <= hi)
        .map(|(&a, &v)| (a, v))
        .collect();
    if pts.iter().any(|p| p.1 == f64::INFINITY) {
        let s = pts.iter().find(|p| p.1 == f64::INFINITY).map_or(lo, |p| p.0);
        return Ok((f64::INFINITY, s));
    }
    let mut best = (f64::NEG_INFINITY, lo);
    if hi >= 1.0 {
        best = (0.0, 1.0);
    }
    let mut k_best = None;
    for (k, &(s, v)) in pts.iter().enumerate() {
        let val = g(s, v);
        if val > best.0 {
            best = (val, s);
            k_best = Some(k);
        }
    }
    if let Some(k) = k_best {
        let a = if k > 0 { pts[k - 1].0 } else if lo > 0.0 { lo } else { pts[k].0 * 1e-3 };
        let b = if k + 1 < pts.len() { pts[k + 1].0 } else if hi >= 1.0 { 1.0 - 1e-9 } else { hi };
        let (xs, vs): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        let eval = |s: f64| -> f64 {
            let v = match refine {
                Some(f) => f(s),
                None => interpolate(&xs, &vs, s),
            };
            let r = g(s, v);
            if r.is_nan() {
                f64::NEG_INFINITY
            } else {
                r
            }
        };
        if b > a {
            let (s, v) = golden_max(eval, a, b, REFINE_WIDTH);
            if v > best.0 {
                best = (v, s);
            }
        }
    }
    Ok((best.0, best.1))
}

fn check_query(q: &ExponentQuery, measure: CurveMeasure) -> Result<()> {
    if !(q.rate > 0.0) {
        return Err(Error::Domain(format!("rate {} must be positive", q.rate)));
    }
    if q.curve.measure != measure {
        return Err(Error::InvalidInput(format!("formula needs a {measure:?} curve, got {:?}", q.curve.measure)));
    }
    if q.curve.variant != q.family {
        return Err(Error::InvalidInput(format!(
            "curve variant {:?} does not match family {:?}",
            q.curve.variant, q.family
        )));
    }
    Ok(())
}

fn evaluate(q: &ExponentQuery, kind: FormulaKind, valid: bool, refine: Option<CurveEvaluator<'_>>) -> Result<FormulaValue> {
    let (lo, hi) = formula_range(kind, q.family);
    let (value, s_star) = formula_sup(&q.curve, q.rate, lo, hi, refine)?;
    Ok(FormulaValue { value, exponent: value.max(0.0), s_star, s_range: (lo, hi), valid })
}

/// Reverse direct exponent formula `sup (1-s)/s (L_s - R)` on a lautum
/// curve. For the doubly minimised family the orders range over `(0, 1/2)`
/// and the value is the exponent for `R < R^L_1/2` or `R > T(A:B)`.
pub fn reverse_direct_formula(q: &ExponentQuery, refine: Option<CurveEvaluator<'_>>) -> Result<FormulaValue> {
    check_query(q, CurveMeasure::Prli)?;
    let valid = match q.family {
        Variant::Doubly => match (q.thresholds, q.tumula) {
            (Some(th), Some(t)) => q.rate < th.r_half_l || q.rate > t,
            (Some(th), None) => q.rate < th.r_half_l,
            _ => false,
        },
        _ => true,
    };
    evaluate(q, FormulaKind::Reverse, valid, refine)
}

/// Direct exponent formula `sup (1-s)/s (I_s - R)` on a mutual-information
/// curve; the doubly minimised row ranges over `(1/2, 1)` and needs
/// `R > R_1/2`.
pub fn direct_formula(q: &ExponentQuery, refine: Option<CurveEvaluator<'_>>) -> Result<FormulaValue> {
    check_query(q, CurveMeasure::Prmi)?;
    let valid = match q.family {
        Variant::Doubly => q.thresholds.is_some_and(|th| q.rate > th.r_half),
        _ => true,
    };
    evaluate(q, FormulaKind::Direct, valid, refine)
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalExponent {
    pub ns: Vec<usize>,
    /// `-(1/n) ln error`.
    #[serde(serialize_with = "crate::io::serialize_vec_f64_or_inf")]
    pub slopes: Vec<f64>,
    /// Constant term `c` of the least-squares fit
    /// `slope(n) = c + a ln(n)/n + b/n` over the finite slopes.
    pub extrapolated: Option<f64>,
    pub fit: Option<[f64; 3]>,
}

/// Per-`n` slopes and their extrapolation to `n -> infinity`.
pub fn empirical_exponent(points: &[(usize, f64)]) -> Result<EmpiricalExponent> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, e)| n == 0 || !(e >= 0.0)) {
        return Err(Error::InvalidInput("block lengths must be positive and errors non-negative".into()));
    }
    let slopes: Vec<f64> = points.iter().map(|&(n, e)| -e.ln() / n as f64).collect();
    let finite: Vec<(f64, f64)> = points
        .iter()
        .zip(&slopes)
        .filter(|(_, s)| s.is_finite())
        .map(|(&(n, _), &s)| (n as f64, s))
        .collect();
    let distinct = finite.iter().map(|p| p.0.to_bits()).unique().count();
    let fit = if distinct >= 3 {
        let a = DMatrix::from_fn(finite.len(), 3, |i, j| {
            let n = finite[i].0;
            [1.0, n.ln() / n, 1.0 / n][j]
        });
        let b = DVector::from_iterator(finite.len(), finite.iter().map(|p| p.1));
        let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Consistency(e.to_string()))?;
        Some([sol[0], sol[1], sol[2]])
    } else {
        None
    };
    Ok(EmpiricalExponent { ns: points.iter().map(|p| p.0).collect(), slopes, extrapolated: fit.map(|f| f[0]), fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct SanovBounds {
    pub n: usize,
    pub eps: f64,
    pub tumula: f64,
    /// `-(1/n) ln beta` against the simple alternative `(sigma* (x) tau*)^n`.
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub upper_from_simple_alt: f64,
    /// Best `-(1/n) ln Tr[rho^n T]` over achievability tests whose
    /// symmetric-family type-II bound is within `eps`; 0 from the trivial test.
    pub lower_from_achievability: f64,
    /// `(R, s)` of the best feasible achievability test, if any.
    pub lower_witness: Option<(f64, f64)>,
    /// `ln(g_A g_B) / n`.
    pub slack: f64,
}

/// Finite-`n` bounds bracketing the Sanov exponent `T(A:B)`.
pub fn sanov_bounds(rho: &BipartiteState, eps: f64, n: usize, opts: &SolverOptions) -> Result<SanovBounds> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("budget {eps} outside (0, 1)")));
    }
    if n == 0 || n > 2 {
        return Err(Error::ResourceGuard(format!("n = {n} outside 1..=2")));
    }
    let t = tumula_information(rho, opts)?;
    let tumula = t.value.value();
    let (sigma, tau) = match (t.optimizer_sigma, t.optimizer_tau) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(Error::Consistency("tumula optimiser missing".into())),
    };
    let beta = quantum_np_beta(&sigma.tensor(&tau), &rho.rho, n, eps)?;
    let upper = -beta.ln() / n as f64;
    let mut lower = 0.0f64;
    let mut witness = None;
    let mut slack = 0.0;
    if tumula.is_finite() && tumula > 0.0 {
        for k in 1..=8 {
            let rate = tumula * k as f64 / 8.0;
            for j in 1..=9 {
                let s = j as f64 / 10.0;
                let rec = achievability_core(rho, n, rate, s, 0, 0)?;
                slack = ((rec.g_a * rec.g_b) as f64).ln() / n as f64;
                let e = -rec.type1.ln() / n as f64;
                if rec.type2_omega <= eps && e > lower {
                    lower = e;
                    witness = Some((rate, s));
                }
            }
        }
    }
    if slack == 0.0 {
        let ga = universal_symmetric_state(n, rho.da)?.g;
        let gb = universal_symmetric_state(n, rho.db)?.g;
        slack = ((ga * gb) as f64).ln() / n as f64;
    }
    Ok(SanovBounds { n, eps, tumula, upper_from_simple_alt: upper, lower_from_achievability: lower, lower_witness: witness, slack })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroRateLimit {
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub value: f64,
    /// Formula values at the two sampled rates.
    pub samples: [(f64, f64); 2],
    /// Quantity the limit targets: `I`, `L`, `U` or `T`.
    pub target: &'static str,
    pub valid: bool,
}

/// Rates at which [`zero_rate_limit`] samples the formula.
pub const ZERO_RATES: [f64; 2] = [1e-4, 1e-5];

/// Extrapolates the formula value to `R -> 0` from [`ZERO_RATES`], linearly
/// in `sqrt(R)`.
pub fn zero_rate_limit(
    curve: &AlphaCurve,
    kind: FormulaKind,
    thresholds: Option<ThresholdPair>,
    refine: Option<CurveEvaluator<'_>>,
) -> Result<ZeroRateLimit> {
    let family = curve.variant;
    let (lo, hi) = formula_range(kind, family);
    let expected = match kind {
        FormulaKind::Reverse => CurveMeasure::Prli,
        FormulaKind::Direct => CurveMeasure::Prmi,
    };
    if curve.measure != expected {
        return Err(Error::InvalidInput(format!("{kind:?} formula needs a {expected:?} curve")));
    }
    let v1 = formula_sup(curve, ZERO_RATES[0], lo, hi, refine)?.0;
    let v2 = formula_sup(curve, ZERO_RATES[1], lo, hi, refine)?.0;
    let (r1, r2) = (ZERO_RATES[0].sqrt(), ZERO_RATES[1].sqrt());
    let value = if v1.is_finite() && v2.is_finite() { (v2 * r1 - v1 * r2) / (r1 - r2) } else { v2 };
    let (target, valid) = match (kind, family) {
        (FormulaKind::Reverse, Variant::Doubly) => ("I", thresholds.is_some_and(|t| t.r_half_l > THRESHOLD_ZERO_TOL)),
        (FormulaKind::Reverse, _) => ("I", true),
        (FormulaKind::Direct, Variant::Non) => ("L", true),
        (FormulaKind::Direct, Variant::Singly) => ("U", true),
        (FormulaKind::Direct, Variant::Doubly) => ("T", thresholds.is_some_and(|t| t.r_half.abs() <= THRESHOLD_ZERO_TOL)),
    };
    Ok(ZeroRateLimit { value, samples: [(ZERO_RATES[0], v1), (ZERO_RATES[1], v2)], target, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{alpha_sweep, mutual_information, prli, prmi_sweep};
    use crate::operator::classical_state;
    use crate::random::{random_full_rank_density, random_probability, random_pure_state};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn copy_cc(p: &[f64]) -> BipartiteState {
        let k = p.len();
        let mut joint = vec![0.0; k * k];
        for (x, &px) in p.iter().enumerate() {
            joint[x * k + x] = px;
        }
        classical_state(&joint, k, k).unwrap()
    }

    fn grid(lo: f64, hi: f64) -> Vec<f64> {
        (1..100).map(|k| k as f64 / 100.0).filter(|&a| a >= lo && a <= hi).collect()
    }

    fn curve_from(f: impl Fn(f64) -> f64, alphas: Vec<f64>, variant: Variant, measure: CurveMeasure) -> AlphaCurve {
        let values = alphas.iter().map(|&a| f(a)).collect();
        AlphaCurve { alphas, values, variant, measure }
    }

    /// `sup_t t(1 - eps) - sum (t p - q)_+`, maximised over its kinks.
    fn classical_dual(p: &[f64], q: &[f64], n: usize, eps: f64) -> f64 {
        let k = p.len();
        let mut pn = vec![1.0];
        let mut qn = vec![1.0];
        for _ in 0..n {
            pn = pn.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
            qn = qn.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
        }
        assert_eq!(pn.len(), k.pow(n as u32));
        let f = |t: f64| t * (1.0 - eps) - pn.iter().zip(&qn).map(|(a, b)| (t * a - b).max(0.0)).sum::<f64>();
        let mut best = f(0.0);
        for (a, b) in pn.iter().zip(&qn) {
            if *a > 0.0 {
                best = best.max(f(b / a));
            }
        }
        best
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_np_beta(&[0.9, 0.1], &[0.5, 0.5], 1, 1.0).unwrap(), 0.0);
        assert!((classical_np_beta(&[0.9, 0.1], &[0.5, 0.5], 1, 0.1).unwrap() - 0.5).abs() < 1e-15);
        for eps in [0.0, 0.3, 0.8] {
            let b = classical_np_beta(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5], 4, eps).unwrap();
            assert!((b - (1.0 - eps)).abs() < 1e-12);
        }
        assert!(classical_np_beta(&[0.5, 0.5], &[0.5, 0.5], 1, 1.5).is_err());
        assert!(classical_np_beta(&[0.5, 0.5], &[0.5, 0.5], 1, -0.1).is_err());
        assert!(matches!(classical_np_beta(&[0.5, 0.5], &[0.4, 0.6], 10_000_000, 0.1), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn classical_matches_dual() {
        let mut rng = seeded(3);
        for n in 1..=5 {
            let p = random_probability(3, &mut rng);
            let q = random_probability(3, &mut rng);
            for eps in [0.0, 0.05, 0.4, 0.9] {
                let b = classical_np_beta(&p, &q, n, eps).unwrap();
                let d = classical_dual(&p, &q, n, eps);
                assert!((b - d).abs() < 1e-10, "n={n} eps={eps}: {b} vs {d}");
            }
        }
        let b = classical_np_beta(&[0.9, 0.0, 0.0, 0.1], &[0.81, 0.09, 0.09, 0.01], 3, 0.2).unwrap();
        assert!((b - classical_dual(&[0.9, 0.0, 0.0, 0.1], &[0.81, 0.09, 0.09, 0.01], 3, 0.2)).abs() < 1e-12);
    }

    #[test]
    fn quantum_examples() {
        let mut rng = seeded(4);
        let rho = random_full_rank_density(2, &mut rng);
        for eps in [0.0, 0.25, 0.7] {
            assert!((quantum_np_beta(&rho, &rho, 2, eps).unwrap() - (1.0 - eps)).abs() < 1e-9);
        }
        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let one = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        for eps in [1e-6, 0.1, 0.9] {
            assert!(quantum_np_beta(&zero, &one, 3, eps).unwrap() < 1e-12);
        }
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((quantum_np_beta(&zero, &mixed, 1, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(quantum_np_beta(&zero, &mixed, 1, 2.0).is_err());
        let big = DensityMatrix::maximally_mixed(8);
        assert!(matches!(quantum_np_beta(&big, &big, 3, 0.1), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn quantum_commuting_is_classical() {
        let (p, q) = ([0.7, 0.2, 0.1], [0.3, 0.3, 0.4]);
        let (r, s) = (DensityMatrix::diagonal(&p).unwrap(), DensityMatrix::diagonal(&q).unwrap());
        for eps in [0.0, 0.1, 0.5] {
            let a = quantum_np_beta(&r, &s, 2, eps).unwrap();
            let b = classical_np_beta(&p, &q, 2, eps).unwrap();
            assert!((a - b).abs() < 1e-10, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn quantum_matches_dual() {
        let mut rng = seeded(5);
        for _ in 0..4 {
            let rho = random_full_rank_density(2, &mut rng);
            let sigma = random_density(2, &mut rng);
            let (r, s) = (density_power(&rho, 2).matrix().clone(), density_power(&sigma, 2).matrix().clone());
            for eps in [0.01, 0.2, 0.6] {
                let beta = np_beta_matrices(&r, &s, eps);
                let f = |u: f64| np_dual_value(&r, &s, eps, u.exp());
                let mut best = f64::NEG_INFINITY;
                let mut u_best = 0.0;
                for k in 0..=4000 {
                    let u = -20.0 + 40.0 * k as f64 / 4000.0;
                    let v = f(u);
                    if v > best {
                        best = v;
                        u_best = u;
                    }
                }
                let (_, v) = golden_max(f, u_best - 0.01, u_best + 0.01, 1e-12);
                best = best.max(v).max(0.0);
                assert!(best <= beta + 1e-10, "dual {best} above primal {beta}");
                assert!(beta - best < 1e-7, "gap {} at eps {eps}", beta - best);
            }
        }
    }

    #[test]
    fn errors_respect_trivial_caps() {
        let mut rng = seeded(6);
        for k in 0..20 {
            let eps = (k as f64 + 0.5) / 20.0;
            let p = random_probability(2, &mut rng);
            let q = random_probability(2, &mut rng);
            let b = classical_np_beta(&p, &q, 1, eps).unwrap();
            assert!((0.0..=(1.0 - eps).max(0.0) + 1e-12).contains(&b));
            let (r, s) = (random_density(2, &mut rng), random_density(2, &mut rng));
            let b = quantum_np_beta(&r, &s, 1, eps).unwrap();
            assert!((0.0..=(1.0 - eps).max(0.0) + 1e-12).contains(&b));
        }
    }

    #[test]
    fn achievability_inequalities() {
        let pbar = copy_cc(&[0.5, 0.5]);
        let rec = achievability_test(&pbar, 2, 0.2, 0.4, 0).unwrap();
        assert!(rec.type1_holds(1e-12), "{rec:?}");
        assert!(rec.type2_holds(1e-12), "{rec:?}");
        assert_eq!(rec.samples, 50);
        let mut rng = seeded(7);
        let rho = BipartiteState::new(random_full_rank_density(4, &mut rng), 2, 2).unwrap();
        let rec = achievability_test(&rho, 1, 0.1, 0.5, 1).unwrap();
        assert!(rec.type1 <= (-0.1f64).exp() + 1e-12);
        assert!(rec.type2_holds(1e-12));
        let prod = BipartiteState::product(&random_density(2, &mut rng), &random_density(2, &mut rng));
        let rec = achievability_test(&prod, 1, 0.1, 0.5, 2).unwrap();
        assert!(rec.type2_bound.is_finite() && rec.type2_holds(1e-12));
        assert!(achievability_test(&pbar, 3, 0.1, 0.5, 0).is_err());
        assert!(achievability_test(&pbar, 1, 0.1, 1.0, 0).is_err());
    }

    fn pbar_doubly_l(a: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        if a <= 0.5 {
            a / (1.0 - a) * ln2
        } else {
            ln2
        }
    }

    fn bell_doubly_l(a: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        if a <= 0.5 {
            2.0 * a / (1.0 - a) * ln2
        } else {
            ln2 / (1.0 - a)
        }
    }

    #[test]
    fn reverse_formula_matches_dense_grid() {
        let curve = curve_from(pbar_doubly_l, grid(0.0, 1.0), Variant::Doubly, CurveMeasure::Prli);
        let q = ExponentQuery {
            family: Variant::Doubly,
            rate: 0.1,
            curve,
            thresholds: Some(ThresholdPair { r_half: std::f64::consts::LN_2, r_half_l: 0.0, derivative_step: 0.0 }),
            tumula: Some(std::f64::consts::LN_2),
        };
        let f = |s: f64| pbar_doubly_l(s);
        let v = reverse_direct_formula(&q, Some(&f)).unwrap();
        let brute = (1..=5000)
            .map(|k| k as f64 * 1e-4)
            .map(|s| (1.0 - s) / s * (pbar_doubly_l(s) - 0.1))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((v.value - brute).abs() < 1e-6, "{} vs {brute}", v.value);
        assert!(!v.valid);
        assert_eq!(v.s_range, (0.0, 0.5));
        let above = ExponentQuery { rate: 0.8, ..q.clone() };
        let v = reverse_direct_formula(&above, Some(&f)).unwrap();
        assert!(v.valid && v.value <= 0.0 && v.exponent == 0.0);
    }

    #[test]
    fn formulas_vanish_on_product_curves() {
        for (measure, kind) in [(CurveMeasure::Prli, FormulaKind::Reverse), (CurveMeasure::Prmi, FormulaKind::Direct)] {
            for family in [Variant::Non, Variant::Singly, Variant::Doubly] {
                let curve = curve_from(|_| 0.0, grid(0.0, 1.0), family, measure);
                let q = ExponentQuery { family, rate: 0.3, curve, thresholds: None, tumula: Some(0.0) };
                let v = match kind {
                    FormulaKind::Reverse => reverse_direct_formula(&q, None).unwrap(),
                    FormulaKind::Direct => direct_formula(&q, None).unwrap(),
                };
                assert!(v.exponent.abs() < 1e-12 && v.value <= 1e-12, "{family:?} {kind:?}: {v:?}");
            }
        }
    }

    #[test]
    fn query_validation() {
        let curve = curve_from(|_| 0.0, grid(0.0, 1.0), Variant::Singly, CurveMeasure::Prli);
        let q = ExponentQuery { family: Variant::Singly, rate: 0.0, curve: curve.clone(), thresholds: None, tumula: None };
        assert!(reverse_direct_formula(&q, None).is_err());
        let q = ExponentQuery { rate: 0.1, ..q };
        assert!(direct_formula(&q, None).is_err());
        let q = ExponentQuery { family: Variant::Doubly, ..q };
        assert!(reverse_direct_formula(&q, None).is_err());
        let sparse = AlphaCurve { alphas: vec![0.1, 0.5, 0.9], values: vec![0.0; 3], variant: Variant::Singly, measure: CurveMeasure::Prli };
        let q = ExponentQuery { family: Variant::Singly, rate: 0.1, curve: sparse, thresholds: None, tumula: None };
        assert!(reverse_direct_formula(&q, None).is_err());
    }

    #[test]
    fn direct_formula_is_the_rescaled_lautum_sup() {
        let ln2 = std::f64::consts::LN_2;
        let i_of = |s: f64| s / (1.0 - s) * bell_doubly_l(1.0 - s);
        let curve = curve_from(i_of, grid(0.0, 1.0), Variant::Doubly, CurveMeasure::Prmi);
        let th = ThresholdPair { r_half: 2.0 * ln2, r_half_l: 0.0, derivative_step: 0.0 };
        let q = ExponentQuery { family: Variant::Doubly, rate: 0.5, curve, thresholds: Some(th), tumula: None };
        let v = direct_formula(&q, Some(&i_of)).unwrap();
        // (1-s)/s (I_s - R) = L_(1-s) - (1-s)/s R
        let oracle = (5000..10000)
            .map(|k| k as f64 * 1e-4)
            .map(|s| bell_doubly_l(1.0 - s) - (1.0 - s) / s * 0.5)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((v.value - oracle).abs() < 1e-6, "{} vs {oracle}", v.value);
        assert!(v.value > 0.0 && v.value.is_finite() && !v.valid);
        let q = ExponentQuery { rate: 2.0, ..q };
        assert!(direct_formula(&q, Some(&i_of)).unwrap().valid);
    }

    #[test]
    fn sup_over_half_range_when_below_threshold() {
        let psi = [Complex64::new(0.8f64.sqrt(), 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.2f64.sqrt(), 0.0)];
        let state = BipartiteState::new(DensityMatrix::pure(&psi).unwrap(), 2, 2).unwrap();
        let opts = SolverOptions { restarts: 2, ..SolverOptions::default() };
        let curve = alpha_sweep(&state, Variant::Doubly, &grid(0.0, 1.0), &opts).unwrap();
        let r_half_l = -(0.8f64).ln();
        let f = |s: f64| prli(&state, Variant::Doubly, s, &opts).map(|r| r.value.value()).unwrap_or(f64::NAN);
        for rate in [0.05, 0.15] {
            assert!(rate < r_half_l);
            let full = formula_sup(&curve, rate, 0.0, 1.0, Some(&f)).unwrap().0;
            let half = formula_sup(&curve, rate, 0.0, 0.5, Some(&f)).unwrap().0;
            assert!((full - half).abs() < 1e-8, "rate {rate}: {full} vs {half}");
        }
    }

    #[test]
    fn empirical_examples() {
        let c = 0.37;
        let pts: Vec<(usize, f64)> = (4..=12).map(|n| (n, (-c * n as f64).exp())).collect();
        let e = empirical_exponent(&pts).unwrap();
        assert!(e.slopes.iter().all(|s| (s - c).abs() < 1e-12));
        assert!((e.extrapolated.unwrap() - c).abs() < 1e-9);
        let pts: Vec<(usize, f64)> = (4..=12).map(|n| (n, n as f64 * (-c * n as f64).exp())).collect();
        assert!((empirical_exponent(&pts).unwrap().extrapolated.unwrap() - c).abs() < 0.05);
        assert!(empirical_exponent(&[(4, 0.1)]).is_err());
        let e = empirical_exponent(&[(1, 0.5), (2, 0.0), (3, 0.1)]).unwrap();
        assert_eq!(e.slopes[1], f64::INFINITY);
        assert!(e.extrapolated.is_none());
    }

    #[test]
    fn sanov_examples() {
        let opts = SolverOptions { restarts: 2, ..SolverOptions::default() };
        let mut rng = seeded(8);
        let prod = BipartiteState::product(&random_full_rank_density(2, &mut rng), &random_full_rank_density(2, &mut rng));
        let b = sanov_bounds(&prod, 0.01, 2, &opts).unwrap();
        assert!(b.upper_from_simple_alt < 0.01 && b.lower_from_achievability == 0.0, "{b:?}");
        let pbar = copy_cc(&[0.5, 0.5]);
        let lo = sanov_bounds(&pbar, 0.01, 2, &opts).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(lo.lower_from_achievability - lo.slack <= ln2 && ln2 <= lo.upper_from_simple_alt + lo.slack);
        let hi = sanov_bounds(&pbar, 0.99, 2, &opts).unwrap();
        assert!(hi.upper_from_simple_alt >= lo.upper_from_simple_alt);
    }

    #[test]
    fn zero_rate_examples() {
        let curve = curve_from(|_| 0.0, grid(0.0, 1.0), Variant::Singly, CurveMeasure::Prli);
        assert!(zero_rate_limit(&curve, FormulaKind::Reverse, None, None).unwrap().value.abs() < 1e-9);
        let pbar = curve_from(pbar_doubly_l, grid(0.0, 1.0), Variant::Doubly, CurveMeasure::Prli);
        let th = ThresholdPair { r_half: std::f64::consts::LN_2, r_half_l: 0.0, derivative_step: 0.0 };
        let z = zero_rate_limit(&pbar, FormulaKind::Reverse, Some(th), None).unwrap();
        assert!(!z.valid && z.target == "I");
        let state = classical_state(&[0.4, 0.1, 0.1, 0.4], 2, 2).unwrap();
        let opts = SolverOptions::default();
        let curve = alpha_sweep(&state, Variant::Singly, &grid(0.0, 1.0), &opts).unwrap();
        let f = |s: f64| prli(&state, Variant::Singly, s, &opts).map(|r| r.value.value()).unwrap_or(f64::NAN);
        let z = zero_rate_limit(&curve, FormulaKind::Reverse, None, Some(&f)).unwrap();
        let i = mutual_information(&state);
        assert!(z.valid && (z.value - i).abs() < 2e-2, "{} vs {i}", z.value);
        assert!(zero_rate_limit(&curve, FormulaKind::Direct, None, None).is_err());
        let icurve = prmi_sweep(&state, Variant::Singly, &grid(0.0, 1.0), &opts).unwrap();
        assert_eq!(zero_rate_limit(&icurve, FormulaKind::Direct, None, None).unwrap().target, "U");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn beta_is_monotone_in_budget(seed in 0u64..1000, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
            let mut rng = seeded(seed);
            let p = random_probability(3, &mut rng);
            let q = random_probability(3, &mut rng);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(classical_np_beta(&p, &q, 3, hi).unwrap() <= classical_np_beta(&p, &q, 3, lo).unwrap() + 1e-12);
            let r = random_pure_state(2, &mut rng);
            let s = random_density(2, &mut rng);
            prop_assert!(quantum_np_beta(&r, &s, 2, hi).unwrap() <= quantum_np_beta(&r, &s, 2, lo).unwrap() + 1e-9);
        }

        #[test]
        fn achievability_holds_on_random_states(seed in 0u64..1000, s in 0.05f64..0.95, rate in 0.01f64..1.0) {
            let mut rng = seeded(seed);
            let rho = BipartiteState::new(random_density(4, &mut rng), 2, 2).unwrap();
            let rec = achievability_core(&rho, 1, rate, s, 8, seed).unwrap();
            prop_assert!(rec.type1_holds(1e-12) && rec.type2_holds(1e-12), "{:?}", rec);
        }
    }
}
