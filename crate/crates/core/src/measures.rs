//! Correlation measures of bipartite states.
//!
//! | symbol | definition |
//! |---|---|
//! | `I` | `H(A) + H(B) - H(AB)` |
//! | `L` (lautum) | `D(rho_A (x) rho_B || rho_AB)` |
//! | `U` (umlaut) | `inf_tau D(rho_A (x) tau || rho_AB)` |
//! | `T` (tumula) | `inf_{sigma,tau} D(sigma (x) tau || rho_AB)` |
//! | `L_alpha` non / singly / doubly | `D_alpha(. || rho_AB)` against `rho_A (x) rho_B`, `rho_A (x) tau`, `sigma (x) tau` |
//! | `I_alpha` non / singly / doubly | `D_alpha(rho_AB || .)` against the same product families |
//!
//! The minimised families are computed by alternating exact partial
//! minimisation. For `alpha < 1` the partial minimiser over `tau` for fixed
//! `sigma` is `(Tr_A[sigma^alpha rho^(1-alpha)])^(1/(1-alpha))`, normalised;
//! for `alpha = 1` it is the Gibbs state `exp(Tr_A[sigma log rho]) / Z`
//! restricted to the directions compatible with the support of `rho`.
//! Each half step cannot increase the objective. Every start is run to a
//! fixed point and the best one is reported.

use crate::divergence::{petz_divergence, quantum_relative_entropy, von_neumann_entropy, ExtendedReal, InfinityReason};
use crate::error::{Error, Result};
use crate::operator::{
    contract_a, contract_b, eigh_unchecked, trace_product_re, trace_re, universal_symmetric_state, BipartiteState,
    CMatrix, DensityMatrix, HermitianOperator,
};
use crate::random::{random_density, seeded};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Non,
    Singly,
    Doubly,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non" => Ok(Variant::Non),
            "singly" => Ok(Variant::Singly),
            "doubly" => Ok(Variant::Doubly),
            other => Err(Error::InvalidInput(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once both the objective and the iterates move by at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Random starts on top of the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, restarts: 16, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureResult {
    pub value: ExtendedReal,
    #[serde(rename = "sigma")]
    pub optimizer_sigma: Option<DensityMatrix>,
    #[serde(rename = "tau")]
    pub optimizer_tau: Option<DensityMatrix>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Set when no global-optimality guarantee is available.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub heuristic: bool,
}

impl MeasureResult {
    fn closed_form(value: ExtendedReal, sigma: Option<DensityMatrix>, tau: Option<DensityMatrix>) -> Self {
        Self { value, optimizer_sigma: sigma, optimizer_tau: tau, iterations: 0, converged: true, restarts_used: 0, heuristic: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaCurve {
    pub alphas: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_vec_f64_or_inf")]
    pub values: Vec<f64>,
    pub variant: Variant,
    pub measure: CurveMeasure,
}

/// Which family an [`AlphaCurve`] samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMeasure {
    /// `alpha -> L_alpha`.
    Prli,
    /// `alpha -> I_alpha`.
    Prmi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdPair {
    pub r_half: f64,
    #[serde(rename = "r_half_L")]
    pub r_half_l: f64,
    pub derivative_step: f64,
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("order {alpha} outside (0, 1)")));
    }
    Ok(())
}

fn check_alpha_prli(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("order {alpha} outside (0, 1]")));
    }
    Ok(())
}

pub fn mutual_information(state: &BipartiteState) -> f64 {
    von_neumann_entropy(&state.marginal_a()) + von_neumann_entropy(&state.marginal_b()) - von_neumann_entropy(&state.rho)
}

pub fn lautum_information(state: &BipartiteState) -> Result<MeasureResult> {
    let (a, b) = (state.marginal_a(), state.marginal_b());
    let prod = a.tensor(&b);
    let value = quantum_relative_entropy(prod.operator(), state.rho.operator())?;
    Ok(MeasureResult::closed_form(value, Some(a), Some(b)))
}

fn power_on_support(m: &CMatrix, p: f64) -> CMatrix {
    eigh_unchecked(m).compose_on_support(|l| l.powf(p))
}

fn normalized(m: CMatrix) -> Option<CMatrix> {
    let tr = trace_re(&m);
    if !(tr > 0.0) || !tr.is_finite() {
        return None;
    }
    Some(m.unscale(tr))
}

/// Gibbs state `exp(X) / Z` on the kernel of `penalty` (all of the space if
/// `penalty` is absent); `None` when that kernel is trivial.
pub(crate) fn gibbs_restricted(x: &CMatrix, penalty: Option<&CMatrix>) -> Option<CMatrix> {
    gibbs_with_log_partition(x, penalty).map(|(g, _)| g)
}

/// As [`gibbs_restricted`], also returning `log Z`.
pub(crate) fn gibbs_with_log_partition(x: &CMatrix, penalty: Option<&CMatrix>) -> Option<(CMatrix, f64)> {
    let n = x.nrows();
    let basis = match penalty {
        None => None,
        Some(p) => {
            let e = eigh_unchecked(p);
            let tol = 1e-9 * e.max().max(1.0);
            let cols: Vec<usize> = (0..n).filter(|&k| e.values[k] <= tol).collect();
            if cols.is_empty() {
                return None;
            }
            if cols.len() == n {
                None
            } else {
                Some(e.vectors.select_columns(&cols))
            }
        }
    };
    let (v, xk) = match basis {
        None => (None, x.clone()),
        Some(v) => {
            let xk = v.adjoint() * x * &v;
            (Some(v), xk)
        }
    };
    let e = eigh_unchecked(&xk);
    let top = e.max();
    let g = e.compose(|l| (l - top).exp());
    let z = trace_re(&g);
    let g = match v {
        None => g,
        Some(v) => &v * g * v.adjoint(),
    };
    Some((normalized(g)?, top + z.ln()))
}

fn xlogx(m: &CMatrix) -> f64 {
    let e = eigh_unchecked(m);
    let cut = e.cutoff();
    e.values.iter().filter(|&&l| l > cut).map(|&l| l * l.ln()).sum()
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

enum Kernel {
    Gibbs { log_rho: CMatrix, perp: Option<CMatrix> },
    Sibson { alpha: f64, rho_pow: CMatrix },
}

/// Partial minimisers and objective of `(sigma, tau) -> D_alpha(sigma (x) tau || rho)`.
struct Alternation {
    da: usize,
    db: usize,
    kernel: Kernel,
}

struct Run {
    sigma: CMatrix,
    tau: CMatrix,
    value: f64,
    iterations: usize,
    converged: bool,
}

impl Alternation {
    fn new(state: &BipartiteState, alpha: f64) -> Self {
        let e = state.rho.eigh();
        let kernel = if alpha == 1.0 {
            let log_rho = e.compose_on_support(f64::ln);
            let perp = if e.rank() < e.values.len() { Some(e.kernel_projector()) } else { None };
            Kernel::Gibbs { log_rho, perp }
        } else {
            Kernel::Sibson { alpha, rho_pow: e.compose_on_support(|l| l.powf(1.0 - alpha)) }
        };
        Self { da: state.da, db: state.db, kernel }
    }

    fn tau_from_sigma(&self, sigma: &CMatrix) -> Option<CMatrix> {
        match &self.kernel {
            Kernel::Gibbs { log_rho, perp } => {
                let x = contract_a(sigma, log_rho, self.da, self.db);
                let p = perp.as_ref().map(|p| contract_a(sigma, p, self.da, self.db));
                gibbs_restricted(&x, p.as_ref())
            }
            Kernel::Sibson { alpha, rho_pow } => {
                let s = power_on_support(sigma, *alpha);
                let m = contract_a(&s, rho_pow, self.da, self.db);
                normalized(power_on_support(&m, 1.0 / (1.0 - alpha)))
            }
        }
    }

    fn sigma_from_tau(&self, tau: &CMatrix) -> Option<CMatrix> {
        match &self.kernel {
            Kernel::Gibbs { log_rho, perp } => {
                let x = contract_b(tau, log_rho, self.da, self.db);
                let p = perp.as_ref().map(|p| contract_b(tau, p, self.da, self.db));
                gibbs_restricted(&x, p.as_ref())
            }
            Kernel::Sibson { alpha, rho_pow } => {
                let t = power_on_support(tau, *alpha);
                let m = contract_b(&t, rho_pow, self.da, self.db);
                normalized(power_on_support(&m, 1.0 / (1.0 - alpha)))
            }
        }
    }

    fn objective(&self, sigma: &CMatrix, tau: &CMatrix) -> f64 {
        match &self.kernel {
            Kernel::Gibbs { log_rho, perp } => {
                if let Some(p) = perp {
                    let leak = trace_product_re(tau, &contract_a(sigma, p, self.da, self.db));
                    if leak > 1e-10 {
                        return f64::INFINITY;
                    }
                }
                let cross = trace_product_re(tau, &contract_a(sigma, log_rho, self.da, self.db));
                xlogx(sigma) + xlogx(tau) - cross
            }
            Kernel::Sibson { alpha, rho_pow } => {
                let s = power_on_support(sigma, *alpha);
                let t = power_on_support(tau, *alpha);
                let q = trace_product_re(&t, &contract_a(&s, rho_pow, self.da, self.db));
                if q > 0.0 {
                    q.ln() / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn run(&self, sigma0: &CMatrix, tol: f64, max_iter: usize) -> Option<Run> {
        let mut sigma = sigma0.clone();
        let mut tau = self.tau_from_sigma(&sigma)?;
        let mut value = self.objective(&sigma, &tau);
        if !value.is_finite() {
            return None;
        }
        for it in 1..=max_iter {
            let s2 = self.sigma_from_tau(&tau)?;
            let t2 = self.tau_from_sigma(&s2)?;
            let v2 = self.objective(&s2, &t2);
            let step = max_abs_diff(&s2, &sigma).max(max_abs_diff(&t2, &tau));
            let dv = (value - v2).abs();
            sigma = s2;
            tau = t2;
            value = v2;
            if dv <= tol && step <= tol {
                return Some(Run { sigma, tau, value, iterations: it, converged: true });
            }
        }
        Some(Run { sigma, tau, value, iterations: max_iter, converged: false })
    }
}

fn pure_projector(v: &nalgebra::DVector<Complex64>) -> CMatrix {
    let n = v.norm();
    let v = v.unscale(n);
    &v * v.adjoint()
}

/// Deterministic starts followed by `restarts` random ones.
fn starting_points(state: &BipartiteState, opts: &SolverOptions, extra: &[CMatrix]) -> Vec<CMatrix> {
    let rho_a = state.marginal_a();
    let mut starts = vec![DensityMatrix::maximally_mixed(state.da).matrix().clone(), rho_a.matrix().clone()];
    starts.extend(extra.iter().cloned());
    let e = rho_a.eigh();
    for k in (0..state.da).rev() {
        starts.push(pure_projector(&e.vectors.column(k).into_owned()));
    }
    let mut rng = seeded(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(random_density(state.da, &mut rng).matrix().clone());
    }
    starts
}

fn solve_doubly(state: &BipartiteState, alpha: f64, opts: &SolverOptions, extra: &[CMatrix]) -> Result<MeasureResult> {
    let alt = Alternation::new(state, alpha);
    let starts = starting_points(state, opts, extra);
    let runs: Vec<Option<Run>> = starts.par_iter().map(|s| alt.run(s, opts.tol, opts.max_iter)).collect();
    let mut best: Option<Run> = None;
    for run in runs.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| run.value < b.value - 1e-13) {
            best = Some(run);
        }
    }
    let restarts_used = starts.len();
    let heuristic = alpha >= 0.5;
    let Some(run) = best else {
        return Ok(MeasureResult {
            value: ExtendedReal::Infinite(InfinityReason::SupportViolation),
            optimizer_sigma: None,
            optimizer_tau: None,
            iterations: 0,
            converged: false,
            restarts_used,
            heuristic,
        });
    };
    let sigma = DensityMatrix::from_psd(run.sigma);
    let tau = DensityMatrix::from_psd(run.tau);
    let value = petz_divergence(alpha, sigma.tensor(&tau).operator(), state.rho.operator())?;
    Ok(MeasureResult {
        value,
        optimizer_sigma: Some(sigma),
        optimizer_tau: Some(tau),
        iterations: run.iterations,
        converged: run.converged,
        restarts_used,
        heuristic,
    })
}

/// Exact minimiser of `tau -> D_alpha(sigma (x) tau || rho)` for `alpha` in
/// `(0, 1]`; `None` if every `tau` gives an infinite value.
pub fn partial_minimizer_tau(state: &BipartiteState, alpha: f64, sigma: &DensityMatrix) -> Result<Option<DensityMatrix>> {
    check_alpha_prli(alpha)?;
    Ok(Alternation::new(state, alpha).tau_from_sigma(sigma.matrix()).map(DensityMatrix::from_psd))
}

/// Exact minimiser of `sigma -> D_alpha(sigma (x) tau || rho)`.
pub fn partial_minimizer_sigma(state: &BipartiteState, alpha: f64, tau: &DensityMatrix) -> Result<Option<DensityMatrix>> {
    check_alpha_prli(alpha)?;
    Ok(Alternation::new(state, alpha).sigma_from_tau(tau.matrix()).map(DensityMatrix::from_psd))
}

/// Largest entrywise change of `(sigma, tau)` under one more sweep.
pub fn fixed_point_residual(state: &BipartiteState, alpha: f64, sigma: &DensityMatrix, tau: &DensityMatrix) -> Result<f64> {
    check_alpha_prli(alpha)?;
    let alt = Alternation::new(state, alpha);
    let s2 = alt.sigma_from_tau(tau.matrix()).ok_or_else(|| Error::Consistency("infeasible sweep".into()))?;
    let t2 = alt.tau_from_sigma(&s2).ok_or_else(|| Error::Consistency("infeasible sweep".into()))?;
    Ok(max_abs_diff(&s2, sigma.matrix()).max(max_abs_diff(&t2, tau.matrix())))
}

pub fn umlaut_information(state: &BipartiteState) -> Result<MeasureResult> {
    let rho_a = state.marginal_a();
    match partial_minimizer_tau(state, 1.0, &rho_a)? {
        None => Ok(MeasureResult::closed_form(ExtendedReal::Infinite(InfinityReason::SupportViolation), Some(rho_a), None)),
        Some(tau) => {
            let value = quantum_relative_entropy(rho_a.tensor(&tau).operator(), state.rho.operator())?;
            Ok(MeasureResult::closed_form(value, Some(rho_a), Some(tau)))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub finite: bool,
    /// Best `<a b| Pi_rho |a b>` found.
    pub overlap: f64,
    /// Product vectors (as pure states) reaching the overlap threshold.
    #[serde(skip)]
    pub witnesses: Vec<(DensityMatrix, DensityMatrix)>,
}

fn top_vector(m: &CMatrix) -> nalgebra::DVector<Complex64> {
    let e = eigh_unchecked(m);
    e.vectors.column(e.values.len() - 1).into_owned()
}

/// Searches for a product vector inside the support of `rho` by alternating
/// power iteration from the computational basis and 32 random starts. The
/// tumula information is finite exactly when such a vector exists.
pub fn tumula_finiteness_probe(state: &BipartiteState, seed: u64) -> ProbeResult {
    let e = state.rho.eigh();
    if e.rank() == e.values.len() {
        let a = DensityMatrix::maximally_mixed(state.da);
        let b = DensityMatrix::maximally_mixed(state.db);
        return ProbeResult { finite: true, overlap: 1.0, witnesses: vec![(a, b)] };
    }
    let proj = e.support_projector();
    let (da, db) = (state.da, state.db);
    let mut rng = seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut inits: Vec<nalgebra::DVector<Complex64>> = (0..da)
        .map(|i| nalgebra::DVector::from_fn(da, |k, _| Complex64::new(if k == i { 1.0 } else { 0.0 }, 0.0)))
        .collect();
    for _ in 0..32 {
        inits.push(nalgebra::DVector::from_fn(da, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        }));
    }
    let mut best = 0.0f64;
    let mut witnesses = Vec::new();
    for a0 in inits {
        let mut a = pure_projector(&a0);
        let mut ov = 0.0;
        let mut b = CMatrix::zeros(db, db);
        for _ in 0..500 {
            b = pure_projector(&top_vector(&contract_a(&a, &proj, da, db)));
            a = pure_projector(&top_vector(&contract_b(&b, &proj, da, db)));
            let new = trace_product_re(&b, &contract_a(&a, &proj, da, db));
            let done = (new - ov).abs() < 1e-15;
            ov = new;
            if done {
                break;
            }
        }
        best = best.max(ov);
        if ov >= 1.0 - 1e-9 && witnesses.len() < 8 {
            witnesses.push((DensityMatrix::from_psd(a), DensityMatrix::from_psd(b)));
        }
    }
    ProbeResult { finite: best >= 1.0 - 1e-9, overlap: best, witnesses }
}

pub fn tumula_information(state: &BipartiteState, opts: &SolverOptions) -> Result<MeasureResult> {
    tumula_with_starts(state, opts, &[])
}

fn tumula_with_starts(state: &BipartiteState, opts: &SolverOptions, warm: &[CMatrix]) -> Result<MeasureResult> {
    let probe = tumula_finiteness_probe(state, opts.seed);
    if !probe.finite {
        return Ok(MeasureResult {
            value: ExtendedReal::Infinite(InfinityReason::SupportViolation),
            optimizer_sigma: None,
            optimizer_tau: None,
            iterations: 0,
            converged: true,
            restarts_used: 0,
            heuristic: false,
        });
    }
    let mut extra: Vec<CMatrix> = warm.to_vec();
    extra.extend(probe.witnesses.iter().map(|(a, _)| a.matrix().clone()));
    let mut res = solve_doubly(state, 1.0, opts, &extra)?;
    res.heuristic = true;
    Ok(res)
}

/// Petz Renyi lautum information `L_alpha` of the given variant, `alpha` in
/// `(0, 1]`. At `alpha = 1` the variants are `L`, `U` and `T`.
pub fn prli(state: &BipartiteState, variant: Variant, alpha: f64, opts: &SolverOptions) -> Result<MeasureResult> {
    prli_warm(state, variant, alpha, opts, None)
}

fn prli_warm(
    state: &BipartiteState,
    variant: Variant,
    alpha: f64,
    opts: &SolverOptions,
    warm: Option<&DensityMatrix>,
) -> Result<MeasureResult> {
    check_alpha_prli(alpha)?;
    let warm: Vec<CMatrix> = warm.map(|w| vec![w.matrix().clone()]).unwrap_or_default();
    match (variant, alpha == 1.0) {
        (Variant::Non, true) => lautum_information(state),
        (Variant::Singly, true) => umlaut_information(state),
        (Variant::Doubly, true) => tumula_with_starts(state, opts, &warm),
        (Variant::Non, false) => {
            let (a, b) = (state.marginal_a(), state.marginal_b());
            let value = petz_divergence(alpha, a.tensor(&b).operator(), state.rho.operator())?;
            Ok(MeasureResult::closed_form(value, Some(a), Some(b)))
        }
        (Variant::Singly, false) => {
            let rho_a = state.marginal_a();
            let tau = partial_minimizer_tau(state, alpha, &rho_a)?
                .ok_or_else(|| Error::Consistency("singly minimised update vanished".into()))?;
            let value = petz_divergence(alpha, rho_a.tensor(&tau).operator(), state.rho.operator())?;
            Ok(MeasureResult::closed_form(value, Some(rho_a), Some(tau)))
        }
        (Variant::Doubly, false) => solve_doubly(state, alpha, opts, &warm),
    }
}

/// Petz Renyi mutual information `I_alpha`, `alpha` in `(0, 1)`, obtained
/// from `I_alpha = alpha / (1 - alpha) * L_(1-alpha)` of the same variant.
pub fn prmi(state: &BipartiteState, variant: Variant, alpha: f64, opts: &SolverOptions) -> Result<MeasureResult> {
    check_alpha_open(alpha)?;
    let mut res = prli(state, variant, 1.0 - alpha, opts)?;
    res.value = res.value.map(|v| alpha / (1.0 - alpha) * v);
    Ok(res)
}

/// `I_beta` minimised directly over `D_beta(rho || sigma (x) tau)`, without
/// passing through the lautum side. The partial minimiser over `tau` is
/// `(Tr_A[rho^beta sigma^(1-beta)])^(1/beta)`, normalised.
pub fn prmi_direct(state: &BipartiteState, variant: Variant, beta: f64, opts: &SolverOptions) -> Result<MeasureResult> {
    check_alpha_open(beta)?;
    let (da, db) = (state.da, state.db);
    let rho_b = state.rho.eigh().compose_on_support(|l| l.powf(beta));
    let holder_tau = |sigma: &CMatrix| -> Option<CMatrix> {
        let n = contract_a(&power_on_support(sigma, 1.0 - beta), &rho_b, da, db);
        normalized(power_on_support(&n, 1.0 / beta))
    };
    let holder_sigma = |tau: &CMatrix| -> Option<CMatrix> {
        let n = contract_b(&power_on_support(tau, 1.0 - beta), &rho_b, da, db);
        normalized(power_on_support(&n, 1.0 / beta))
    };
    let value_at = |s: &CMatrix, t: &CMatrix| -> Result<ExtendedReal> {
        let prod = HermitianOperator::new(crate::operator::tensor_product(s, t))?;
        petz_divergence(beta, state.rho.operator(), &prod)
    };
    let rho_a = state.marginal_a();
    match variant {
        Variant::Non => {
            let rho_bm = state.marginal_b();
            let v = value_at(rho_a.matrix(), rho_bm.matrix())?;
            Ok(MeasureResult::closed_form(v, Some(rho_a), Some(rho_bm)))
        }
        Variant::Singly => {
            let tau = holder_tau(rho_a.matrix()).ok_or_else(|| Error::Consistency("vanishing update".into()))?;
            let v = value_at(rho_a.matrix(), &tau)?;
            Ok(MeasureResult::closed_form(v, Some(rho_a), Some(DensityMatrix::from_psd(tau))))
        }
        Variant::Doubly => {
            let mut starts = vec![DensityMatrix::maximally_mixed(da).matrix().clone(), rho_a.matrix().clone()];
            let mut rng = seeded(opts.seed.wrapping_add(1));
            for _ in 0..opts.restarts {
                starts.push(random_density(da, &mut rng).matrix().clone());
            }
            let mut best: Option<(f64, CMatrix, CMatrix, usize, bool)> = None;
            for s0 in &starts {
                let mut sigma = s0.clone();
                let Some(mut tau) = holder_tau(&sigma) else { continue };
                let mut val = value_at(&sigma, &tau)?.value();
                let mut out = (opts.max_iter, false);
                for it in 1..=opts.max_iter {
                    let Some(s2) = holder_sigma(&tau) else { break };
                    let Some(t2) = holder_tau(&s2) else { break };
                    let v2 = value_at(&s2, &t2)?.value();
                    let step = max_abs_diff(&s2, &sigma).max(max_abs_diff(&t2, &tau));
                    let dv = (val - v2).abs();
                    sigma = s2;
                    tau = t2;
                    val = v2;
                    if dv <= opts.tol && step <= opts.tol {
                        out = (it, true);
                        break;
                    }
                }
                if best.as_ref().map_or(true, |b| val < b.0 - 1e-13) {
                    best = Some((val, sigma, tau, out.0, out.1));
                }
            }
            let (_, s, t, iterations, converged) =
                best.ok_or_else(|| Error::Consistency("no feasible start".into()))?;
            let value = value_at(&s, &t)?;
            Ok(MeasureResult {
                value,
                optimizer_sigma: Some(DensityMatrix::from_psd(s)),
                optimizer_tau: Some(DensityMatrix::from_psd(t)),
                iterations,
                converged,
                restarts_used: starts.len(),
                heuristic: beta <= 0.5,
            })
        }
    }
}

/// `L_alpha` of one variant over a grid of orders, each point warm-started
/// from the previous optimiser.
pub fn alpha_sweep(state: &BipartiteState, variant: Variant, alphas: &[f64], opts: &SolverOptions) -> Result<AlphaCurve> {
    let mut values = Vec::with_capacity(alphas.len());
    let mut warm: Option<DensityMatrix> = None;
    for &a in alphas {
        let r = prli_warm(state, variant, a, opts, warm.as_ref())?;
        warm = r.optimizer_sigma.clone().or(warm);
        values.push(r.value.value());
    }
    Ok(AlphaCurve { alphas: alphas.to_vec(), values, variant, measure: CurveMeasure::Prli })
}

/// `I_alpha` over a grid of orders in `(0, 1)`, from an `L` sweep at the
/// mirrored orders.
pub fn prmi_sweep(state: &BipartiteState, variant: Variant, alphas: &[f64], opts: &SolverOptions) -> Result<AlphaCurve> {
    for &a in alphas {
        check_alpha_open(a)?;
    }
    let mirrored: Vec<f64> = alphas.iter().rev().map(|a| 1.0 - a).collect();
    let l = alpha_sweep(state, variant, &mirrored, opts)?;
    let values = alphas
        .iter()
        .zip(l.values.iter().rev())
        .map(|(&a, &v)| a / (1.0 - a) * v)
        .collect();
    Ok(AlphaCurve { alphas: alphas.to_vec(), values, variant, measure: CurveMeasure::Prmi })
}

/// Step used for the one-sided derivatives at `s = 1/2`.
pub const THRESHOLD_STEP: f64 = 1e-4;

/// `R_1/2 = I_1/2 - (1/4) d+/ds I_s` and `R^L_1/2 = L_1/2 - (1/4) d-/ds L_s`
/// for the doubly minimised family, by one-sided differences with one
/// Richardson level.
pub fn thresholds(state: &BipartiteState, opts: &SolverOptions) -> Result<ThresholdPair> {
    let h = THRESHOLD_STEP;
    let tight = SolverOptions { tol: opts.tol.min(1e-13), ..opts.clone() };
    let l = |s: f64| -> Result<f64> { Ok(prli(state, Variant::Doubly, s, &tight)?.value.value()) };
    let i = |s: f64| -> Result<f64> { Ok(prmi(state, Variant::Doubly, s, &tight)?.value.value()) };
    let l0 = l(0.5)?;
    let d_h = (l0 - l(0.5 - h)?) / h;
    let d_h2 = (l0 - l(0.5 - h / 2.0)?) / (h / 2.0);
    let left = 2.0 * d_h2 - d_h;
    let i0 = i(0.5)?;
    let e_h = (i(0.5 + h)? - i0) / h;
    let e_h2 = (i(0.5 + h / 2.0)? - i0) / (h / 2.0);
    let right = 2.0 * e_h2 - e_h;
    Ok(ThresholdPair { r_half: i0 - right / 4.0, r_half_l: l0 - left / 4.0, derivative_step: h })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    /// Pure bipartite state; the spectrum is that of `rho_A`.
    Pure,
    /// `sum_x p(x) |xx><xx|`; the spectrum is `p`.
    CopyCc,
}

/// Closed forms for the two thresholds in terms of the largest eigenvalue
/// `p_max` of `rho_A` and its multiplicity `m`.
pub fn closed_form_thresholds(kind: ClosedFormKind, spectrum: &[f64]) -> Result<ThresholdPair> {
    if spectrum.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    let pmax = spectrum.iter().cloned().fold(f64::MIN, f64::max);
    let m = spectrum.iter().filter(|&&p| (p - pmax).abs() <= 1e-12).count() as f64;
    let r_half_l = -(m * pmax).ln();
    let r_half = match kind {
        ClosedFormKind::Pure => -(pmax / m).ln(),
        ClosedFormKind::CopyCc => m.ln(),
    };
    Ok(ThresholdPair { r_half, r_half_l, derivative_step: 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct UniversalPoint {
    pub n: usize,
    /// `(1/sqrt n) D_(1/sqrt n)(rho^n || omega_A^n (x) omega_B^n)`.
    pub value: f64,
    /// Lower and upper bounds on `L_(1 - 1/sqrt n)` (hence `lower <= T`).
    pub lower: f64,
    pub upper: f64,
    pub g_a: u64,
    pub g_b: u64,
}

/// Universal-state prelimit sequence for two-qubit states, `n <= 3`.
pub fn universal_state_sequence(state: &BipartiteState, n_max: usize) -> Result<Vec<UniversalPoint>> {
    if n_max > 3 {
        return Err(Error::ResourceGuard(format!("n_max = {n_max} exceeds 3")));
    }
    if state.da != 2 || state.db != 2 {
        return Err(Error::InvalidInput("universal-state sequence is implemented for two qubits".into()));
    }
    let mut out = Vec::new();
    for n in 1..=n_max {
        let ua = universal_symmetric_state(n, state.da)?;
        let ub = universal_symmetric_state(n, state.db)?;
        let eps = 1.0 / (n as f64).sqrt();
        let rho_n = state.tensor_power(n);
        let ww = ua.omega.tensor(&ub.omega);
        let d = petz_divergence(eps, rho_n.rho.operator(), ww.operator())?.value();
        let value = eps * d;
        let lg = ((ua.g * ub.g) as f64).ln();
        let lower = (1.0 - eps) * value - (1.0 - eps) * lg * eps;
        let upper = (1.0 - eps) * value + lg / n as f64;
        out.push(UniversalPoint { n, value, lower, upper, g_a: ua.g, g_b: ub.g });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_full_rank_density;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn bell() -> BipartiteState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [h, 0.0, 0.0, h].map(|x| Complex64::new(x, 0.0));
        BipartiteState::new(DensityMatrix::pure(&psi).unwrap(), 2, 2).unwrap()
    }

    fn copy_cc(p: &[f64]) -> BipartiteState {
        let k = p.len();
        let mut flat = vec![0.0; k * k];
        for (x, &px) in p.iter().enumerate() {
            flat[x * k + x] = px;
        }
        crate::operator::classical_state(&flat, k, k).unwrap()
    }

    fn random_state(seed: u64) -> BipartiteState {
        BipartiteState::new(random_full_rank_density(4, &mut seeded(seed)), 2, 2).unwrap()
    }

    fn fast() -> SolverOptions {
        SolverOptions { restarts: 4, ..SolverOptions::default() }
    }

    #[test]
    fn bell_state_values() {
        let b = bell();
        assert_relative_eq!(mutual_information(&b), 2.0 * LN2, epsilon = 1e-12);
        assert!(!lautum_information(&b).unwrap().value.is_finite());
        assert!(!umlaut_information(&b).unwrap().value.is_finite());
        let t = tumula_information(&b, &fast()).unwrap();
        assert!(!t.value.is_finite());
        assert!(!tumula_finiteness_probe(&b, 0).finite);
        for (a, want) in [(0.3, 2.0 * 0.3 / 0.7 * LN2), (0.5, 2.0 * LN2), (0.7, LN2 / 0.3)] {
            let v = prli(&b, Variant::Doubly, a, &fast()).unwrap().value.value();
            assert_relative_eq!(v, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn copy_cc_values() {
        let s = copy_cc(&[0.5, 0.5]);
        assert_relative_eq!(mutual_information(&s), LN2, epsilon = 1e-12);
        assert!(!lautum_information(&s).unwrap().value.is_finite());
        assert!(!umlaut_information(&s).unwrap().value.is_finite());
        let t = tumula_information(&s, &fast()).unwrap();
        assert_relative_eq!(t.value.value(), LN2, epsilon = 1e-8);
        for (a, want) in [(0.25, 0.25 / 0.75 * LN2), (0.5, LN2), (0.8, LN2)] {
            let v = prli(&s, Variant::Doubly, a, &fast()).unwrap().value.value();
            assert_relative_eq!(v, want, epsilon = 1e-7);
        }
    }

    #[test]
    fn product_state_is_uncorrelated() {
        let mut rng = seeded(3);
        let s = BipartiteState::product(&random_full_rank_density(2, &mut rng), &random_full_rank_density(3, &mut rng));
        assert!(mutual_information(&s).abs() < 1e-12);
        for v in [Variant::Non, Variant::Singly, Variant::Doubly] {
            for a in [0.3, 1.0] {
                assert!(prli(&s, v, a, &fast()).unwrap().value.value().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sibson_identity() {
        let s = random_state(11);
        let mut rng = seeded(12);
        let sigma = random_full_rank_density(2, &mut rng);
        let tau = random_full_rank_density(2, &mut rng);
        for alpha in [0.2, 0.5, 0.8] {
            let hat = partial_minimizer_tau(&s, alpha, &sigma).unwrap().unwrap();
            let lhs = petz_divergence(alpha, sigma.tensor(&tau).operator(), s.rho.operator()).unwrap().value();
            let opt = petz_divergence(alpha, sigma.tensor(&hat).operator(), s.rho.operator()).unwrap().value();
            let gap = petz_divergence(alpha, tau.operator(), hat.operator()).unwrap().value();
            assert_relative_eq!(lhs, opt + gap, epsilon = 1e-9);
        }
    }

    #[test]
    fn fixed_points_certify() {
        let s = random_state(21);
        for alpha in [0.3, 1.0] {
            let r = prli(&s, Variant::Doubly, alpha, &fast()).unwrap();
            assert!(r.converged);
            let res = fixed_point_residual(&s, alpha, r.optimizer_sigma.as_ref().unwrap(), r.optimizer_tau.as_ref().unwrap()).unwrap();
            assert!(res <= 1e-8, "residual {res} at alpha {alpha}");
        }
    }

    #[test]
    fn thresholds_match_closed_forms() {
        let b = thresholds(&bell(), &fast()).unwrap();
        let bc = closed_form_thresholds(ClosedFormKind::Pure, &[0.5, 0.5]).unwrap();
        assert!((b.r_half - bc.r_half).abs() < 1e-3 && (b.r_half_l - bc.r_half_l).abs() < 1e-3, "{b:?}");
        let c = thresholds(&copy_cc(&[0.5, 0.5]), &fast()).unwrap();
        let cc = closed_form_thresholds(ClosedFormKind::CopyCc, &[0.5, 0.5]).unwrap();
        assert!((c.r_half - cc.r_half).abs() < 1e-3 && (c.r_half_l - cc.r_half_l).abs() < 1e-3, "{c:?}");
    }

    #[test]
    fn closed_forms_by_hand() {
        let t = closed_form_thresholds(ClosedFormKind::Pure, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(t.r_half, 2.0 * LN2, epsilon = 1e-15);
        assert_relative_eq!(t.r_half_l, 0.0, epsilon = 1e-15);
        let t = closed_form_thresholds(ClosedFormKind::CopyCc, &[0.7, 0.3]).unwrap();
        assert_relative_eq!(t.r_half, 0.0, epsilon = 1e-15);
        assert_relative_eq!(t.r_half_l, -(0.7f64).ln(), epsilon = 1e-15);
    }

    #[test]
    fn near_one_approaches_tumula() {
        let s = random_state(31);
        let t = tumula_information(&s, &fast()).unwrap().value.value();
        let l = prli(&s, Variant::Doubly, 1.0 - 1e-3, &fast()).unwrap().value.value();
        assert!((l - t).abs() <= 5e-2, "{l} vs {t}");
    }

    #[test]
    fn direct_and_rescaled_mutual_information_agree() {
        let s = random_state(41);
        for beta in [0.6, 0.8] {
            let a = prmi(&s, Variant::Doubly, beta, &fast()).unwrap().value.value();
            let b = prmi_direct(&s, Variant::Doubly, beta, &fast()).unwrap().value.value();
            assert_relative_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn sweep_and_universal_sequence() {
        let c = alpha_sweep(&random_state(5), Variant::Singly, &[0.2, 0.4, 0.6], &fast()).unwrap();
        assert_eq!(c.values.len(), 3);
        let seq = universal_state_sequence(&copy_cc(&[0.5, 0.5]), 2).unwrap();
        assert_eq!(seq[1].g_a, 10);
        assert!(seq[1].lower - 1e-9 <= LN2 && LN2 <= seq[1].upper + 1e-9);
        assert!(universal_state_sequence(&bell(), 4).is_err());
    }

    #[test]
    fn order_domain() {
        let s = random_state(1);
        assert!(prli(&s, Variant::Non, 0.0, &fast()).is_err());
        assert!(prli(&s, Variant::Non, 1.5, &fast()).is_err());
        assert!(prmi(&s, Variant::Non, 1.0, &fast()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn variants_are_ordered(seed in 0u64..10_000, alpha in 0.1f64..1.0) {
            let s = random_state(seed);
            let v: Vec<f64> = [Variant::Doubly, Variant::Singly, Variant::Non]
                .iter()
                .map(|&v| prli(&s, v, alpha, &fast()).unwrap().value.value())
                .collect();
            prop_assert!(v[0] <= v[1] + 1e-9 && v[1] <= v[2] + 1e-9, "{v:?}");
        }

        #[test]
        fn swap_symmetric(seed in 0u64..10_000) {
            let s = random_state(seed);
            let a = prli(&s, Variant::Doubly, 0.4, &fast()).unwrap().value.value();
            let b = prli(&s.swap(), Variant::Doubly, 0.4, &fast()).unwrap().value.value();
            prop_assert!((a - b).abs() <= 1e-8);
        }

        #[test]
        fn additive_on_products(seed in 0u64..10_000) {
            let (s1, s2) = (random_state(seed), random_state(seed + 7));
            let joint = s1.tensor(&s2);
            for alpha in [0.25, 1.0] {
                let a = prli(&joint, Variant::Doubly, alpha, &fast()).unwrap().value.value();
                let b = prli(&s1, Variant::Doubly, alpha, &fast()).unwrap().value.value()
                    + prli(&s2, Variant::Doubly, alpha, &fast()).unwrap().value.value();
                prop_assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
            }
        }

        #[test]
        fn tumula_below_mutual_information_bound(seed in 0u64..10_000) {
            let s = random_state(seed);
            let t = tumula_information(&s, &fast()).unwrap().value.value();
            prop_assert!(t >= -1e-10 && t <= 2.0f64.ln() + 1e-9);
        }
    }
}
