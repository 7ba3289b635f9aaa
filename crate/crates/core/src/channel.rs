//! Umlaut, tumula and lautum informations of channels.
//!
//! For a classical channel `W` the tumula information is
//! `sup_P min_Q [D(Q||P) - log Z(Q)]` with `Z(Q) = sum_y exp(sum_x Q(x) log W(y|x))`,
//! and equivalently `sup_P min_R -log sum_x P(x) exp(-D(R||W(.|x)))`.
//! Both forms are evaluated and must agree. The umlaut information is
//! `sup_P -log Z(P)`. CQ channels replace `Z` by `Tr exp(sum_x Q(x) log rho_x)`.
//!
//! The outer supremum is a simplex grid (step 0.005 for up to three inputs,
//! 0.02 for four) followed by Nelder-Mead refinement; results are marked
//! `certified` only when the grid was exhaustive.

use crate::classical::{gibbs_vec, JointDistribution};
use crate::divergence::{quantum_relative_entropy, ExtendedReal, InfinityReason};
use crate::error::{Error, Result};
use crate::io::matrix_from_value;
use crate::measures::{gibbs_with_log_partition, tumula_information, SolverOptions};
use crate::operator::{
    eigh_unchecked, partial_trace, tensor_product, trace_product_re, BipartiteState, CMatrix, DensityMatrix,
    HermitianOperator,
};
use crate::optimize::{nelder_mead, nelder_mead_simplex, simplex_grid, NmOptions};
use crate::random::{random_density, random_probability, seeded};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalChannel {
    pub nx: usize,
    pub ny: usize,
    /// Row-major `w[x * ny + y] = W(y|x)`.
    pub w: Vec<f64>,
}

impl ClassicalChannel {
    pub fn new(nx: usize, ny: usize, w: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || w.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!("{} entries for a {}x{} channel", w.len(), nx, ny)));
        }
        if w.iter().any(|&v| !v.is_finite() || v < -1e-12) {
            return Err(Error::InvalidInput("channel has a negative or non-finite entry".into()));
        }
        for x in 0..nx {
            let s: f64 = w[x * ny..(x + 1) * ny].iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!("row {x} sums to {s}")));
            }
        }
        let w = w.into_iter().map(|v| if v < 1e-300 { 0.0 } else { v }).collect();
        Ok(Self { nx, ny, w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("ragged channel matrix".into()));
        }
        Self::new(rows.len(), ny, rows.concat())
    }

    pub fn identity(k: usize) -> Self {
        Self { nx: k, ny: k, w: (0..k * k).map(|i| if i / k == i % k { 1.0 } else { 0.0 }).collect() }
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Domain(format!("crossover probability {eps} outside [0, 1]")));
        }
        Self::new(2, 2, vec![1.0 - eps, eps, eps, 1.0 - eps])
    }

    /// Every input mapped to the same output distribution.
    pub fn constant(nx: usize, out: &[f64]) -> Result<Self> {
        Self::new(nx, out.len(), (0..nx).flat_map(|_| out.iter().copied()).collect())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.ny + y]
    }

    /// Parallel use `W1 x W2` with inputs `(x1, x2)` and outputs `(y1, y2)`.
    pub fn product(&self, other: &Self) -> Self {
        let (nx, ny) = (self.nx * other.nx, self.ny * other.ny);
        let mut w = vec![0.0; nx * ny];
        for x1 in 0..self.nx {
            for x2 in 0..other.nx {
                for y1 in 0..self.ny {
                    for y2 in 0..other.ny {
                        w[(x1 * other.nx + x2) * ny + y1 * other.ny + y2] = self.get(x1, y1) * other.get(x2, y2);
                    }
                }
            }
        }
        Self { nx, ny, w }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if self.ny != next.nx {
            return Err(Error::DimensionMismatch(format!("cannot compose {} outputs with {} inputs", self.ny, next.nx)));
        }
        let w = (0..self.nx)
            .flat_map(|x| (0..next.ny).map(move |z| (x, z)))
            .map(|(x, z)| (0..self.ny).map(|y| self.get(x, y) * next.get(y, z)).sum())
            .collect();
        Ok(Self { nx: self.nx, ny: next.ny, w })
    }

    pub fn joint(&self, p: &[f64]) -> Result<JointDistribution> {
        if p.len() != self.nx {
            return Err(Error::DimensionMismatch(format!("input of length {} for {} symbols", p.len(), self.nx)));
        }
        JointDistribution::new(self.nx, self.ny, (0..self.nx * self.ny).map(|i| p[i / self.ny] * self.w[i]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.nx == self.ny && *self == Self::identity(self.nx)
    }

    fn log_table(&self) -> Vec<f64> {
        self.w.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect()
    }
}

/// `x -> rho_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CqChannel {
    outputs: Vec<DensityMatrix>,
}

impl CqChannel {
    pub fn new(outputs: Vec<DensityMatrix>) -> Result<Self> {
        let d = outputs.first().map(DensityMatrix::dim).ok_or_else(|| Error::InvalidInput("no outputs".into()))?;
        if outputs.iter().any(|o| o.dim() != d) {
            return Err(Error::DimensionMismatch("outputs of different dimensions".into()));
        }
        Ok(Self { outputs })
    }

    /// Diagonal outputs `rho_x = diag(W(.|x))`.
    pub fn from_classical(w: &ClassicalChannel) -> Self {
        let outputs = (0..w.nx).map(|x| DensityMatrix::diagonal(&w.w[x * w.ny..(x + 1) * w.ny]).expect("stochastic row")).collect();
        Self { outputs }
    }

    pub fn outputs(&self) -> &[DensityMatrix] {
        &self.outputs
    }

    pub fn nx(&self) -> usize {
        self.outputs.len()
    }

    pub fn dim(&self) -> usize {
        self.outputs[0].dim()
    }
}

/// A channel given by its unnormalised Choi operator on `A' (x) B`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    pub da: usize,
    pub db: usize,
    choi: HermitianOperator,
}

impl QuantumChannel {
    pub fn new(choi: CMatrix, da: usize, db: usize) -> Result<Self> {
        if choi.nrows() != da * db {
            return Err(Error::DimensionMismatch(format!("Choi of dimension {} for dims [{da}, {db}]", choi.nrows())));
        }
        let choi = HermitianOperator::new(choi)?;
        let min = choi.eigh().min();
        if min < -1e-8 {
            return Err(Error::InvalidInput(format!("Choi operator has eigenvalue {min:e}")));
        }
        let marg = partial_trace(choi.matrix(), &[da, db], &[0])?;
        let dev = (marg - CMatrix::identity(da, da)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > 1e-8 {
            return Err(Error::InvalidInput(format!("Choi operator is not trace preserving (deviation {dev:e})")));
        }
        Ok(Self { da, db, choi })
    }

    pub fn identity(d: usize) -> Self {
        let m = CMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, k) = (r / d, r % d);
            let (j, l) = (c / d, c % d);
            if i == k && j == l {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { da: d, db: d, choi: HermitianOperator::from_raw(m) }
    }

    /// `X -> Tr[X] I / db`.
    pub fn completely_depolarizing(da: usize, db: usize) -> Self {
        let m = CMatrix::identity(da * db, da * db).unscale(db as f64);
        Self { da, db, choi: HermitianOperator::from_raw(m) }
    }

    /// `X -> sum_x <x|X|x> rho_x`.
    pub fn from_cq(ch: &CqChannel) -> Self {
        let (nx, d) = (ch.nx(), ch.dim());
        let mut m = CMatrix::zeros(nx * d, nx * d);
        for (x, rho) in ch.outputs().iter().enumerate() {
            m.view_mut((x * d, x * d), (d, d)).copy_from(rho.matrix());
        }
        Self { da: nx, db: d, choi: HermitianOperator::from_raw(m) }
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    /// `(rho^1/2 (x) I) J (rho^1/2 (x) I)`, the output of a purification of `rho`.
    pub fn joint_state(&self, input: &DensityMatrix) -> Result<BipartiteState> {
        if input.dim() != self.da {
            return Err(Error::DimensionMismatch(format!("input of dimension {} for {} inputs", input.dim(), self.da)));
        }
        let sq = input.eigh().compose_on_support(f64::sqrt);
        let k = tensor_product(&sq, &CMatrix::identity(self.db, self.db));
        BipartiteState::from_matrix(&k * self.choi.matrix() * &k, self.da, self.db)
    }
}

/// Any of the three channel encodings, as read from JSON.
#[derive(Clone, Debug)]
pub enum Channel {
    Classical(ClassicalChannel),
    Cq(CqChannel),
    Quantum(QuantumChannel),
}

/// Parses `{"type": "classical" | "cq" | "quantum", ...}`. Each cq output is
/// a matrix or a `{"matrix": ...}` object.
pub fn parse_channel(text: &str) -> Result<Channel> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let field = |name: &str| v.get(name).ok_or_else(|| Error::InvalidInput(format!("missing field {name:?}")));
    match v.get("type").and_then(|t| t.as_str()) {
        Some("classical") => {
            let rows: Vec<Vec<f64>> = serde_json::from_value(field("w")?.clone())?;
            Ok(Channel::Classical(ClassicalChannel::from_rows(&rows)?))
        }
        Some("cq") => {
            let outs = field("outputs")?.as_array().ok_or_else(|| Error::InvalidInput("outputs must be a list".into()))?;
            let outs = outs
                .iter()
                .map(|o| DensityMatrix::new(matrix_from_value(o.get("matrix").unwrap_or(o))?))
                .collect::<Result<Vec<_>>>()?;
            Ok(Channel::Cq(CqChannel::new(outs)?))
        }
        Some("quantum") => {
            let dims: Vec<usize> = serde_json::from_value(field("dims")?.clone())?;
            let [da, db] = dims[..] else {
                return Err(Error::InvalidInput("dims must have two entries".into()));
            };
            Ok(Channel::Quantum(QuantumChannel::new(matrix_from_value(field("choi")?)?, da, db)?))
        }
        other => Err(Error::InvalidInput(format!("unknown channel type {other:?}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelMeasureResult {
    pub value: ExtendedReal,
    /// Optimiser of the outer supremum (input distribution).
    pub input: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_state: Option<DensityMatrix>,
    /// Inner optimisers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<DensityMatrix>,
    /// Value of the second (`R`-form) evaluation where one is made.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    pub certified: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub heuristic: bool,
}

impl ChannelMeasureResult {
    fn scalar(value: ExtendedReal, input: Vec<f64>, certified: bool) -> Self {
        Self {
            value,
            input: Some(input),
            input_state: None,
            q_star: None,
            r_star: None,
            sigma_star: None,
            cross_check: None,
            certified,
            heuristic: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChannelOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Random inner starts on top of `P`, uniform and the corners.
    pub inner_restarts: usize,
    /// Random outer starts when no exhaustive grid is used.
    pub restarts: usize,
    pub seed: u64,
    /// Search an exhaustive grid over inputs when there are at most four.
    pub outer_grid: bool,
    /// Use the exact value for identity channels.
    pub shortcuts: bool,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 5000, inner_restarts: 2, restarts: 8, seed: 0, outer_grid: true, shortcuts: true }
    }
}

/// Agreement required between the two evaluations of classical channel tumula.
pub const FORM_AGREEMENT_TOL: f64 = 1e-6;

fn grid_steps(k: usize) -> Option<usize> {
    match k {
        0..=3 => Some(200),
        4 => Some(50),
        _ => None,
    }
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn corner(k: usize, i: usize) -> Vec<f64> {
    (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
}

fn kl(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc
}

struct Outer {
    p: Vec<f64>,
    value: f64,
    ranked: Vec<Vec<f64>>,
    certified: bool,
}

/// `sup_P f(P)`: grid or random candidates, then Nelder-Mead from the best
/// few. Stops at the first candidate with `f = +inf`.
fn maximize_inputs(k: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync), opts: &ChannelOptions, seeds: &[Vec<f64>]) -> Outer {
    let mut cands: Vec<Vec<f64>> = vec![uniform(k)];
    cands.extend(seeds.iter().cloned());
    let steps = grid_steps(k).filter(|_| opts.outer_grid);
    match steps {
        Some(m) => cands.extend(simplex_grid(k, m)),
        None => {
            let mut rng = seeded(opts.seed);
            cands.extend((0..opts.restarts).map(|_| random_probability(k, &mut rng)));
        }
    }
    let vals: Vec<f64> = cands.par_iter().map(|p| f(p)).collect();
    if let Some(i) = vals.iter().position(|v| *v == f64::INFINITY) {
        return Outer { p: cands[i].clone(), value: f64::INFINITY, ranked: vec![cands[i].clone()], certified: true };
    }
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut refine: Vec<Vec<f64>> = vec![];
    for &i in &order {
        if refine.len() >= 3 {
            break;
        }
        if refine.iter().all(|r: &Vec<f64>| r.iter().zip(&cands[i]).any(|(a, b)| (a - b).abs() > 0.02)) {
            refine.push(cands[i].clone());
        }
    }
    refine.push(uniform(k));
    refine.extend(seeds.iter().cloned());
    let nm = NmOptions { step: if steps.is_some() { 0.01 } else { 0.05 }, ..NmOptions::default() };
    let refined: Vec<(Vec<f64>, f64)> = refine.par_iter().map(|p0| {
        let (p, v) = nelder_mead_simplex(|p| -f(p), p0, &nm);
        (p, -v)
    }).collect();
    let mut best = (cands[order[0]].clone(), vals[order[0]]);
    for (p, v) in refined {
        if v == f64::INFINITY {
            return Outer { p: p.clone(), value: v, ranked: vec![p], certified: true };
        }
        if v > best.1 + 1e-15 {
            best = (p, v);
        }
    }
    let ranked = order.iter().take(3).map(|&i| cands[i].clone()).collect();
    Outer { p: best.0, value: best.1, ranked, certified: steps.is_some() }
}

/// Inner minimisation of the first form for a classical channel.
struct ClassicalInner {
    nx: usize,
    ny: usize,
    logw: Vec<f64>,
}

impl ClassicalInner {
    fn new(w: &ClassicalChannel) -> Self {
        Self { nx: w.nx, ny: w.ny, logw: w.log_table() }
    }

    /// Optimal `R` for fixed `Q` and `log Z(Q)`; `None` when `Z(Q) = 0`.
    fn r_and_log_z(&self, q: &[f64]) -> Option<(Vec<f64>, f64)> {
        let l: Vec<f64> = (0..self.ny)
            .map(|y| {
                let mut acc = 0.0;
                for x in (0..self.nx).filter(|&x| q[x] > 0.0) {
                    let v = self.logw[x * self.ny + y];
                    if v == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    acc += q[x] * v;
                }
                acc
            })
            .collect();
        let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return None;
        }
        let z: f64 = l.iter().map(|&v| (v - top).exp()).sum();
        Some((gibbs_vec(&l)?, top + z.ln()))
    }

    fn log_z(&self, q: &[f64]) -> f64 {
        self.r_and_log_z(q).map_or(f64::NEG_INFINITY, |(_, lz)| lz)
    }

    fn q_update(&self, p: &[f64], r: &[f64]) -> Option<Vec<f64>> {
        let l: Vec<f64> = (0..self.nx)
            .map(|x| {
                if p[x] <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut acc = p[x].ln();
                for y in (0..self.ny).filter(|&y| r[y] > 0.0) {
                    let v = self.logw[x * self.ny + y];
                    if v == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    acc += r[y] * v;
                }
                acc
            })
            .collect();
        gibbs_vec(&l)
    }

    fn run(&self, p: &[f64], q0: &[f64], opts: &ChannelOptions) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        let mut q = q0.to_vec();
        let (mut r, lz) = self.r_and_log_z(&q)?;
        let mut value = kl(&q, p) - lz;
        for _ in 0..opts.max_iter {
            let Some(q2) = self.q_update(p, &r) else { break };
            let Some((r2, lz2)) = self.r_and_log_z(&q2) else { break };
            let v2 = kl(&q2, p) - lz2;
            let step = q2.iter().zip(&q).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let dv = (value - v2).abs();
            q = q2;
            r = r2;
            value = v2;
            if dv <= opts.tol && step <= opts.tol {
                break;
            }
        }
        Some((value, q, r))
    }

    fn minimize(&self, p: &[f64], opts: &ChannelOptions) -> (f64, Vec<f64>, Vec<f64>) {
        let starts = inner_starts(p, opts);
        let mut best = (f64::INFINITY, p.to_vec(), vec![]);
        for q0 in &starts {
            if let Some(run) = self.run(p, q0, opts) {
                if run.0 < best.0 - 1e-15 {
                    best = run;
                }
            }
        }
        best
    }
}

/// `P`, uniform on the support of `P`, its corners and random points on it.
fn inner_starts(p: &[f64], opts: &ChannelOptions) -> Vec<Vec<f64>> {
    let k = p.len();
    let supp: Vec<usize> = (0..k).filter(|&x| p[x] > 0.0).collect();
    let embed = |v: &[f64]| {
        let mut out = vec![0.0; k];
        for (i, &x) in supp.iter().enumerate() {
            out[x] = v[i];
        }
        out
    };
    let mut starts = vec![p.to_vec(), embed(&uniform(supp.len()))];
    starts.extend(supp.iter().map(|&x| corner(k, x)));
    let mut rng = seeded(opts.seed ^ 0x5bd1_e995);
    starts.extend((0..opts.inner_restarts).map(|_| embed(&random_probability(supp.len(), &mut rng))));
    starts
}

/// The `R`-form `min_R -log sum_x P(x) exp(-D(R||W(.|x)))`.
struct RForm {
    nx: usize,
    ny: usize,
    logw: Vec<f64>,
    seeds: Vec<Vec<f64>>,
}

impl RForm {
    fn new(w: &ClassicalChannel) -> Self {
        let mut seeds: Vec<Vec<f64>> = (0..w.nx).map(|x| w.w[x * w.ny..(x + 1) * w.ny].to_vec()).collect();
        seeds.push(uniform(w.ny));
        seeds.extend((0..w.ny).map(|y| corner(w.ny, y)));
        if w.ny <= 3 {
            seeds.extend(simplex_grid(w.ny, 50));
        }
        Self { nx: w.nx, ny: w.ny, logw: w.log_table(), seeds }
    }

    fn g(&self, p: &[f64], r: &[f64]) -> f64 {
        let neg_h: f64 = r.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        let mut terms = Vec::with_capacity(self.nx);
        'x: for x in (0..self.nx).filter(|&x| p[x] > 0.0) {
            let mut cross = 0.0;
            for y in (0..self.ny).filter(|&y| r[y] > 0.0) {
                let v = self.logw[x * self.ny + y];
                if v == f64::NEG_INFINITY {
                    continue 'x;
                }
                cross += r[y] * v;
            }
            terms.push(p[x].ln() - (neg_h - cross));
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        -(top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln())
    }

    fn minimize(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut scored: Vec<(f64, &Vec<f64>)> = self.seeds.iter().map(|r| (self.g(p, r), r)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nm = NmOptions { step: 0.02, ftol: 1e-15, xtol: 1e-11, max_evals: 4000 };
        let mut best = (scored[0].0, scored[0].1.clone());
        // one start per basin: skip seeds close to an already chosen one
        let mut chosen: Vec<&Vec<f64>> = Vec::new();
        for (_, r) in &scored {
            if chosen.len() == 6 {
                break;
            }
            if chosen.iter().all(|c| c.iter().zip(r.iter()).any(|(a, b)| (a - b).abs() > 0.15)) {
                chosen.push(r);
            }
        }
        for r0 in chosen {
            let (r, v) = nelder_mead_simplex(|r| self.g(p, r), r0, &nm);
            if v < best.0 {
                best = (v, r);
            }
        }
        best
    }
}

pub fn classical_channel_umlaut(w: &ClassicalChannel, opts: &ChannelOptions) -> ChannelMeasureResult {
    let inner = ClassicalInner::new(w);
    let f = |p: &[f64]| -inner.log_z(p);
    let out = maximize_inputs(w.nx, &f, opts, &[]);
    ChannelMeasureResult::scalar(extended(out.value), out.p, out.certified)
}

/// `sup_P D(P_X P_Y || P_XY)`.
pub fn classical_channel_lautum(w: &ClassicalChannel, opts: &ChannelOptions) -> ChannelMeasureResult {
    let logw = w.log_table();
    let f = |p: &[f64]| {
        let py: Vec<f64> = (0..w.ny).map(|y| (0..w.nx).map(|x| p[x] * w.get(x, y)).sum()).collect();
        let mut acc = 0.0;
        for x in (0..w.nx).filter(|&x| p[x] > 0.0) {
            for y in (0..w.ny).filter(|&y| py[y] > 0.0) {
                let v = logw[x * w.ny + y];
                if v == f64::NEG_INFINITY {
                    return f64::INFINITY;
                }
                acc += p[x] * py[y] * (py[y].ln() - v);
            }
        }
        acc
    };
    let out = maximize_inputs(w.nx, &f, opts, &[]);
    ChannelMeasureResult::scalar(extended(out.value), out.p, out.certified)
}

fn extended(v: f64) -> ExtendedReal {
    if v == f64::INFINITY {
        ExtendedReal::Infinite(InfinityReason::SupportViolation)
    } else {
        ExtendedReal::Finite(v)
    }
}

/// Inner value `min_Q [D(Q||P) - log Z(Q)]` at a fixed input.
pub fn classical_channel_tumula_at(w: &ClassicalChannel, p: &[f64], opts: &ChannelOptions) -> f64 {
    ClassicalInner::new(w).minimize(p, opts).0
}

/// Tumula information of a classical channel by both forms; errors if they
/// disagree by more than [`FORM_AGREEMENT_TOL`].
pub fn classical_channel_tumula(w: &ClassicalChannel, opts: &ChannelOptions) -> Result<ChannelMeasureResult> {
    classical_channel_tumula_seeded(w, opts, &[])
}

fn classical_channel_tumula_seeded(w: &ClassicalChannel, opts: &ChannelOptions, seeds: &[Vec<f64>]) -> Result<ChannelMeasureResult> {
    if opts.shortcuts && w.is_identity() {
        let mut res = ChannelMeasureResult::scalar(ExtendedReal::Finite((w.nx as f64).ln()), uniform(w.nx), true);
        res.q_star = Some(corner(w.nx, 0));
        res.r_star = Some(corner(w.nx, 0));
        return Ok(res);
    }
    let inner = ClassicalInner::new(w);
    let f1 = |p: &[f64]| inner.minimize(p, opts).0;
    let out = maximize_inputs(w.nx, &f1, opts, seeds);
    let (v1, q, r) = inner.minimize(&out.p, opts);

    let rform = RForm::new(w);
    let f2 = |p: &[f64]| rform.minimize(p).0;
    let at_p = f2(&out.p);
    let nm = NmOptions { step: 0.01, ..NmOptions::default() };
    let mut v2 = at_p;
    let mut p2 = out.p.clone();
    let mut starts = vec![out.p.clone()];
    starts.extend(out.ranked.iter().take(2).cloned());
    for p0 in &starts {
        let (p, v) = nelder_mead_simplex(|p| -f2(p), p0, &nm);
        if -v > v2 {
            (v2, p2) = (-v, p);
        }
    }
    let (mut v1, mut q, mut r, mut p_star, mut at_p) = (v1, q, r, out.p, at_p);
    if v2 > v1 + FORM_AGREEMENT_TOL {
        // the R-form search left the Q-form's local optimum; continue from there
        let (p, _) = nelder_mead_simplex(|p| -f1(p), &p2, &nm);
        let (v, q2, r2) = inner.minimize(&p, opts);
        if v > v1 {
            (v1, q, r, at_p) = (v, q2, r2, f2(&p));
            p_star = p;
        }
    }
    if (v1 - at_p).abs() > FORM_AGREEMENT_TOL || (v1 - v2).abs() > FORM_AGREEMENT_TOL {
        return Err(Error::Consistency(format!(
            "channel tumula forms disagree: Q-form {v1}, R-form {at_p} at the same input, R-form supremum {v2}"
        )));
    }
    Ok(ChannelMeasureResult {
        value: ExtendedReal::Finite(v1),
        input: Some(p_star),
        input_state: None,
        q_star: Some(q),
        r_star: Some(r),
        sigma_star: None,
        cross_check: Some(v2),
        certified: out.certified,
        heuristic: false,
    })
}

/// Inner minimisation for a CQ channel.
struct CqInner {
    logs: Vec<CMatrix>,
    perps: Vec<Option<CMatrix>>,
    outputs: Vec<DensityMatrix>,
}

impl CqInner {
    fn new(ch: &CqChannel) -> Self {
        let mut logs = Vec::new();
        let mut perps = Vec::new();
        for o in ch.outputs() {
            let e = o.eigh();
            logs.push(e.compose_on_support(f64::ln));
            perps.push((e.rank() < e.values.len()).then(|| e.kernel_projector()));
        }
        Self { logs, perps, outputs: ch.outputs().to_vec() }
    }

    /// Gibbs state of `sum_x Q(x) log rho_x` on the common support, with `log Z`.
    fn sigma_and_log_z(&self, q: &[f64]) -> Option<(CMatrix, f64)> {
        let d = self.logs[0].nrows();
        let mut l = CMatrix::zeros(d, d);
        let mut pen: Option<CMatrix> = None;
        for (x, &qx) in q.iter().enumerate().filter(|(_, &v)| v > 0.0) {
            l += self.logs[x].scale(qx);
            if let Some(p) = &self.perps[x] {
                pen = Some(pen.map_or_else(|| p.clone(), |acc| acc + p));
            }
        }
        gibbs_with_log_partition(&l, pen.as_ref())
    }

    fn log_z(&self, q: &[f64]) -> f64 {
        self.sigma_and_log_z(q).map_or(f64::NEG_INFINITY, |(_, lz)| lz)
    }

    fn q_update(&self, p: &[f64], sigma: &CMatrix) -> Option<Vec<f64>> {
        let l: Vec<f64> = (0..p.len())
            .map(|x| {
                if p[x] <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if let Some(pp) = &self.perps[x] {
                    if trace_product_re(sigma, pp) > 1e-10 {
                        return f64::NEG_INFINITY;
                    }
                }
                p[x].ln() + trace_product_re(sigma, &self.logs[x])
            })
            .collect();
        gibbs_vec(&l)
    }

    fn run(&self, p: &[f64], q0: &[f64], opts: &ChannelOptions) -> Option<(f64, Vec<f64>, CMatrix)> {
        let mut q = q0.to_vec();
        let (mut sigma, lz) = self.sigma_and_log_z(&q)?;
        let mut value = kl(&q, p) - lz;
        for _ in 0..opts.max_iter {
            let Some(q2) = self.q_update(p, &sigma) else { break };
            let Some((s2, lz2)) = self.sigma_and_log_z(&q2) else { break };
            let v2 = kl(&q2, p) - lz2;
            let step = q2.iter().zip(&q).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let dv = (value - v2).abs();
            q = q2;
            sigma = s2;
            value = v2;
            if dv <= opts.tol && step <= opts.tol {
                break;
            }
        }
        Some((value, q, sigma))
    }

    fn minimize(&self, p: &[f64], opts: &ChannelOptions) -> Option<(f64, Vec<f64>, CMatrix)> {
        let mut best: Option<(f64, Vec<f64>, CMatrix)> = None;
        for q0 in inner_starts(p, opts) {
            if let Some(run) = self.run(p, &q0, opts) {
                if best.as_ref().map_or(true, |b| run.0 < b.0 - 1e-15) {
                    best = Some(run);
                }
            }
        }
        best
    }

    /// `-log sum_x P(x) exp(-D(sigma||rho_x))`.
    fn tu_form(&self, p: &[f64], sigma: &DensityMatrix) -> Result<f64> {
        let mut terms = Vec::new();
        for (x, rho) in self.outputs.iter().enumerate().filter(|(x, _)| p[*x] > 0.0) {
            if let ExtendedReal::Finite(d) = quantum_relative_entropy(sigma.operator(), rho.operator())? {
                terms.push(p[x].ln() - d);
            }
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(-(top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()))
    }
}

pub fn cq_umlaut(ch: &CqChannel, opts: &ChannelOptions) -> ChannelMeasureResult {
    let inner = CqInner::new(ch);
    let f = |p: &[f64]| -inner.log_z(p);
    let out = maximize_inputs(ch.nx(), &f, opts, &[]);
    let mut res = ChannelMeasureResult::scalar(extended(out.value), out.p.clone(), out.certified);
    res.sigma_star = inner.sigma_and_log_z(&out.p).map(|(s, _)| DensityMatrix::from_psd(s));
    res
}

/// CQ channel tumula information. The alternating inner solution is checked
/// against the `-log sum_x P(x) exp(-D(sigma||rho_x))` form at the optimiser.
pub fn cq_tumula(ch: &CqChannel, opts: &ChannelOptions) -> Result<ChannelMeasureResult> {
    let inner = CqInner::new(ch);
    let f = |p: &[f64]| inner.minimize(p, opts).map_or(f64::INFINITY, |r| r.0);
    let out = maximize_inputs(ch.nx(), &f, opts, &[]);
    let Some((v, q, sigma)) = inner.minimize(&out.p, opts) else {
        return Ok(ChannelMeasureResult::scalar(extended(f64::INFINITY), out.p, out.certified));
    };
    let sigma = DensityMatrix::from_psd(sigma);
    let tu = inner.tu_form(&out.p, &sigma)?;
    if (tu - v).abs() > FORM_AGREEMENT_TOL {
        return Err(Error::Consistency(format!("CQ tumula forms disagree: {v} vs {tu}")));
    }
    Ok(ChannelMeasureResult {
        value: ExtendedReal::Finite(v),
        input: Some(out.p),
        input_state: None,
        q_star: Some(q),
        r_star: None,
        sigma_star: Some(sigma),
        cross_check: Some(tu),
        certified: out.certified,
        heuristic: false,
    })
}

/// Inner value at a fixed input for a CQ channel.
pub fn cq_tumula_at(ch: &CqChannel, p: &[f64], opts: &ChannelOptions) -> f64 {
    CqInner::new(ch).minimize(p, opts).map_or(f64::INFINITY, |r| r.0)
}

fn input_from_params(x: &[f64], d: usize) -> DensityMatrix {
    let m = CMatrix::from_fn(d, d, |i, j| Complex64::new(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]));
    DensityMatrix::from_psd(&m * m.adjoint())
}

fn params_from_input(rho: &DensityMatrix) -> Vec<f64> {
    let d = rho.dim();
    let sq = eigh_unchecked(rho.matrix()).compose_on_support(f64::sqrt);
    (0..d * d).flat_map(|k| [sq[(k / d, k % d)].re, sq[(k / d, k % d)].im]).collect()
}

/// Heuristic lower bound on the tumula information of a quantum channel:
/// a search over input states, each scored by the tumula information of the
/// channel output on a purification. Infinite as soon as one input gives an
/// infinite inner value.
pub fn quantum_channel_tumula(ch: &QuantumChannel, opts: &ChannelOptions) -> Result<ChannelMeasureResult> {
    if ch.da > 4 || ch.db > 4 {
        return Err(Error::ResourceGuard(format!("dims [{}, {}] exceed 4", ch.da, ch.db)));
    }
    let solver = SolverOptions { restarts: 2, seed: opts.seed, ..SolverOptions::default() };
    let score = |rho: &DensityMatrix| -> ExtendedReal {
        ch.joint_state(rho)
            .and_then(|s| tumula_information(&s, &solver))
            .map_or(ExtendedReal::Finite(f64::NEG_INFINITY), |r| r.value)
    };
    let d = ch.da;
    let mut cands: Vec<DensityMatrix> = vec![DensityMatrix::maximally_mixed(d)];
    let mut rng = seeded(opts.seed);
    cands.extend((0..opts.restarts).map(|_| random_density(d, &mut rng)));
    let heuristic_result = |value: ExtendedReal, rho: DensityMatrix| ChannelMeasureResult {
        value,
        input: Some(rho.diag()),
        input_state: Some(rho),
        q_star: None,
        r_star: None,
        sigma_star: None,
        cross_check: None,
        certified: false,
        heuristic: true,
    };
    for c in &cands {
        if let v @ ExtendedReal::Infinite(_) = score(c) {
            return Ok(heuristic_result(v, c.clone()));
        }
    }
    let diag_score = |p: &[f64]| -> f64 { DensityMatrix::diagonal(p).map_or(f64::NEG_INFINITY, |r| score(&r).value()) };
    let diag_opts = ChannelOptions { outer_grid: false, restarts: 0, ..opts.clone() };
    let mut seeds: Vec<Vec<f64>> = simplex_grid(d, 10);
    seeds.retain(|p| p.iter().all(|&v| v > 0.0));
    let best_diag = maximize_inputs(d, &diag_score, &diag_opts, &seeds);
    if best_diag.value == f64::INFINITY {
        let rho = DensityMatrix::diagonal(&best_diag.p)?;
        return Ok(heuristic_result(ExtendedReal::Infinite(InfinityReason::SupportViolation), rho));
    }
    let mut best = (DensityMatrix::diagonal(&best_diag.p)?, best_diag.value);
    for c in cands {
        let v = score(&c).value();
        if v > best.1 {
            best = (c, v);
        }
    }
    let nm = NmOptions { step: 0.05, ftol: 1e-12, xtol: 1e-8, max_evals: 1500 };
    let (x, neg) = nelder_mead(|x| -score(&input_from_params(x, d)).value(), &params_from_input(&best.0), &nm);
    if -neg > best.1 {
        best = (input_from_params(&x, d), -neg);
    }
    Ok(heuristic_result(extended(best.1), best.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperadditivityRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `T(W1 x W2)` against `T(W1) + T(W2)`; the product input of the two
/// optimisers seeds the joint search.
pub fn superadditivity_check(w1: &ClassicalChannel, w2: &ClassicalChannel, opts: &ChannelOptions) -> Result<SuperadditivityRecord> {
    if w1.nx * w2.nx > 9 {
        return Err(Error::ResourceGuard(format!("product channel has {} inputs (limit 9)", w1.nx * w2.nx)));
    }
    let t1 = classical_channel_tumula(w1, opts)?;
    let t2 = classical_channel_tumula(w2, opts)?;
    let (p1, p2) = (t1.input.clone().unwrap_or_default(), t2.input.clone().unwrap_or_default());
    let seed: Vec<f64> = p1.iter().flat_map(|a| p2.iter().map(move |b| a * b)).collect();
    let prod = w1.product(w2);
    let joint_opts = ChannelOptions { outer_grid: prod.nx <= 3 && opts.outer_grid, ..opts.clone() };
    let lhs = classical_channel_tumula_seeded(&prod, &joint_opts, &[seed])?.value.value();
    let rhs = t1.value.value() + t2.value.value();
    Ok(SuperadditivityRecord { lhs, rhs, gap: lhs - rhs })
}

#[derive(Clone, Debug, Serialize)]
pub struct BscRow {
    pub eps: f64,
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub umlaut: f64,
    pub tumula: f64,
    #[serde(serialize_with = "crate::io::serialize_f64_or_inf")]
    pub lautum: f64,
    /// First component of the inner optimiser `Q*`.
    pub q_star: f64,
}

/// Umlaut, tumula and lautum information of binary symmetric channels.
pub fn bsc_curve(eps_grid: &[f64], opts: &ChannelOptions) -> Result<Vec<BscRow>> {
    if let Some(e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e <= 0.5)) {
        return Err(Error::Domain(format!("crossover probability {e} outside (0, 1/2]")));
    }
    eps_grid
        .par_iter()
        .map(|&eps| {
            let w = ClassicalChannel::bsc(eps)?;
            let t = classical_channel_tumula(&w, opts)?;
            Ok(BscRow {
                eps,
                umlaut: classical_channel_umlaut(&w, opts).value.value(),
                tumula: t.value.value(),
                lautum: classical_channel_lautum(&w, opts).value.value(),
                q_star: t.q_star.as_ref().map_or(f64::NAN, |q| q[0]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_full_rank_density, random_stochastic};
    use approx::assert_relative_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    fn opts() -> ChannelOptions {
        ChannelOptions::default()
    }

    /// Dense 1-D grid oracle for `sup_p -log Z(p)` of a BSC.
    fn bsc_umlaut_oracle(eps: f64) -> f64 {
        (0..=10_000)
            .map(|i| {
                let p = i as f64 / 10_000.0;
                let z = (1.0 - eps).powf(p) * eps.powf(1.0 - p) + eps.powf(p) * (1.0 - eps).powf(1.0 - p);
                -z.ln()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn bsc_phase_structure() {
        for eps in [0.15, 0.25, 0.4] {
            let w = ClassicalChannel::bsc(eps).unwrap();
            let t = classical_channel_tumula(&w, &opts()).unwrap().value.value();
            let u = classical_channel_umlaut(&w, &opts()).value.value();
            assert!((t - u).abs() <= 1e-6, "eps {eps}: {t} vs {u}");
            assert!((u - bsc_umlaut_oracle(eps)).abs() <= 1e-8);
        }
        for eps in [0.02, 0.05, 0.08] {
            let w = ClassicalChannel::bsc(eps).unwrap();
            let t = classical_channel_tumula(&w, &opts()).unwrap().value.value();
            let u = classical_channel_umlaut(&w, &opts()).value.value();
            assert!(u - t >= 1e-4, "eps {eps}: {t} vs {u}");
        }
        let t = classical_channel_tumula(&ClassicalChannel::bsc(1e-3).unwrap(), &opts()).unwrap().value.value();
        assert!((t - LN2).abs() <= 0.05);
    }

    #[test]
    fn bsc_values_from_grid_oracle() {
        let u = classical_channel_umlaut(&ClassicalChannel::bsc(0.25).unwrap(), &opts()).value.value();
        assert_relative_eq!(u, 0.143841, epsilon = 1e-6);
    }

    #[test]
    fn bsc_curve_rows() {
        let rows = bsc_curve(&[0.05, 0.25, 0.5], &opts()).unwrap();
        assert!(rows[0].tumula < rows[0].umlaut - 1e-4);
        assert!((rows[1].tumula - rows[1].umlaut).abs() <= 1e-6);
        assert!(rows[1].tumula <= rows[1].lautum + 1e-9);
        assert!(rows[2].tumula.abs() < 1e-9 && rows[2].umlaut.abs() < 1e-9 && rows[2].lautum.abs() < 1e-9);
        assert!(bsc_curve(&[0.0], &opts()).is_err());
        assert!(bsc_curve(&[0.6], &opts()).is_err());
    }

    #[test]
    fn identity_channels() {
        for k in [2, 3, 4] {
            let w = ClassicalChannel::identity(k);
            let t = classical_channel_tumula(&w, &opts()).unwrap();
            assert_eq!(t.value.value(), (k as f64).ln());
            assert!(t.certified);
            assert!(!classical_channel_umlaut(&w, &opts()).value.is_finite());
        }
        for k in [2, 3] {
            let numeric = ChannelOptions { shortcuts: false, ..opts() };
            let t = classical_channel_tumula(&ClassicalChannel::identity(k), &numeric).unwrap().value.value();
            assert!((t - (k as f64).ln()).abs() <= 1e-4, "{k}: {t}");
        }
    }

    #[test]
    fn constant_and_degraded_channels() {
        let c = ClassicalChannel::constant(3, &[0.2, 0.8]).unwrap();
        assert!(classical_channel_tumula(&c, &opts()).unwrap().value.value().abs() < 1e-12);
        assert!(classical_channel_umlaut(&c, &opts()).value.value().abs() < 1e-12);
        let mut rng = seeded(4);
        let w = ClassicalChannel::new(2, 3, random_stochastic(2, 3, &mut rng)).unwrap();
        let d = w.then(&ClassicalChannel::constant(3, &[0.5, 0.5]).unwrap()).unwrap();
        assert!(classical_channel_tumula(&d, &opts()).unwrap().value.value().abs() <= 1e-8);
        assert!(classical_channel_umlaut(&d, &opts()).value.value().abs() <= 1e-8);
    }

    #[test]
    fn random_channels_obey_bound_and_forms_agree() {
        let mut rng = seeded(7);
        for i in 0..12 {
            let (nx, ny) = (2 + i % 2, 2 + (i / 2) % 2);
            let w = ClassicalChannel::new(nx, ny, random_stochastic(nx, ny, &mut rng)).unwrap();
            let t = classical_channel_tumula(&w, &opts()).unwrap();
            let v = t.value.value();
            assert!(v <= (nx as f64).ln() + 1e-8);
            assert!(v <= classical_channel_umlaut(&w, &opts()).value.value() + 1e-6);
            assert!((t.cross_check.unwrap() - v).abs() <= FORM_AGREEMENT_TOL);
            let again = classical_channel_tumula_at(&w, t.input.as_ref().unwrap(), &opts());
            assert!((again - v).abs() <= 1e-6);
        }
    }

    #[test]
    fn cq_special_cases() {
        let mut rng = seeded(2);
        let rho = random_full_rank_density(2, &mut rng);
        let same = CqChannel::new(vec![rho.clone(), rho]).unwrap();
        assert!(cq_umlaut(&same, &opts()).value.value().abs() < 1e-10);
        assert!(cq_tumula(&same, &opts()).unwrap().value.value().abs() < 1e-10);
        let orth = CqChannel::new(vec![DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(), DensityMatrix::diagonal(&[0.0, 1.0]).unwrap()]).unwrap();
        let u = cq_umlaut(&orth, &opts());
        assert!(!u.value.is_finite());
        let p = u.input.unwrap();
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn commuting_cq_matches_classical() {
        let w = ClassicalChannel::from_rows(&[vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let q = cq_tumula(&CqChannel::from_classical(&w), &opts()).unwrap().value.value();
        let c = classical_channel_tumula(&w, &opts()).unwrap().value.value();
        assert!((q - c).abs() <= 1e-7, "{q} vs {c}");
        let qu = cq_umlaut(&CqChannel::from_classical(&w), &opts()).value.value();
        let cu = classical_channel_umlaut(&w, &opts()).value.value();
        assert!((qu - cu).abs() <= 1e-9);
    }

    #[test]
    fn cq_tumula_below_umlaut() {
        let mut rng = seeded(9);
        for _ in 0..5 {
            let ch = CqChannel::new(vec![random_full_rank_density(2, &mut rng), random_full_rank_density(2, &mut rng)]).unwrap();
            let t = cq_tumula(&ch, &opts()).unwrap();
            let u = cq_umlaut(&ch, &opts()).value.value();
            assert!(t.value.value() <= u + 1e-6);
            let again = cq_tumula_at(&ch, t.input.as_ref().unwrap(), &opts());
            assert!((again - t.value.value()).abs() <= 1e-6);
        }
    }

    #[test]
    fn quantum_channel_examples() {
        let fast = ChannelOptions { restarts: 2, ..opts() };
        let dep = quantum_channel_tumula(&QuantumChannel::completely_depolarizing(2, 2), &fast).unwrap();
        assert!(dep.value.value().abs() < 1e-8 && dep.heuristic && !dep.certified);
        let id = quantum_channel_tumula(&QuantumChannel::identity(2), &fast).unwrap();
        assert!(!id.value.is_finite());
        let mut rng = seeded(5);
        let cq = CqChannel::new(vec![random_full_rank_density(2, &mut rng), random_full_rank_density(2, &mut rng)]).unwrap();
        let wrapped = quantum_channel_tumula(&QuantumChannel::from_cq(&cq), &fast).unwrap().value.value();
        let direct = cq_tumula(&cq, &opts()).unwrap().value.value();
        assert!(wrapped >= direct - 1e-4, "{wrapped} vs {direct}");
        assert!(quantum_channel_tumula(&QuantumChannel::identity(5), &fast).is_err());
    }

    #[test]
    fn superadditivity() {
        let id = ClassicalChannel::identity(2);
        let r = superadditivity_check(&id, &id, &opts()).unwrap();
        assert_relative_eq!(r.lhs, (4.0f64).ln(), epsilon = 1e-15);
        assert_relative_eq!(r.gap, 0.0, epsilon = 1e-15);
        let b = ClassicalChannel::bsc(0.3).unwrap();
        assert!(superadditivity_check(&b, &b, &opts()).unwrap().gap >= -1e-4);
        let c = ClassicalChannel::constant(2, &[0.5, 0.5]).unwrap();
        assert!(superadditivity_check(&c, &b, &opts()).unwrap().gap >= -1e-4);
        let big = ClassicalChannel::identity(4);
        assert!(matches!(superadditivity_check(&big, &big, &opts()), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn channel_validation_and_parsing() {
        assert!(ClassicalChannel::from_rows(&[vec![0.5, 0.6]]).is_err());
        assert!(QuantumChannel::new(CMatrix::identity(4, 4), 2, 2).is_err());
        assert!(QuantumChannel::new(QuantumChannel::identity(2).choi().matrix().clone(), 2, 2).is_ok());
        match parse_channel(r#"{"type":"classical","w":[[1,0],[0,1]]}"#).unwrap() {
            Channel::Classical(w) => assert!(w.is_identity()),
            other => panic!("{other:?}"),
        }
        let cq = r#"{"type":"cq","outputs":[[[1,0],[0,0]],[[0.5,0],[0,0.5]]]}"#;
        assert!(matches!(parse_channel(cq).unwrap(), Channel::Cq(_)));
        let wrapped = r#"{"type":"cq","outputs":[{"matrix":[[1,0],[0,0]]},{"matrix":[[0,0],[0,1]]}]}"#;
        assert!(matches!(parse_channel(wrapped).unwrap(), Channel::Cq(_)));
        let q = r#"{"type":"quantum","dims":[1,2],"choi":[[0.5,0],[0,0.5]]}"#;
        assert!(matches!(parse_channel(q).unwrap(), Channel::Quantum(_)));
        assert!(parse_channel(r#"{"type":"other"}"#).is_err());
    }
}
