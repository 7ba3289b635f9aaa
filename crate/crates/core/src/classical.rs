//! Lautum, umlaut and tumula information of joint distributions.
//!
//! `T(X:Y) = min_{Q,R} D(Q x R || P)`. For fixed `Q` the optimal `R` is
//! `R(y) ~ exp(sum_x Q(x) log P(x,y))`, so
//! `T = min_Q [ sum_x Q log Q - log sum_y exp(sum_x Q(x) log P(x,y)) ]`.
//! Zero probabilities enter as `log 0 = -inf`.

use crate::divergence::{classical_kl, classical_petz, ExtendedReal, InfinityReason};
use crate::error::{Error, Result};
use crate::measures::Variant;
use crate::operator::{classical_state, BipartiteState};
use crate::optimize::simplex_grid;
use crate::random::{random_probability, seeded};
use rayon::prelude::*;
use serde::Serialize;

/// Entries below this are treated as exact zeros.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    pub nx: usize,
    pub ny: usize,
    /// Row-major `p[x * ny + y]`.
    pub p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || p.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!("{} entries for a {}x{} joint", p.len(), nx, ny)));
        }
        if p.iter().any(|&x| !x.is_finite() || x < -1e-12) {
            return Err(Error::InvalidInput("joint has a negative or non-finite entry".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("joint sums to {s}")));
        }
        let p = p.into_iter().map(|x| if x < PROB_FLOOR { 0.0 } else { x }).collect();
        Ok(Self { nx, ny, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("ragged table".into()));
        }
        Self::new(rows.len(), ny, rows.concat())
    }

    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        Self::new(px.len(), py.len(), px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx).map(|x| (0..self.ny).map(|y| self.get(x, y)).sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny).map(|y| (0..self.nx).map(|x| self.get(x, y)).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let p = (0..self.ny).flat_map(|y| (0..self.nx).map(move |x| (x, y))).map(|(x, y)| self.get(x, y)).collect();
        Self { nx: self.ny, ny: self.nx, p }
    }

    /// `P (x) P'` with `X = (x, x')` and `Y = (y, y')`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (nx, ny) = (self.nx * other.nx, self.ny * other.ny);
        let mut p = vec![0.0; nx * ny];
        for x1 in 0..self.nx {
            for x2 in 0..other.nx {
                for y1 in 0..self.ny {
                    for y2 in 0..other.ny {
                        p[(x1 * other.nx + x2) * ny + y1 * other.ny + y2] = self.get(x1, y1) * other.get(x2, y2);
                    }
                }
            }
        }
        Self { nx, ny, p }
    }

    fn log_table(&self) -> Vec<f64> {
        self.p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalResult {
    pub value: ExtendedReal,
    pub q: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// True when an exhaustive grid at the declared resolution was searched.
    pub grid_searched: bool,
}

impl ClassicalResult {
    fn exact(value: ExtendedReal, q: Option<Vec<f64>>, r: Option<Vec<f64>>) -> Self {
        Self { value, q, r, iterations: 0, converged: true, restarts_used: 0, grid_searched: false }
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Random starts when no exhaustive grid is used.
    pub restarts: usize,
    pub seed: u64,
    /// Exhaustive simplex grid when `nx * ny <= 16`.
    pub grid_fallback: bool,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 10_000, restarts: 32, seed: 0, grid_fallback: true }
    }
}

/// `exp(l) / sum exp(l)` with `-inf` entries mapped to zero.
pub(crate) fn gibbs_vec(l: &[f64]) -> Option<Vec<f64>> {
    let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return None;
    }
    let w: Vec<f64> = l.iter().map(|&v| (v - top).exp()).collect();
    let s: f64 = w.iter().sum();
    Some(w.into_iter().map(|v| v / s).collect())
}

fn neg_entropy(q: &[f64]) -> f64 {
    q.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum()
}

fn outer(q: &[f64], r: &[f64]) -> Vec<f64> {
    q.iter().flat_map(|a| r.iter().map(move |b| a * b)).collect()
}

pub fn classical_lautum(p: &JointDistribution) -> ClassicalResult {
    let (px, py) = (p.marginal_x(), p.marginal_y());
    let value = classical_kl(&outer(&px, &py), &p.p);
    ClassicalResult::exact(value, Some(px), Some(py))
}

/// `min_R D(Q x R || P)` for fixed `Q`: the optimal `R` and the value.
fn best_r(logp: &[f64], nx: usize, ny: usize, q: &[f64]) -> Option<(Vec<f64>, f64)> {
    let l: Vec<f64> = (0..ny)
        .map(|y| {
            (0..nx).filter(|&x| q[x] > 0.0).fold(0.0, |acc, x| {
                let v = logp[x * ny + y];
                if v == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    acc + q[x] * v
                }
            })
        })
        .collect();
    let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return None;
    }
    let z: f64 = l.iter().map(|&v| (v - top).exp()).sum();
    let r = gibbs_vec(&l)?;
    Some((r, neg_entropy(q) - top - z.ln()))
}

pub fn classical_umlaut(p: &JointDistribution) -> ClassicalResult {
    let px = p.marginal_x();
    match best_r(&p.log_table(), p.nx, p.ny, &px) {
        None => ClassicalResult::exact(ExtendedReal::Infinite(InfinityReason::SupportViolation), Some(px), None),
        Some((r, _)) => {
            let value = classical_kl(&outer(&px, &r), &p.p);
            ClassicalResult::exact(value, Some(px), Some(r))
        }
    }
}

struct Run {
    q: Vec<f64>,
    r: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn objective(logp: &[f64], ny: usize, q: &[f64], r: &[f64]) -> f64 {
    let mut cross = 0.0;
    for (x, &qx) in q.iter().enumerate() {
        if qx <= 0.0 {
            continue;
        }
        for (y, &ry) in r.iter().enumerate() {
            if ry <= 0.0 {
                continue;
            }
            let v = logp[x * ny + y];
            if v == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            cross += qx * ry * v;
        }
    }
    neg_entropy(q) + neg_entropy(r) - cross
}

fn alternate(logp: &[f64], nx: usize, ny: usize, q0: &[f64], tol: f64, max_iter: usize) -> Option<Run> {
    let logp_t: Vec<f64> = (0..ny).flat_map(|y| (0..nx).map(move |x| (x, y))).map(|(x, y)| logp[x * ny + y]).collect();
    let mut q = q0.to_vec();
    let (mut r, _) = best_r(logp, nx, ny, &q)?;
    let mut value = objective(logp, ny, &q, &r);
    for it in 1..=max_iter {
        let (q2, _) = best_r(&logp_t, ny, nx, &r)?;
        let (r2, _) = best_r(logp, nx, ny, &q2)?;
        let v2 = objective(logp, ny, &q2, &r2);
        let step = q2.iter().zip(&q).chain(r2.iter().zip(&r)).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        let dv = (value - v2).abs();
        q = q2;
        r = r2;
        value = v2;
        if dv <= tol && step <= tol {
            return Some(Run { q, r, value, iterations: it, converged: true });
        }
    }
    Some(Run { q, r, value, iterations: max_iter, converged: false })
}

fn corner(k: usize, i: usize) -> Vec<f64> {
    (0..k).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
}

/// Grid steps per alphabet size for the exhaustive search (2x2 uses 0.01).
fn grid_resolution(k: usize) -> usize {
    match k {
        2 | 3 => 100,
        _ => 50,
    }
}

/// Tumula information of a joint distribution. For `nx * ny <= 16` an
/// exhaustive grid over the smaller marginal is searched and its best points
/// polished; otherwise corner, marginal and random starts are used.
pub fn classical_tumula(p: &JointDistribution, opts: &ClassicalOptions) -> ClassicalResult {
    if p.nx > p.ny {
        let mut res = classical_tumula(&p.transpose(), opts);
        std::mem::swap(&mut res.q, &mut res.r);
        return res;
    }
    let (nx, ny) = (p.nx, p.ny);
    let logp = p.log_table();
    let mut starts: Vec<Vec<f64>> = vec![p.marginal_x(), vec![1.0 / nx as f64; nx]];
    starts.extend((0..nx).map(|i| corner(nx, i)));
    let grid = opts.grid_fallback && nx * ny <= 16;
    if grid {
        let mut scored: Vec<(f64, Vec<f64>)> = simplex_grid(nx, grid_resolution(nx))
            .into_par_iter()
            .filter_map(|q| best_r(&logp, nx, ny, &q).map(|(_, v)| (v, q)))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        starts.extend(scored.into_iter().take(5).map(|(_, q)| q));
    } else {
        let mut rng = seeded(opts.seed);
        starts.extend((0..opts.restarts).map(|_| random_probability(nx, &mut rng)));
    }
    let mut best: Option<Run> = None;
    for q0 in &starts {
        if let Some(run) = alternate(&logp, nx, ny, q0, opts.tol, opts.max_iter) {
            if run.value.is_finite() && best.as_ref().map_or(true, |b| run.value < b.value - 1e-14) {
                best = Some(run);
            }
        }
    }
    match best {
        None => ClassicalResult {
            value: ExtendedReal::Infinite(InfinityReason::SupportViolation),
            q: None,
            r: None,
            iterations: 0,
            converged: true,
            restarts_used: starts.len(),
            grid_searched: grid,
        },
        Some(run) => ClassicalResult {
            value: classical_kl(&outer(&run.q, &run.r), &p.p),
            q: Some(run.q),
            r: Some(run.r),
            iterations: run.iterations,
            converged: run.converged,
            restarts_used: starts.len(),
            grid_searched: grid,
        },
    }
}

/// `min(-log max_x P_X(x), -log max_y P_Y(y))`, an upper bound on `T`.
pub fn tumula_upper_bound(p: &JointDistribution) -> f64 {
    let mx = p.marginal_x().into_iter().fold(0.0, f64::max);
    let my = p.marginal_y().into_iter().fold(0.0, f64::max);
    (-mx.ln()).min(-my.ln())
}

/// The joint as a diagonal two-party state.
pub fn cc_embed(p: &JointDistribution) -> BipartiteState {
    classical_state(&p.p, p.nx, p.ny).expect("validated joint")
}

fn renyi_update(p: &JointDistribution, alpha: f64, q: &[f64], along_y: bool) -> Option<Vec<f64>> {
    let (n_out, n_in) = if along_y { (p.ny, p.nx) } else { (p.nx, p.ny) };
    let w: Vec<f64> = (0..n_out)
        .map(|o| {
            (0..n_in)
                .map(|i| {
                    let v = if along_y { p.get(i, o) } else { p.get(o, i) };
                    if q[i] > 0.0 && v > 0.0 {
                        q[i].powf(alpha) * v.powf(1.0 - alpha)
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                .powf(1.0 / (1.0 - alpha))
        })
        .collect();
    let s: f64 = w.iter().sum();
    (s > 0.0).then(|| w.into_iter().map(|v| v / s).collect())
}

/// Petz Renyi lautum information of a joint distribution, `alpha` in `(0, 1]`.
pub fn classical_prli(p: &JointDistribution, variant: Variant, alpha: f64, opts: &ClassicalOptions) -> Result<ClassicalResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("order {alpha} outside (0, 1]")));
    }
    let px = p.marginal_x();
    if alpha == 1.0 {
        return Ok(match variant {
            Variant::Non => classical_lautum(p),
            Variant::Singly => classical_umlaut(p),
            Variant::Doubly => classical_tumula(p, opts),
        });
    }
    let eval = |q: &[f64], r: &[f64]| classical_petz(alpha, &outer(q, r), &p.p);
    match variant {
        Variant::Non => {
            let py = p.marginal_y();
            Ok(ClassicalResult::exact(eval(&px, &py), Some(px), Some(py)))
        }
        Variant::Singly => {
            let r = renyi_update(p, alpha, &px, true).ok_or_else(|| Error::Consistency("vanishing update".into()))?;
            Ok(ClassicalResult::exact(eval(&px, &r), Some(px), Some(r)))
        }
        Variant::Doubly => {
            let mut starts = vec![vec![1.0 / p.nx as f64; p.nx], px.clone()];
            let mut rng = seeded(opts.seed);
            starts.extend((0..opts.restarts.min(8)).map(|_| random_probability(p.nx, &mut rng)));
            let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize, bool)> = None;
            for q0 in &starts {
                let mut q = q0.clone();
                let Some(mut r) = renyi_update(p, alpha, &q, true) else { continue };
                let mut val = eval(&q, &r).value();
                let mut out = (opts.max_iter, false);
                for it in 1..=opts.max_iter {
                    let Some(q2) = renyi_update(p, alpha, &r, false) else { break };
                    let Some(r2) = renyi_update(p, alpha, &q2, true) else { break };
                    let v2 = eval(&q2, &r2).value();
                    let step = q2.iter().zip(&q).chain(r2.iter().zip(&r)).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
                    let dv = (val - v2).abs();
                    q = q2;
                    r = r2;
                    val = v2;
                    if dv <= opts.tol && step <= opts.tol {
                        out = (it, true);
                        break;
                    }
                }
                if best.as_ref().map_or(true, |b| val < b.0 - 1e-14) {
                    best = Some((val, q, r, out.0, out.1));
                }
            }
            let (_, q, r, iterations, converged) = best.ok_or_else(|| Error::Consistency("no feasible start".into()))?;
            Ok(ClassicalResult {
                value: eval(&q, &r),
                q: Some(q),
                r: Some(r),
                iterations,
                converged,
                restarts_used: starts.len(),
                grid_searched: false,
            })
        }
    }
}
