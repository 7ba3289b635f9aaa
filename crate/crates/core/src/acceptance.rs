//! The numbered acceptance checks. Each check reports the worst measured
//! deviation against its pinned tolerance; [`Level::Fast`] uses smaller
//! samples where a check draws random instances.

use crate::channel::{
    bsc_curve, classical_channel_tumula, cq_tumula, cq_umlaut, ChannelOptions, ClassicalChannel, CqChannel,
};
use crate::classical::{classical_prli, classical_tumula, cc_embed, tumula_upper_bound, ClassicalOptions, JointDistribution};
use crate::error::Result;
use crate::hypothesis::{
    achievability_test, classical_np_beta, empirical_exponent, reverse_direct_formula, ExponentQuery,
};
use crate::measures::{
    alpha_sweep, closed_form_thresholds, fixed_point_residual, prli, prmi_direct, thresholds, tumula_information,
    universal_state_sequence, ClosedFormKind, SolverOptions, Variant,
};
use crate::operator::{classical_state, BipartiteState, DensityMatrix};
use crate::random::{random_density, random_full_rank_density, random_probability, random_stochastic, seeded};
use num_complex::Complex64;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(crate::Error::InvalidInput(format!("unknown level {other:?}"))),
        }
    }
}

/// Pinned tolerances, one field per numeric threshold in the checks.
#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub half_order_gap: f64,
    pub small_order_value: f64,
    pub duality: f64,
    pub additivity: f64,
    pub bound_tightness: f64,
    pub bound_slack: f64,
    pub identity_numeric: f64,
    pub bsc_equal: f64,
    pub bsc_gap: f64,
    pub bsc_low_noise: f64,
    pub thresholds: f64,
    pub fixed_point: f64,
    pub achievability: f64,
    pub exponent_gap: f64,
    pub exponent_monotone_slack: f64,
    pub cc_reduction: f64,
    pub channel_forms: f64,
    pub sandwich: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            half_order_gap: 1e-7,
            small_order_value: 1e-2,
            duality: 1e-6,
            additivity: 1e-5,
            bound_tightness: 1e-8,
            bound_slack: 1e-8,
            identity_numeric: 1e-4,
            bsc_equal: 1e-6,
            bsc_gap: 1e-4,
            bsc_low_noise: 0.05,
            thresholds: 1e-3,
            fixed_point: 1e-8,
            achievability: 1e-12,
            exponent_gap: 0.1,
            exponent_monotone_slack: 1e-3,
            cc_reduction: 1e-8,
            channel_forms: 1e-6,
            sandwich: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:02} {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub const CHECK_NAMES: [&str; 13] = [
    "special-values",
    "prli-prmi-duality",
    "additivity",
    "classical-bound",
    "identity-channel",
    "bsc-phases",
    "threshold-closed-forms",
    "fixed-points",
    "achievability",
    "exponent-trend",
    "cc-reduction",
    "channel-forms",
    "universal-sandwich",
];

struct Sizes {
    states: usize,
    pairs: usize,
    joints: usize,
    embedded: usize,
    channels: usize,
}

impl Sizes {
    fn of(level: Level) -> Self {
        match level {
            Level::Full => Sizes { states: 20, pairs: 3, joints: 200, embedded: 10, channels: 50 },
            Level::Fast => Sizes { states: 8, pairs: 1, joints: 50, embedded: 4, channels: 10 },
        }
    }
}

/// Doubly minimised optimisers collected by checks 1-3 for check 8.
#[derive(Default)]
struct Certificates {
    points: Vec<(BipartiteState, f64, DensityMatrix, DensityMatrix)>,
}

impl Certificates {
    fn record(&mut self, state: &BipartiteState, alpha: f64, res: &crate::MeasureResult) {
        if let (true, Some(s), Some(t)) = (res.converged, &res.optimizer_sigma, &res.optimizer_tau) {
            self.points.push((state.clone(), alpha, s.clone(), t.clone()));
        }
    }
}

fn verdict(measured: f64, tol: f64, what: &str) -> (bool, String) {
    (measured <= tol, format!("{what} {measured:.3e} <= {tol:.0e}"))
}

fn solver() -> SolverOptions {
    SolverOptions { tol: 1e-13, restarts: 4, ..SolverOptions::default() }
}

fn random_states(count: usize, seed: u64) -> Vec<BipartiteState> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| BipartiteState::new(random_full_rank_density(4, &mut rng), 2, 2).expect("two-qubit state"))
        .collect()
}

fn copy_cc_uniform(k: usize) -> BipartiteState {
    let mut p = vec![0.0; k * k];
    for x in 0..k {
        p[x * k + x] = 1.0 / k as f64;
    }
    classical_state(&p, k, k).expect("copy-CC state")
}

fn bell() -> BipartiteState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let psi = [Complex64::new(h, 0.0), z, z, Complex64::new(h, 0.0)];
    BipartiteState::new(DensityMatrix::pure(&psi).expect("Bell state"), 2, 2).expect("two qubits")
}

fn value(r: Result<crate::MeasureResult>) -> Result<(f64, crate::MeasureResult)> {
    let r = r?;
    Ok((r.value.value(), r))
}

fn check_special_values(sz: &Sizes, tol: &Tolerances, cert: &mut Certificates) -> Result<(bool, String)> {
    let opts = solver();
    let (mut gap, mut small) = (0.0f64, 0.0f64);
    for st in random_states(sz.states, 101) {
        let (l, r) = value(prli(&st, Variant::Doubly, 0.5, &opts))?;
        cert.record(&st, 0.5, &r);
        let (i, _) = value(prmi_direct(&st, Variant::Doubly, 0.5, &opts))?;
        gap = gap.max((l - i).abs());
        let (l0, r0) = value(prli(&st, Variant::Doubly, 1e-3, &opts))?;
        cert.record(&st, 1e-3, &r0);
        small = small.max(l0);
    }
    let (a, da) = verdict(gap, tol.half_order_gap, "max |L_1/2 - I_1/2|");
    let (b, db) = verdict(small, tol.small_order_value, "max L_0.001");
    Ok((a && b, format!("{da}; {db}")))
}

fn check_duality(sz: &Sizes, tol: &Tolerances, cert: &mut Certificates) -> Result<(bool, String)> {
    let opts = solver();
    let mut worst = 0.0f64;
    for st in random_states(sz.states, 101) {
        for alpha in [0.1, 0.2, 0.3, 0.4, 0.45] {
            let (l, r) = value(prli(&st, Variant::Doubly, alpha, &opts))?;
            cert.record(&st, alpha, &r);
            let (i, _) = value(prmi_direct(&st, Variant::Doubly, 1.0 - alpha, &opts))?;
            worst = worst.max((l - alpha / (1.0 - alpha) * i).abs());
        }
    }
    Ok(verdict(worst, tol.duality, "max |L_a - a/(1-a) I_(1-a)|"))
}

fn check_additivity(sz: &Sizes, tol: &Tolerances, cert: &mut Certificates) -> Result<(bool, String)> {
    let opts = solver();
    let states = random_states(2 * sz.pairs, 303);
    let mut worst = 0.0f64;
    for pair in states.chunks(2) {
        let joint = pair[0].tensor(&pair[1]);
        for alpha in [0.1, 0.25, 0.4, 0.5, 1.0] {
            let (a, ra) = value(prli(&pair[0], Variant::Doubly, alpha, &opts))?;
            let (b, rb) = value(prli(&pair[1], Variant::Doubly, alpha, &opts))?;
            let (ab, rab) = value(prli(&joint, Variant::Doubly, alpha, &opts))?;
            if alpha < 1.0 {
                cert.record(&pair[0], alpha, &ra);
                cert.record(&pair[1], alpha, &rb);
                cert.record(&joint, alpha, &rab);
            }
            if a.is_finite() && b.is_finite() && ab.is_finite() {
                worst = worst.max((ab - a - b).abs());
            }
        }
    }
    Ok(verdict(worst, tol.additivity, "max additivity defect"))
}

fn check_classical_bound(sz: &Sizes, tol: &Tolerances) -> Result<(bool, String)> {
    let copts = ClassicalOptions::default();
    let mut tight = 0.0f64;
    for k in [2usize, 3] {
        let target = (k as f64).ln();
        let st = copy_cc_uniform(k);
        let q = tumula_information(&st, &solver())?.value.value();
        let joint = JointDistribution::new(k, k, st.rho.diag())?;
        let c = classical_tumula(&joint, &copts).value.value();
        tight = tight.max((q - target).abs()).max((c - target).abs());
    }
    let mut rng = seeded(404);
    let mut excess = f64::NEG_INFINITY;
    for i in 0..sz.joints {
        let (nx, ny) = (2 + i % 3, 2 + (i / 3) % 3);
        let p = JointDistribution::new(nx, ny, random_probability(nx * ny, &mut rng))?;
        let t = classical_tumula(&p, &copts).value.value();
        excess = excess.max(t - tumula_upper_bound(&p));
    }
    let (a, da) = verdict(tight, tol.bound_tightness, "max |T(P) - log|X||");
    let (b, db) = verdict(excess.max(0.0), tol.bound_slack, "max bound excess");
    Ok((a && b, format!("{da}; {db} over {} joints", sz.joints)))
}

fn check_identity(tol: &Tolerances) -> Result<(bool, String)> {
    let mut exact = true;
    let mut numeric = 0.0f64;
    for k in [2usize, 3, 4] {
        let w = ClassicalChannel::identity(k);
        let target = (k as f64).ln();
        let a = classical_channel_tumula(&w, &ChannelOptions::default())?.value.value();
        exact &= a == target;
        let opts = ChannelOptions { shortcuts: false, ..ChannelOptions::default() };
        let n = classical_channel_tumula(&w, &opts)?.value.value();
        numeric = numeric.max((n - target).abs());
    }
    let (b, db) = verdict(numeric, tol.identity_numeric, "numeric max |T - log|X||");
    Ok((exact && b, format!("analytic path exact: {exact}; {db}")))
}

fn check_bsc(tol: &Tolerances) -> Result<(bool, String)> {
    let rows = bsc_curve(&[1e-3, 0.02, 0.05, 0.08, 0.15, 0.25, 0.4], &ChannelOptions::default())?;
    let low = (rows[0].tumula - std::f64::consts::LN_2).abs();
    let min_gap = rows[1..4].iter().map(|r| r.umlaut - r.tumula).fold(f64::INFINITY, f64::min);
    let max_eq = rows[4..].iter().map(|r| (r.umlaut - r.tumula).abs()).fold(0.0, f64::max);
    let ok = max_eq <= tol.bsc_equal && min_gap >= tol.bsc_gap && low <= tol.bsc_low_noise;
    Ok((
        ok,
        format!(
            "max |T - U| (eps >= 0.15) {max_eq:.3e} <= {:.0e}; min U - T (eps <= 0.08) {min_gap:.3e} >= {:.0e}; |T - log 2| at 1e-3 {low:.3e} <= {}",
            tol.bsc_equal, tol.bsc_gap, tol.bsc_low_noise
        ),
    ))
}

fn check_thresholds(tol: &Tolerances) -> Result<(bool, String)> {
    let opts = solver();
    let mut worst = 0.0f64;
    for (st, kind) in [(bell(), ClosedFormKind::Pure), (copy_cc_uniform(2), ClosedFormKind::CopyCc)] {
        let num = thresholds(&st, &opts)?;
        let closed = closed_form_thresholds(kind, &st.marginal_a().eigh().values.iter().cloned().collect::<Vec<_>>())?;
        worst = worst.max((num.r_half - closed.r_half).abs()).max((num.r_half_l - closed.r_half_l).abs());
    }
    Ok(verdict(worst, tol.thresholds, "max |numeric - closed form|"))
}

fn check_fixed_points(tol: &Tolerances, cert: &Certificates) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (st, alpha, s, t) in &cert.points {
        worst = worst.max(fixed_point_residual(st, *alpha, s, t)?);
    }
    let (ok, d) = verdict(worst, tol.fixed_point, "max residual");
    Ok((ok && !cert.points.is_empty(), format!("{d} over {} optimisers", cert.points.len())))
}

fn check_achievability(tol: &Tolerances) -> Result<(bool, String)> {
    let states = [copy_cc_uniform(2), random_states(1, 909).remove(0)];
    let mut worst1 = f64::NEG_INFINITY;
    let mut worst2 = f64::NEG_INFINITY;
    let mut count = 0;
    for st in &states {
        for n in [1, 2] {
            for s in [0.3, 0.5] {
                for rate in [0.1, 0.3] {
                    let rec = achievability_test(st, n, rate, s, count)?;
                    worst1 = worst1.max(rec.type1 - rec.type1_bound);
                    worst2 = worst2.max(rec.type2_sampled - rec.type2_omega).max(rec.type2_omega - rec.type2_bound);
                    count += 1;
                }
            }
        }
    }
    let ok = worst1 <= tol.achievability && worst2 <= tol.achievability;
    Ok((
        ok,
        format!("max type-I excess {worst1:.3e}, max type-II excess {worst2:.3e} <= {:.0e} over {count} tests", tol.achievability),
    ))
}

/// Null `(0.9, 0, 0, 0.1)` on `|xx>`, alternative the product of its marginals.
pub const EXPONENT_PAIR: ([f64; 4], [f64; 4]) = ([0.9, 0.0, 0.0, 0.1], [0.81, 0.09, 0.09, 0.01]);
pub const EXPONENT_RATE: f64 = 0.05;

fn check_exponent_trend(tol: &Tolerances) -> Result<(bool, String)> {
    let (p, q) = EXPONENT_PAIR;
    let rate = EXPONENT_RATE;
    let state = classical_state(&p, 2, 2)?;
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let opts = solver();
    let curve = alpha_sweep(&state, Variant::Non, &grid, &opts)?;
    let f = |s: f64| prli(&state, Variant::Non, s, &opts).map(|r| r.value.value()).unwrap_or(f64::NAN);
    let query = ExponentQuery { family: Variant::Non, rate, curve, thresholds: None, tumula: None };
    let formula = reverse_direct_formula(&query, Some(&f))?.exponent;
    let mut points = Vec::new();
    for n in 4..=12 {
        points.push((n, classical_np_beta(&p, &q, n, (-(n as f64) * rate).exp())?));
    }
    let emp = empirical_exponent(&points)?;
    let gaps: Vec<f64> = [4usize, 8, 12].iter().map(|&n| (emp.slopes[n - 4] - formula).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + tol.exponent_monotone_slack);
    let extrapolated = emp.extrapolated.unwrap_or(f64::NAN);
    let gap = (extrapolated - formula).abs();
    Ok((
        gap <= tol.exponent_gap && monotone,
        format!(
            "formula {formula:.4}, extrapolated slope {extrapolated:.4}, gap {gap:.3e} <= {}; gaps at n=4,8,12 {:.3}, {:.3}, {:.3} shrinking: {monotone}",
            tol.exponent_gap, gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn check_cc_reduction(sz: &Sizes, tol: &Tolerances) -> Result<(bool, String)> {
    let qopts = solver();
    let copts = ClassicalOptions::default();
    let mut rng = seeded(1111);
    let mut worst = 0.0f64;
    for i in 0..sz.embedded {
        let (nx, ny) = (2, 2 + i % 2);
        let p = JointDistribution::new(nx, ny, random_probability(nx * ny, &mut rng))?;
        let st = cc_embed(&p);
        for variant in [Variant::Non, Variant::Singly, Variant::Doubly] {
            for alpha in [0.2, 0.5, 1.0] {
                let q = prli(&st, variant, alpha, &qopts)?.value.value();
                let c = classical_prli(&p, variant, alpha, &copts)?.value.value();
                worst = worst.max((q - c).abs());
            }
        }
    }
    Ok(verdict(worst, tol.cc_reduction, "max |quantum - classical|"))
}

fn check_channel_forms(sz: &Sizes, tol: &Tolerances) -> Result<(bool, String)> {
    let opts = ChannelOptions { outer_grid: false, ..ChannelOptions::default() };
    let mut rng = seeded(1212);
    let mut forms = 0.0f64;
    for i in 0..sz.channels {
        let (nx, ny) = (2 + i % 2, 2 + (i / 2) % 2);
        let w = ClassicalChannel::new(nx, ny, random_stochastic(nx, ny, &mut rng))?;
        let r = classical_channel_tumula(&w, &opts)?;
        forms = forms.max((r.value.value() - r.cross_check.unwrap_or(f64::NAN)).abs());
    }
    let mut excess = f64::NEG_INFINITY;
    for i in 0..sz.channels {
        let outputs: Vec<DensityMatrix> = (0..2 + i % 2).map(|_| random_density(2, &mut rng)).collect();
        let ch = CqChannel::new(outputs)?;
        let t = cq_tumula(&ch, &opts)?.value.value();
        let u = cq_umlaut(&ch, &opts).value.value();
        excess = excess.max(t - u);
    }
    let (a, da) = verdict(forms, tol.channel_forms, "max |form 1 - form 2|");
    let ok = a && excess <= tol.channel_forms;
    Ok((ok, format!("{da}; max cq T - U {excess:.3e} <= {:.0e} over {} channels each", tol.channel_forms, sz.channels)))
}

fn check_sandwich(tol: &Tolerances) -> Result<(bool, String)> {
    let st = copy_cc_uniform(2);
    let t = tumula_information(&st, &solver())?.value.value();
    let seq = universal_state_sequence(&st, 2)?;
    let p = &seq[1];
    let ok = p.lower - tol.sandwich <= t && t <= p.upper + tol.sandwich;
    Ok((ok, format!("T = {t:.6} in [{:.4}, {:.4}] widened by {:.0e}", p.lower, p.upper, tol.sandwich)))
}

/// Runs the listed checks (all when `only` is empty) in order.
pub fn run_checks(level: Level, tol: &Tolerances, only: &[u8]) -> Vec<CheckOutcome> {
    let sz = Sizes::of(level);
    let mut cert = Certificates::default();
    let wanted = |id: u8| only.is_empty() || only.contains(&id) || (only.contains(&8) && id <= 3);
    let mut out = Vec::new();
    for id in 1..=13u8 {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let res = match id {
            1 => check_special_values(&sz, tol, &mut cert),
            2 => check_duality(&sz, tol, &mut cert),
            3 => check_additivity(&sz, tol, &mut cert),
            4 => check_classical_bound(&sz, tol),
            5 => check_identity(tol),
            6 => check_bsc(tol),
            7 => check_thresholds(tol),
            8 => check_fixed_points(tol, &cert),
            9 => check_achievability(tol),
            10 => check_exponent_trend(tol),
            11 => check_cc_reduction(&sz, tol),
            12 => check_channel_forms(&sz, tol),
            _ => check_sandwich(tol),
        };
        let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
        if only.is_empty() || only.contains(&id) {
            out.push(CheckOutcome {
                id,
                name: CHECK_NAMES[id as usize - 1],
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    out
}
