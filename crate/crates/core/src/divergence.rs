//! Quantum and classical divergences and entropies.

use crate::error::{Error, Result};
use crate::operator::{eigh_unchecked, DensityMatrix, EigenDecomposition, HermitianOperator};
use serde::{Deserialize, Serialize, Serializer};

/// Tolerance used when deciding support inclusion and orthogonality.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinityReason {
    /// The first argument is not supported inside the second.
    SupportViolation,
    /// The arguments are orthogonal.
    Orthogonality,
}

/// A value in `[0, +inf]` (or `(-inf, +inf]`) that remembers why it is infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite(InfinityReason),
}

impl ExtendedReal {
    pub fn value(&self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => *v,
            ExtendedReal::Infinite(_) => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(*v),
            ExtendedReal::Infinite(_) => None,
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(f(v)),
            inf => inf,
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::io::serialize_f64_or_inf(&self.value(), s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SupportRelation {
    /// `rho << sigma`.
    pub absolutely_continuous: bool,
    /// `rho sigma = 0`.
    pub orthogonal: bool,
}

fn support_relation_eig(er: &EigenDecomposition, es: &EigenDecomposition) -> SupportRelation {
    let ker_s = es.kernel_projector();
    let pr = er.support_projector();
    let ps = es.support_projector();
    // rho << sigma  iff  Pi_sigma^perp rho Pi_sigma^perp vanishes
    let rho = er.compose(|l| l.max(0.0));
    let leak = eigh_unchecked(&(&ker_s * rho * &ker_s)).max();
    // orthogonal iff ||Pi_rho Pi_sigma||_op = 0
    let overlap = eigh_unchecked(&(&ps * pr * &ps)).max().max(0.0).sqrt();
    SupportRelation { absolutely_continuous: leak <= SUPPORT_TOL, orthogonal: overlap <= SUPPORT_TOL }
}

pub fn support_relation(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<SupportRelation> {
    same_dim(rho.dim(), sigma.dim())?;
    Ok(support_relation_eig(&rho.eigh(), &sigma.eigh()))
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("operators of dimension {a} and {b}")));
    }
    Ok(())
}

/// `sum_ij f(lambda_i) g(mu_j) |<u_i|v_j>|^2` over the supports of both
/// decompositions; this is `Tr[f(rho) g(sigma)]` with functions on the support.
fn spectral_pairing(er: &EigenDecomposition, es: &EigenDecomposition, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    let (cr, cs) = (er.cutoff(), es.cutoff());
    let n = er.values.len();
    let mut acc = 0.0;
    for i in 0..n {
        let li = er.values[i];
        if li <= cr {
            continue;
        }
        let fi = f(li);
        for j in 0..n {
            let mj = es.values[j];
            if mj <= cs {
                continue;
            }
            let ov = er.vectors.column(i).dotc(&es.vectors.column(j)).norm_sqr();
            acc += fi * g(mj) * ov;
        }
    }
    acc
}

fn xlogx_sum(e: &EigenDecomposition) -> f64 {
    let cut = e.cutoff();
    e.values.iter().filter(|&&l| l > cut).map(|&l| l * l.ln()).sum()
}

/// `D(rho||sigma) = Tr rho (log rho - log sigma)`, infinite unless `rho << sigma`.
/// `sigma` may be any positive semidefinite operator.
pub fn quantum_relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ExtendedReal> {
    same_dim(rho.dim(), sigma.dim())?;
    let (er, es) = (rho.eigh(), sigma.eigh());
    Ok(relative_entropy_eig(&er, &es))
}

pub(crate) fn relative_entropy_eig(er: &EigenDecomposition, es: &EigenDecomposition) -> ExtendedReal {
    if !support_relation_eig(er, es).absolutely_continuous {
        return ExtendedReal::Infinite(InfinityReason::SupportViolation);
    }
    let cross = spectral_pairing(er, es, |l| l, f64::ln);
    ExtendedReal::Finite(xlogx_sum(er) - cross)
}

/// `Q_alpha(rho||sigma) = Tr[rho^alpha sigma^(1-alpha)]` with powers on the support.
pub fn q_alpha(alpha: f64, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    Ok(spectral_pairing(&rho.eigh(), &sigma.eigh(), |l| l.powf(alpha), |m| m.powf(1.0 - alpha)))
}

/// Petz divergence `D_alpha = log Q_alpha / (alpha - 1)` for `alpha > 0`;
/// `alpha = 1` gives the relative entropy.
pub fn petz_divergence(alpha: f64, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ExtendedReal> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("Petz divergence needs alpha > 0, got {alpha}")));
    }
    same_dim(rho.dim(), sigma.dim())?;
    let (er, es) = (rho.eigh(), sigma.eigh());
    Ok(petz_eig(alpha, &er, &es))
}

pub(crate) fn petz_eig(alpha: f64, er: &EigenDecomposition, es: &EigenDecomposition) -> ExtendedReal {
    if alpha == 1.0 {
        return relative_entropy_eig(er, es);
    }
    let rel = support_relation_eig(er, es);
    if alpha < 1.0 && rel.orthogonal {
        return ExtendedReal::Infinite(InfinityReason::Orthogonality);
    }
    if alpha > 1.0 && !rel.absolutely_continuous {
        return ExtendedReal::Infinite(InfinityReason::SupportViolation);
    }
    let q = spectral_pairing(er, es, |l| l.powf(alpha), |m| m.powf(1.0 - alpha));
    ExtendedReal::Finite(q.ln() / (alpha - 1.0))
}

/// Order-zero limit `D_0(rho||sigma) = -log Tr[Pi_rho sigma]`.
pub fn petz_divergence_order_zero(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ExtendedReal> {
    same_dim(rho.dim(), sigma.dim())?;
    let (er, es) = (rho.eigh(), sigma.eigh());
    let t = spectral_pairing(&er, &es, |_| 1.0, |m| m);
    if t <= 0.0 || support_relation_eig(&er, &es).orthogonal {
        return Ok(ExtendedReal::Infinite(InfinityReason::Orthogonality));
    }
    Ok(ExtendedReal::Finite(-t.ln()))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    -xlogx_sum(&rho.eigh())
}

/// Renyi entropy `log Tr rho^alpha / (1 - alpha)` for `alpha` in `[-64, 64]`
/// or `alpha = +inf` (min-entropy); `alpha = 1` is the von Neumann entropy.
pub fn renyi_entropy(alpha: f64, rho: &DensityMatrix) -> Result<f64> {
    let e = rho.eigh();
    if alpha == f64::INFINITY {
        return Ok(-e.max().ln());
    }
    if !(-64.0..=64.0).contains(&alpha) {
        return Err(Error::Domain(format!("Renyi order {alpha} outside [-64, 64]")));
    }
    if alpha == 1.0 {
        return Ok(-xlogx_sum(&e));
    }
    let cut = e.cutoff();
    let s: f64 = e.values.iter().filter(|&&l| l > cut).map(|&l| l.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|&x| !(x >= -1e-12) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// `D(P||Q)` for probability vectors.
pub fn classical_relative_entropy(p: &[f64], q: &[f64]) -> Result<ExtendedReal> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    check_distribution(p, "P")?;
    check_distribution(q, "Q")?;
    Ok(classical_kl(p, q))
}

pub(crate) fn classical_kl(p: &[f64], q: &[f64]) -> ExtendedReal {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return ExtendedReal::Infinite(InfinityReason::SupportViolation);
        }
        acc += a * (a / b).ln();
    }
    ExtendedReal::Finite(acc)
}

/// Classical Petz (Renyi) divergence on unnormalised non-negative vectors.
pub(crate) fn classical_petz(alpha: f64, p: &[f64], q: &[f64]) -> ExtendedReal {
    if alpha == 1.0 {
        return classical_kl(p, q);
    }
    let mut s = 0.0;
    let mut overlap = false;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 && b > 0.0 {
            overlap = true;
            s += a.powf(alpha) * b.powf(1.0 - alpha);
        } else if a > 0.0 && alpha > 1.0 {
            return ExtendedReal::Infinite(InfinityReason::SupportViolation);
        }
    }
    if !overlap {
        return ExtendedReal::Infinite(InfinityReason::Orthogonality);
    }
    ExtendedReal::Finite(s.ln() / (alpha - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::CMatrix;
    use crate::random::{haar_unitary, random_density, random_full_rank_density, seeded};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn d(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    /// `rho -> sum_k K_k rho K_k^dagger` with Kraus operators cut from a Haar isometry.
    fn random_channel(rho: &DensityMatrix, kraus: usize, seed: u64) -> DensityMatrix {
        let dim = rho.dim();
        let u = haar_unitary(dim * kraus, &mut seeded(seed));
        let mut out = CMatrix::zeros(dim, dim);
        for k in 0..kraus {
            let kk = u.view((k * dim, 0), (dim, dim)).into_owned();
            out += &kk * rho.matrix() * kk.adjoint();
        }
        DensityMatrix::new(out).unwrap()
    }

    #[test]
    fn relative_entropy_of_diagonal_states() {
        let v = quantum_relative_entropy(d(&[0.5, 0.5]).operator(), d(&[0.25, 0.75]).operator()).unwrap();
        assert_relative_eq!(v.value(), 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln(), epsilon = 1e-13);
        let inf = quantum_relative_entropy(d(&[0.5, 0.5]).operator(), d(&[1.0, 0.0]).operator()).unwrap();
        assert_eq!(inf, ExtendedReal::Infinite(InfinityReason::SupportViolation));
        let zero = quantum_relative_entropy(d(&[1.0, 0.0]).operator(), d(&[0.5, 0.5]).operator()).unwrap();
        assert_relative_eq!(zero.value(), (2.0f64).ln(), epsilon = 1e-13);
    }

    #[test]
    fn petz_support_conventions() {
        let a = d(&[1.0, 0.0]);
        let b = d(&[0.0, 1.0]);
        assert_eq!(petz_divergence(0.5, a.operator(), b.operator()).unwrap(), ExtendedReal::Infinite(InfinityReason::Orthogonality));
        let c = d(&[0.5, 0.5]);
        assert_eq!(petz_divergence(2.0, c.operator(), a.operator()).unwrap(), ExtendedReal::Infinite(InfinityReason::SupportViolation));
        let half = petz_divergence(0.5, c.operator(), a.operator()).unwrap().value();
        assert_relative_eq!(half, (2.0f64).ln(), epsilon = 1e-13);
        assert!(petz_divergence(0.0, c.operator(), c.operator()).is_err());
        assert!(petz_divergence(-1.0, c.operator(), c.operator()).is_err());
    }

    #[test]
    fn support_relation_predicates() {
        let r = support_relation(d(&[1.0, 0.0]).operator(), d(&[0.5, 0.5]).operator()).unwrap();
        assert!(r.absolutely_continuous && !r.orthogonal);
        let r = support_relation(d(&[1.0, 0.0]).operator(), d(&[0.0, 1.0]).operator()).unwrap();
        assert!(!r.absolutely_continuous && r.orthogonal);
    }

    #[test]
    fn entropies() {
        let m = DensityMatrix::maximally_mixed(4);
        assert_relative_eq!(von_neumann_entropy(&m), (4.0f64).ln(), epsilon = 1e-12);
        for a in [0.0, 0.5, 2.0, f64::INFINITY] {
            assert_relative_eq!(renyi_entropy(a, &m).unwrap(), (4.0f64).ln(), epsilon = 1e-12);
        }
        let p = d(&[0.9, 0.1]);
        assert_relative_eq!(renyi_entropy(f64::INFINITY, &p).unwrap(), -(0.9f64).ln(), epsilon = 1e-13);
        assert!(renyi_entropy(100.0, &p).is_err());
    }

    #[test]
    fn classical_relative_entropy_validates() {
        assert!(classical_relative_entropy(&[0.5, 0.5], &[1.0]).is_err());
        assert!(classical_relative_entropy(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        let v = classical_relative_entropy(&[0.5, 0.5], &[0.25, 0.75]).unwrap().value();
        assert_relative_eq!(v, 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn order_zero_limit() {
        let r = d(&[1.0, 0.0]);
        let s = d(&[0.3, 0.7]);
        assert_relative_eq!(petz_divergence_order_zero(r.operator(), s.operator()).unwrap().value(), -(0.3f64).ln(), epsilon = 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn skew_symmetry(seed in 0u64..10_000, alpha in 0.05f64..0.95) {
            let mut rng = seeded(seed);
            let r = random_full_rank_density(3, &mut rng);
            let s = random_full_rank_density(3, &mut rng);
            let lhs = (1.0 - alpha) * petz_divergence(alpha, r.operator(), s.operator()).unwrap().value();
            let rhs = alpha * petz_divergence(1.0 - alpha, s.operator(), r.operator()).unwrap().value();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn monotone_in_order(seed in 0u64..10_000) {
            let mut rng = seeded(seed);
            let r = random_density(3, &mut rng);
            let s = random_full_rank_density(3, &mut rng);
            let vals: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.5, 2.0]
                .iter()
                .map(|&a| petz_divergence(a, r.operator(), s.operator()).unwrap().value())
                .collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-10));
        }

        #[test]
        fn commuting_case_is_classical(seed in 0u64..10_000, alpha in 0.05f64..2.0) {
            let mut rng = seeded(seed);
            let p = crate::random::random_probability(4, &mut rng);
            let q = crate::random::random_probability(4, &mut rng);
            let qv = petz_divergence(alpha, d(&p).operator(), d(&q).operator()).unwrap().value();
            let cv = classical_petz(alpha, &p, &q).value();
            prop_assert!((qv - cv).abs() <= 1e-9 * (1.0 + cv.abs()));
        }

        #[test]
        fn data_processing(seed in 0u64..10_000, alpha in 0.05f64..2.0) {
            let mut rng = seeded(seed);
            let r = random_density(3, &mut rng);
            let s = random_full_rank_density(3, &mut rng);
            let before = petz_divergence(alpha, r.operator(), s.operator()).unwrap().value();
            let (r2, s2) = (random_channel(&r, 3, seed + 1), random_channel(&s, 3, seed + 1));
            let after = petz_divergence(alpha, r2.operator(), s2.operator()).unwrap().value();
            prop_assert!(after <= before + 1e-9);
        }

        #[test]
        fn continuous_at_order_one(seed in 0u64..10_000) {
            let mut rng = seeded(seed);
            let r = random_full_rank_density(3, &mut rng);
            let s = random_full_rank_density(3, &mut rng);
            let at = quantum_relative_entropy(r.operator(), s.operator()).unwrap().value();
            for a in [1.0 - 1e-4, 1.0 + 1e-4] {
                let v = petz_divergence(a, r.operator(), s.operator()).unwrap().value();
                prop_assert!((v - at).abs() <= 1e-2);
            }
        }
    }
}
