//! Seeded random states, distributions and channels.

use crate::operator::{CMatrix, DensityMatrix};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let z = r[(k, k)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, k)] *= ph;
        }
    }
    q
}

/// Uniform point on the probability simplex (Dirichlet(1, ..., 1)).
pub fn random_probability(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Dirichlet eigenvalues in a Haar-random eigenbasis.
pub fn random_density(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let p = random_probability(d, rng);
    let u = haar_unitary(d, rng);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(d, p.iter().map(|&x| Complex64::new(x, 0.0))));
    DensityMatrix::from_psd(&u * diag * u.adjoint())
}

/// Induced-measure state `G G^dagger / Tr` from a square Ginibre matrix;
/// full rank with probability one.
pub fn random_full_rank_density(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    DensityMatrix::from_psd(&g * g.adjoint())
}

pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(d, 1, rng);
    DensityMatrix::from_psd(&g * g.adjoint())
}

/// Row-stochastic matrix with Dirichlet rows, row-major `nx * ny`.
pub fn random_stochastic(nx: usize, ny: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..nx).flat_map(|_| random_probability(ny, rng)).collect()
}
