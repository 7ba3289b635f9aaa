//! Hermitian operators, density matrices and the spectral toolkit everything
//! else is built on.
//!
//! Bipartite operators use the flat index `i * d_B + j` for `|i> (x) |j>`;
//! more generally the first tensor factor is the most significant digit.
//! Powers and logarithms are taken on the support: eigenvalues at or below
//! `1e-12 * max(lambda_max, 1e-300)` are treated as zero and mapped to zero.

use crate::error::{Error, Result};
use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues down to `-PSD_TOL` are admitted (and clamped) in states.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of a state's trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Relative support cutoff.
pub const SUPPORT_REL_CUTOFF: f64 = 1e-12;

/// Largest `d^n` for which the symmetric projector is materialised.
pub const SYM_DIM_LIMIT: usize = 4096;

pub fn support_cutoff(lambda_max: f64) -> f64 {
    SUPPORT_REL_CUTOFF * lambda_max.max(1e-300)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `Re Tr[A B]` without forming the product.
pub(crate) fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

/// Spectral decomposition with eigenvalues in ascending order; column `k`
/// of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn cutoff(&self) -> f64 {
        support_cutoff(self.max())
    }

    /// `V diag(f(lambda)) V^dagger` over all eigenvalues.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.compose_selected(|_| true, f)
    }

    /// Applies `f` on the support and maps the kernel to zero.
    pub fn compose_on_support(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let cut = self.cutoff();
        self.compose_selected(|l| l > cut, f)
    }

    fn compose_selected(&self, keep: impl Fn(f64) -> bool, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let cols: Vec<usize> = (0..self.values.len()).filter(|&k| keep(self.values[k])).collect();
        if cols.is_empty() {
            return CMatrix::zeros(n, n);
        }
        let v = self.vectors.select_columns(&cols);
        let mut w = v.clone();
        for (jj, &k) in cols.iter().enumerate() {
            let s = f(self.values[k]);
            w.column_mut(jj).scale_mut(s);
        }
        hermitian_part(&(w * v.adjoint()))
    }

    pub fn support_projector(&self) -> CMatrix {
        self.compose_on_support(|_| 1.0)
    }

    /// Projector onto the eigenvectors with eigenvalue `<= cutoff`.
    pub fn kernel_projector(&self) -> CMatrix {
        let cut = self.cutoff();
        self.compose_selected(|l| l <= cut, |_| 1.0)
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.values.iter().filter(|&&l| l > cut).count()
    }
}

/// Eigendecomposition without validation; the Hermitian part of `m` is used.
pub(crate) fn eigh_unchecked(m: &CMatrix) -> EigenDecomposition {
    let n = m.nrows();
    if n == 1 {
        return EigenDecomposition { values: vec![m[(0, 0)].re], vectors: CMatrix::identity(1, 1) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let order: Vec<usize> = (0..n)
        .sorted_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .collect();
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    EigenDecomposition { values, vectors }
}

/// Eigendecomposition of a Hermitian matrix (ascending eigenvalues).
pub fn eigh(m: &CMatrix) -> Result<EigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let asym = max_asymmetry(m);
    if asym > HERMITICITY_TOL * max_abs(m).max(1e-300) {
        return Err(Error::NotHermitian(asym));
    }
    Ok(eigh_unchecked(m))
}

/// Hermitian matrix, validated on construction and stored exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!("matrix is {}x{}", m.nrows(), m.ncols())));
        }
        let asym = max_asymmetry(&m);
        if asym > HERMITICITY_TOL * max_abs(&m).max(1e-300) {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self { m: hermitian_part(&m) })
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self { m: hermitian_part(&m) }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: CMatrix::identity(d, d) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    pub fn eigh(&self) -> EigenDecomposition {
        eigh_unchecked(&self.m)
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self { m: self.m.scale(s) }
    }
}

/// Scalar function applied through the spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction {
    /// `X^p` on the support; `p = 0` gives the support projector.
    Power(f64),
    /// Natural logarithm on the support.
    Log,
    /// Matrix exponential (every eigenvalue).
    Exp,
}

pub fn matrix_function_on_support(op: &HermitianOperator, f: MatrixFunction) -> Result<HermitianOperator> {
    let e = op.eigh();
    if !matches!(f, MatrixFunction::Exp) && e.min() < -PSD_TOL {
        return Err(Error::Domain(format!(
            "{f:?} of an operator with eigenvalue {:e}",
            e.min()
        )));
    }
    let m = match f {
        MatrixFunction::Power(p) => e.compose_on_support(|l| l.powf(p)),
        MatrixFunction::Log => e.compose_on_support(f64::ln),
        MatrixFunction::Exp => e.compose(f64::exp),
    };
    Ok(HermitianOperator { m })
}

/// Kronecker product `A (x) B`.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Partial trace keeping the listed subsystems (in their original order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but subsystem dims {:?} multiply to {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("keep list {keep:?} must be increasing indices below {}", dims.len())));
    }
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let mut kidx = vec![0usize; total];
    let mut tidx = vec![0usize; total];
    let mut dg = vec![0usize; dims.len()];
    for i in 0..total {
        digits(i, dims, &mut dg);
        let (mut a, mut t) = (0usize, 0usize);
        for s in 0..dims.len() {
            if keep.contains(&s) {
                a = a * dims[s] + dg[s];
            } else {
                t = t * dims[s] + dg[s];
            }
        }
        kidx[i] = a;
        tidx[i] = t;
    }
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..total {
        for j in 0..total {
            if tidx[i] == tidx[j] {
                out[(kidx[i], kidx[j])] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of `m`.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || perm.len() != dims.len() || !perm.iter().sorted().copied().eq(0..dims.len()) {
        return Err(Error::DimensionMismatch(format!("cannot permute {:?} by {:?}", dims, perm)));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut map = vec![0usize; total];
    let mut dg = vec![0usize; dims.len()];
    for (i, slot) in map.iter_mut().enumerate() {
        digits(i, dims, &mut dg);
        *slot = perm.iter().zip(&new_dims).fold(0, |acc, (&p, &d)| acc * d + dg[p]);
    }
    let mut out = CMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// `Tr_A[(S (x) 1) X]` for `S` on A and `X` on AB.
pub fn contract_a(s: &CMatrix, x: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(db, db);
    for a in 0..da {
        for cc in 0..da {
            let sv = s[(a, cc)];
            if sv == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..db {
                for b2 in 0..db {
                    out[(b, b2)] += sv * x[(cc * db + b, a * db + b2)];
                }
            }
        }
    }
    out
}

/// `Tr_B[(1 (x) T) X]` for `T` on B and `X` on AB.
pub fn contract_b(t: &CMatrix, x: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(da, da);
    for b in 0..db {
        for cc in 0..db {
            let tv = t[(b, cc)];
            if tv == Complex64::new(0.0, 0.0) {
                continue;
            }
            for a in 0..da {
                for a2 in 0..da {
                    out[(a, a2)] += tv * x[(a * db + cc, a2 * db + b)];
                }
            }
        }
    }
    out
}

/// Projector `{X >= 0}` onto the non-negative eigenspace; zero eigenvalues
/// (up to `1e-13` relative) count as non-negative. `1 - {X >= 0}` is `{X < 0}`.
pub fn nonneg_projector(x: &HermitianOperator) -> HermitianOperator {
    let e = x.eigh();
    let scale = e.values.iter().fold(0.0f64, |a, l| a.max(l.abs())).max(1e-300);
    let tol = 1e-13 * scale;
    let cols: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] >= -tol).collect();
    let n = x.dim();
    if cols.is_empty() {
        return HermitianOperator { m: CMatrix::zeros(n, n) };
    }
    let v = e.vectors.select_columns(&cols);
    HermitianOperator::from_raw(&v * v.adjoint())
}

/// `{X >= Y}`.
pub fn projector_geq(x: &HermitianOperator, y: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(nonneg_projector(&x.sub(y)?))
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn permutation_images(n: usize, d: usize) -> Vec<Vec<usize>> {
    // image[p][i]: basis index of U(pi_p)|i>
    let total = d.pow(n as u32);
    let dims = vec![d; n];
    let mut dg = vec![0usize; n];
    (0..n)
        .permutations(n)
        .map(|perm| {
            (0..total)
                .map(|i| {
                    digits(i, &dims, &mut dg);
                    perm.iter().fold(0, |acc, &p| acc * d + dg[p])
                })
                .collect()
        })
        .collect()
}

fn guard_sym(n: usize, d: usize, what: &str) -> Result<usize> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("{what}: n and d must be positive")));
    }
    if n > 4 {
        return Err(Error::ResourceGuard(format!("{what}: n = {n} exceeds 4")));
    }
    let total = (d as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > SYM_DIM_LIMIT as u64 {
        return Err(Error::ResourceGuard(format!("{what}: dimension {total} exceeds {SYM_DIM_LIMIT}")));
    }
    Ok(total as usize)
}

/// Orthogonal projector onto the symmetric subspace of `(C^d)^{(x) n}`.
pub fn symmetric_projector(n: usize, d: usize) -> Result<HermitianOperator> {
    let total = guard_sym(n, d, "symmetric projector")?;
    let images = permutation_images(n, d);
    let w = 1.0 / images.len() as f64;
    let mut p = CMatrix::zeros(total, total);
    for img in &images {
        for (j, &i) in img.iter().enumerate() {
            p[(i, j)] += c(w);
        }
    }
    Ok(HermitianOperator { m: p })
}

/// Universal permutation-invariant state on `n` copies of a `d`-level system.
#[derive(Clone, Debug)]
pub struct UniversalSymState {
    pub n: usize,
    pub d: usize,
    pub omega: DensityMatrix,
    /// Dimension of the symmetric subspace of `(C^d (x) C^d)^{(x) n}`.
    pub g: u64,
}

/// `omega = Tr_{A'^n}[P_sym] / g` for the symmetric projector on
/// `(A (x) A')^{(x) n}`, computed without materialising the projector.
pub fn universal_symmetric_state(n: usize, d: usize) -> Result<UniversalSymState> {
    let total = guard_sym(n, d * d, "universal symmetric state")?;
    let images = permutation_images(n, d * d);
    let dn = d.pow(n as u32);
    let dd = vec![d * d; n];
    let mut dg = vec![0usize; n];
    // split a combined index over (A A')^n into its A^n and A'^n parts
    let split: Vec<(usize, usize)> = (0..total)
        .map(|i| {
            digits(i, &dd, &mut dg);
            dg.iter().fold((0, 0), |(a, b), &x| (a * d + x / d, b * d + x % d))
        })
        .collect();
    let w = 1.0 / images.len() as f64;
    let mut omega = CMatrix::zeros(dn, dn);
    for img in &images {
        for (col, &row) in img.iter().enumerate() {
            let (ra, rb) = split[row];
            let (ca, cb) = split[col];
            if rb == cb {
                omega[(ra, ca)] += c(w);
            }
        }
    }
    let g = binomial((n + d * d - 1) as u64, n as u64);
    omega.scale_mut(1.0 / g as f64);
    let omega = DensityMatrix::new(omega)?;
    Ok(UniversalSymState { n, d, omega, g })
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    /// Validates hermiticity, positivity (eigenvalues `>= -1e-10`, clamped
    /// to zero) and unit trace (within `1e-10`).
    pub fn new(m: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(m)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let e = op.eigh();
        if e.min() < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", e.min())));
        }
        if e.min() < -1e-14 * e.max().max(1.0) {
            return Ok(Self { op: HermitianOperator { m: e.compose(|l| l.max(0.0)) } });
        }
        Ok(Self { op })
    }

    /// Internal constructor: symmetrises and rescales to unit trace.
    pub(crate) fn from_psd(m: CMatrix) -> Self {
        let m = hermitian_part(&m);
        let tr = trace_re(&m);
        Self { op: HermitianOperator { m: m.unscale(tr) } }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { op: HermitianOperator { m: CMatrix::identity(d, d).unscale(d as f64) } }
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p.len(), p.iter().map(|&x| c(x))));
        Self::new(m)
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Ok(Self::from_psd(&v * v.adjoint()))
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eigh(&self) -> EigenDecomposition {
        self.op.eigh()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self { op: HermitianOperator { m: tensor_product(self.matrix(), other.matrix()) } }
    }

    /// Diagonal entries (real parts).
    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix()[(i, i)].re).collect()
    }
}

/// State on `A (x) B` with explicit local dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    pub da: usize,
    pub db: usize,
    pub rho: DensityMatrix,
}

impl BipartiteState {
    pub fn new(rho: DensityMatrix, da: usize, db: usize) -> Result<Self> {
        if da * db != rho.dim() || da == 0 || db == 0 {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} does not factor as {}x{}",
                rho.dim(),
                da,
                db
            )));
        }
        Ok(Self { da, db, rho })
    }

    pub fn from_matrix(m: CMatrix, da: usize, db: usize) -> Result<Self> {
        Self::new(DensityMatrix::new(m)?, da, db)
    }

    pub fn product(sigma: &DensityMatrix, tau: &DensityMatrix) -> Self {
        Self { da: sigma.dim(), db: tau.dim(), rho: sigma.tensor(tau) }
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn marginal_a(&self) -> DensityMatrix {
        let id = CMatrix::identity(self.db, self.db);
        DensityMatrix::from_psd(contract_b(&id, self.matrix(), self.da, self.db))
    }

    pub fn marginal_b(&self) -> DensityMatrix {
        let id = CMatrix::identity(self.da, self.da);
        DensityMatrix::from_psd(contract_a(&id, self.matrix(), self.da, self.db))
    }

    /// Exchanges the roles of A and B.
    pub fn swap(&self) -> Self {
        let m = permute_subsystems(self.matrix(), &[self.da, self.db], &[1, 0]).expect("consistent dims");
        Self { da: self.db, db: self.da, rho: DensityMatrix::from_psd(m) }
    }

    /// `rho (x) rho'` regrouped as `(A A') : (B B')`.
    pub fn tensor(&self, other: &BipartiteState) -> Self {
        let m = tensor_product(self.matrix(), other.matrix());
        let dims = [self.da, self.db, other.da, other.db];
        let m = permute_subsystems(&m, &dims, &[0, 2, 1, 3]).expect("consistent dims");
        Self { da: self.da * other.da, db: self.db * other.db, rho: DensityMatrix::from_psd(m) }
    }

    /// `rho^{(x) n}` regrouped as `A^n : B^n`.
    pub fn tensor_power(&self, n: usize) -> Self {
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }
}

/// Embeds a joint distribution as the diagonal state `sum p(x,y) |xy><xy|`.
pub fn classical_state(p: &[f64], nx: usize, ny: usize) -> Result<BipartiteState> {
    if p.len() != nx * ny {
        return Err(Error::DimensionMismatch(format!("{} entries for a {}x{} joint", p.len(), nx, ny)));
    }
    BipartiteState::new(DensityMatrix::diagonal(p)?, nx, ny)
}
