//! Dense complex linear algebra on the operators that show up in the rest of
//! the crate: Hermitian spectral decompositions, functions of positive
//! operators restricted to their support, Kronecker products, partial traces,
//! the trace norm and the Lie–Trotter product.
//!
//! Matrices are plain `nalgebra::DMatrix<Complex<f64>>`. Every spectral
//! function goes through [`spectral`], which symmetrizes its input and
//! rejects matrices that are not Hermitian to working precision.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Largest operator dimension any routine will build.
pub const MAX_DIM: usize = 4096;

/// Relative tolerance on the anti-Hermitian part accepted by [`spectral`].
pub const HERMITICITY_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

pub(crate) fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::shape(format!("{what} is empty")));
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &CMatrix, what: &str) -> Result<()> {
    match m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::domain(format!(
            "{what} has a non-finite entry at ({}, {})",
            k % m.nrows(),
            k / m.nrows()
        ))),
    }
}

/// Largest modulus of the anti-Hermitian part, `max |(h - h†)/2|`.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let d = (h[(i, j)] - h[(j, i)].conj()).norm() * 0.5;
            worst = worst.max(d);
        }
    }
    worst
}

/// `(h + h†)/2`, or a domain error when the correction is larger than
/// [`HERMITICITY_TOL`] relative to the Frobenius norm of `h`.
pub fn hermitian_part(h: &CMatrix) -> Result<CMatrix> {
    ensure_square(h, "operator")?;
    ensure_finite(h, "operator")?;
    let defect = hermiticity_defect(h);
    let tol = HERMITICITY_TOL * h.norm();
    if defect > tol {
        return Err(Error::domain(format!(
            "operator is not Hermitian: anti-Hermitian part {defect:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok((h + h.adjoint()) * c64(0.5, 0.0))
}

/// Decides which eigenvalues count as zero.
///
/// An eigenvalue `λ` is treated as zero iff `λ <= relative_cutoff * dim * λ_max`,
/// where `λ_max` is the largest eigenvalue modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPolicy {
    pub relative_cutoff: f64,
}

impl Default for SupportPolicy {
    fn default() -> Self {
        SupportPolicy {
            relative_cutoff: 2f64.powi(-40),
        }
    }
}

impl SupportPolicy {
    pub fn new(relative_cutoff: f64) -> Result<Self> {
        if !(relative_cutoff > 0.0 && relative_cutoff < 1.0) {
            return Err(Error::Config(format!(
                "support cutoff must lie in (0, 1), got {relative_cutoff}"
            )));
        }
        Ok(SupportPolicy { relative_cutoff })
    }

    /// Cutoff used when re-checking suspicious results.
    pub fn tight() -> Self {
        SupportPolicy {
            relative_cutoff: 2f64.powi(-52),
        }
    }

    pub fn threshold(&self, dim: usize, scale: f64) -> f64 {
        self.relative_cutoff * dim as f64 * scale
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: CMatrix,
    /// Number of eigenvalues strictly above [`Self::threshold`].
    pub support_rank: usize,
    pub threshold: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `U diag(f(λ, in_support)) U†`.
    pub fn map<F>(&self, f: F) -> CMatrix
    where
        F: Fn(f64, bool) -> C64,
    {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda, k < self.support_rank);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|lambda, _| c64(lambda, 0.0))
    }

    pub fn support_projector(&self) -> CMatrix {
        let support = self.eigenvectors.columns(0, self.support_rank);
        support * support.adjoint()
    }

    /// Columns spanning the numerical kernel (eigenvalues at or below the cutoff).
    pub fn kernel_vectors(&self) -> CMatrix {
        self.eigenvectors
            .columns(self.support_rank, self.dim() - self.support_rank)
            .into_owned()
    }

    pub fn apply(&self, f: MatrixFunction) -> Result<CMatrix> {
        if f.requires_psd() && self.min_eigenvalue() < -self.threshold {
            return Err(Error::domain(format!(
                "{f:?} needs a positive semidefinite operator, found eigenvalue {:e}",
                self.min_eigenvalue()
            )));
        }
        let out = match f {
            MatrixFunction::Sqrt => self.map(|l, s| if s { c64(l.sqrt(), 0.0) } else { C64::default() }),
            MatrixFunction::InvSqrtOnSupport => {
                self.map(|l, s| if s { c64(1.0 / l.sqrt(), 0.0) } else { C64::default() })
            }
            MatrixFunction::Log2OnSupport => {
                self.map(|l, s| if s { c64(l.log2(), 0.0) } else { C64::default() })
            }
            MatrixFunction::ImaginaryPower(t) => self.map(|l, s| {
                if s {
                    C64::from_polar(1.0, t * l.ln())
                } else {
                    C64::default()
                }
            }),
            MatrixFunction::Exp => self.map(|l, _| c64(l.exp(), 0.0)),
        };
        Ok(out)
    }
}

/// Spectral functions understood by [`matrix_function`]. All but `Exp` act on
/// the support only and send zero modes to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction {
    Sqrt,
    InvSqrtOnSupport,
    Log2OnSupport,
    /// `λ ↦ λ^{it} = exp(i t ln λ)`.
    ImaginaryPower(f64),
    Exp,
}

impl MatrixFunction {
    fn requires_psd(self) -> bool {
        !matches!(self, MatrixFunction::Exp)
    }
}

/// Hermitian eigen-decomposition. The input is symmetrized first.
pub fn spectral(h: &CMatrix, policy: SupportPolicy) -> Result<SpectralDecomposition> {
    let sym = hermitian_part(h)?;
    let n = sym.nrows();
    if n > MAX_DIM {
        return Err(Error::Capacity { dim: n, max: MAX_DIM });
    }
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);

    let scale = eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    let threshold = policy.threshold(n, scale);
    let support_rank = eigenvalues.iter().filter(|&&l| l > threshold).count();

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        support_rank,
        threshold,
    })
}

pub fn matrix_function(h: &CMatrix, f: MatrixFunction, policy: SupportPolicy) -> Result<CMatrix> {
    spectral(h, policy)?.apply(f)
}

/// Kronecker product, `(a ⊗ b)[(i·p+k, j·q+l)] = a[i,j]·b[k,l]` for `b` of shape `p×q`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => Ok(a.kronecker(b)),
        (r, c) => Err(Error::Capacity {
            dim: r.unwrap_or(usize::MAX).max(c.unwrap_or(usize::MAX)),
            max: MAX_DIM,
        }),
    }
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

/// Row-major offsets of every multi-index over `factors`, using `strides`.
pub(crate) fn factor_offsets(dims: &[usize], strides: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &base in &offsets {
            for digit in 0..dims[f] {
                next.push(base + digit * strides[f]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Traces out every tensor factor not listed in `keep`.
///
/// `dims` lists the factor dimensions in row-major order. The kept factors
/// appear in the output in their original order. An empty `keep` returns the
/// full trace as a 1×1 matrix.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = ensure_square(m, "partial trace input")?;
    if dims.contains(&0) {
        return Err(Error::shape("factor dimensions must be positive"));
    }
    let total: usize = dims.iter().product();
    if total != n {
        return Err(Error::shape(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix is {n}x{n}"
        )));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::shape(format!(
                "factor index {k} out of range for {} factors",
                dims.len()
            )));
        }
        kept[k] = true;
    }

    let strides = row_major_strides(dims);
    let keep_list: Vec<usize> = (0..dims.len()).filter(|&i| kept[i]).collect();
    let trace_list: Vec<usize> = (0..dims.len()).filter(|&i| !kept[i]).collect();
    let kept_off = factor_offsets(dims, &strides, &keep_list);
    let traced_off = factor_offsets(dims, &strides, &trace_list);

    let out_dim = kept_off.len();
    Ok(CMatrix::from_fn(out_dim, out_dim, |i, j| {
        let (ri, cj) = (kept_off[i], kept_off[j]);
        traced_off
            .iter()
            .fold(C64::default(), |acc, &t| acc + m[(ri + t, cj + t)])
    }))
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match SVD::try_new(m.clone(), false, false, f64::EPSILON, 0) {
        Some(svd) => svd.singular_values.iter().sum(),
        // sqrt of the spectrum of m†m; only reached if the SVD iteration stalls
        None => {
            let gram = m.adjoint() * m;
            spectral(&gram, SupportPolicy::default())
                .map(|sd| sd.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum())
                .unwrap_or(f64::NAN)
        }
    }
}

/// `m^n` by repeated squaring.
pub fn matrix_power(m: &CMatrix, mut n: u32) -> CMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Lie–Trotter approximation of `exp(a + b)`.
///
/// Plain: `[exp(a/n) exp(b/n)]^n`. Symmetric: `[exp(a/2n) exp(b/n) exp(a/2n)]^n`.
pub fn lie_trotter(a: &CMatrix, b: &CMatrix, n: u32, symmetric: bool) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::domain("Lie-Trotter step count must be positive"));
    }
    ensure_square(a, "a")?;
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "Lie-Trotter operands differ in shape: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let policy = SupportPolicy::default();
    let nf = n as f64;
    let exp_b = matrix_function(&(b / c64(nf, 0.0)), MatrixFunction::Exp, policy)?;
    let step = if symmetric {
        let half = matrix_function(&(a / c64(2.0 * nf, 0.0)), MatrixFunction::Exp, policy)?;
        &half * exp_b * &half
    } else {
        matrix_function(&(a / c64(nf, 0.0)), MatrixFunction::Exp, policy)? * exp_b
    };
    Ok(matrix_power(&step, n))
}
