//! Tripartite states, von Neumann and relative entropy (in bits), and the
//! conditional mutual information `I(A:C|B) = S(AB) + S(BC) - S(ABC) - S(B)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, ensure_finite, ensure_square, hermiticity_defect, identity, partial_trace, spectral, tensor,
    CMatrix, SpectralDecomposition, SupportPolicy, C64,
};

/// Tolerance on Hermiticity, positivity and normalisation of a [`TripartiteState`].
pub const STATE_TOL: f64 = 1e-10;

/// Tolerance used by the entropy functions when accepting a generic operator
/// as a density matrix. Slightly looser than [`STATE_TOL`] since reconstructed
/// operators such as `MM†` carry a few ulps of drift per factor.
pub const DENSITY_TOL: f64 = 1e-9;

/// Squared kernel overlap above which `supp(ρ) ⊄ supp(σ)`.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// Raw CMI values in `[-CMI_CLAMP_TOL, 0)` are reported as zero.
pub const CMI_CLAMP_TOL: f64 = 1e-8;

/// Subsystem dimensions `(dA, dB, dC)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Dims {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::invalid_state(format!(
                "subsystem dimensions must be positive, got ({a}, {b}, {c})"
            )));
        }
        let total = a
            .checked_mul(b)
            .and_then(|ab| ab.checked_mul(c))
            .filter(|&t| t <= linalg::MAX_DIM);
        if total.is_none() {
            return Err(Error::Capacity {
                dim: a.saturating_mul(b).saturating_mul(c),
                max: linalg::MAX_DIM,
            });
        }
        Ok(Dims { a, b, c })
    }

    pub fn total(&self) -> usize {
        self.a * self.b * self.c
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.a, self.b, self.c]
    }

    /// Row index of the basis vector `|a⟩⊗|b⟩⊗|c⟩`.
    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.b + b) * self.c + c
    }

    /// `x ⊗ 1_C` for an operator `x` on AB.
    pub fn lift_ab(&self, x: &CMatrix) -> CMatrix {
        x.kronecker(&identity(self.c))
    }

    /// `1_A ⊗ x` for an operator `x` on BC.
    pub fn lift_bc(&self, x: &CMatrix) -> CMatrix {
        identity(self.a).kronecker(x)
    }

    /// `1_A ⊗ x ⊗ 1_C` for an operator `x` on B.
    pub fn lift_b(&self, x: &CMatrix) -> CMatrix {
        identity(self.a).kronecker(x).kronecker(&identity(self.c))
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, self.c)
    }
}

impl FromStr for Dims {
    type Err = Error;

    /// Accepts `2,2,2` or `2x2x2`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([',', 'x', 'X']).map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("expected three dimensions like 2,2,2, got {s:?}")));
        }
        let mut d = [0usize; 3];
        for (slot, p) in d.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Config(format!("bad dimension {p:?} in {s:?}")))?;
        }
        Dims::new(d[0], d[1], d[2])
    }
}

impl Serialize for Dims {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dims {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c] = <[usize; 3]>::deserialize(deserializer)?;
        Dims::new(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// A density matrix on `H_A ⊗ H_B ⊗ H_C` with basis ordering
/// `|a⟩⊗|b⟩⊗|c⟩ ↦ (a·dB + b)·dC + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteState {
    rho: CMatrix,
    dims: Dims,
}

impl TripartiteState {
    /// Validates shape, finiteness, Hermiticity, positivity and unit trace,
    /// each within [`STATE_TOL`].
    pub fn new(rho: CMatrix, dims: Dims) -> Result<Self> {
        let n = ensure_square(&rho, "state").map_err(|e| Error::invalid_state(e.to_string()))?;
        if n != dims.total() {
            return Err(Error::invalid_state(format!(
                "matrix is {n}x{n} but dims {dims} need {}",
                dims.total()
            )));
        }
        ensure_finite(&rho, "state").map_err(|e| Error::invalid_state(e.to_string()))?;
        let defect = hermiticity_defect(&rho);
        if defect > STATE_TOL {
            return Err(Error::invalid_state(format!(
                "not Hermitian: anti-Hermitian part {defect:.3e} exceeds {STATE_TOL:e}"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::invalid_state(format!(
                "trace is {} + {}i, expected 1",
                tr.re, tr.im
            )));
        }
        let sd = spectral(&rho, SupportPolicy::default())?;
        if sd.min_eigenvalue() < -STATE_TOL {
            return Err(Error::invalid_state(format!(
                "not positive semidefinite: minimum eigenvalue {:e}",
                sd.min_eigenvalue()
            )));
        }
        Ok(TripartiteState { rho, dims })
    }

    /// `Σ p_ijk |ijk⟩⟨ijk|`.
    pub fn from_diagonal(probs: &[f64], dims: Dims) -> Result<Self> {
        if probs.len() != dims.total() {
            return Err(Error::invalid_state(format!(
                "{} probabilities for a {}-dimensional space",
                probs.len(),
                dims.total()
            )));
        }
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| c64(p, 0.0)),
        ));
        TripartiteState::new(rho, dims)
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn from_pure(psi: &[C64], dims: Dims) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        TripartiteState::new(&v * v.adjoint(), dims)
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn into_parts(self) -> (CMatrix, Dims) {
        (self.rho, self.dims)
    }

    /// Reduced state on the listed factors (0 = A, 1 = B, 2 = C).
    pub fn marginal(&self, keep: &[usize]) -> CMatrix {
        partial_trace(&self.rho, &self.dims.as_array(), keep)
            .expect("dims were validated at construction")
    }

    pub fn rho_ab(&self) -> CMatrix {
        self.marginal(&[0, 1])
    }

    pub fn rho_bc(&self) -> CMatrix {
        self.marginal(&[1, 2])
    }

    pub fn rho_b(&self) -> CMatrix {
        self.marginal(&[1])
    }

    pub fn rho_a(&self) -> CMatrix {
        self.marginal(&[0])
    }

    pub fn rho_c(&self) -> CMatrix {
        self.marginal(&[2])
    }
}

/// A real number or `+∞`. Serialized as a JSON number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => serializer.serialize_f64(*v),
            ExtendedReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Ok(ExtendedReal::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(ExtendedReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Spectral decomposition of `rho` after checking it is a density matrix
/// within [`DENSITY_TOL`].
pub fn density_spectrum(rho: &CMatrix, policy: SupportPolicy) -> Result<SpectralDecomposition> {
    let sd = spectral(rho, policy)?;
    let trace: f64 = sd.eigenvalues.iter().sum();
    if (trace - 1.0).abs() > DENSITY_TOL {
        return Err(Error::domain(format!("density matrix has trace {trace}, expected 1")));
    }
    if sd.min_eigenvalue() < -DENSITY_TOL {
        return Err(Error::domain(format!(
            "density matrix has negative eigenvalue {:e}",
            sd.min_eigenvalue()
        )));
    }
    Ok(sd)
}

fn spectrum_entropy(sd: &SpectralDecomposition) -> f64 {
    let s: f64 = sd.eigenvalues[..sd.support_rank]
        .iter()
        .map(|&l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// `S(ρ) = -Tr ρ log2 ρ` in bits.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    von_neumann_entropy_with(rho, SupportPolicy::default())
}

pub fn von_neumann_entropy_with(rho: &CMatrix, policy: SupportPolicy) -> Result<f64> {
    Ok(spectrum_entropy(&density_spectrum(rho, policy)?))
}

/// `S(ρ‖σ) = Tr ρ(log2 ρ - log2 σ)`, or `+∞` when the support of `ρ` leaks
/// into the kernel of `σ` by more than [`SUPPORT_LEAK_TOL`].
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<ExtendedReal> {
    relative_entropy_with(rho, sigma, SupportPolicy::default())
}

pub fn relative_entropy_with(rho: &CMatrix, sigma: &CMatrix, policy: SupportPolicy) -> Result<ExtendedReal> {
    if rho.shape() != sigma.shape() {
        return Err(Error::shape(format!(
            "relative entropy of {:?} against {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    let r = density_spectrum(rho, policy)?;
    let s = density_spectrum(sigma, policy)?;

    // overlaps[(j, i)] = ⟨w_j|v_i⟩
    let overlaps = s.eigenvectors.adjoint() * &r.eigenvectors;
    let mut cross = 0.0;
    for i in 0..r.support_rank {
        let leak: f64 = (s.support_rank..s.dim()).map(|j| overlaps[(j, i)].norm_sqr()).sum();
        if leak > SUPPORT_LEAK_TOL {
            return Ok(ExtendedReal::Infinite);
        }
        let log_sigma: f64 = (0..s.support_rank)
            .map(|j| overlaps[(j, i)].norm_sqr() * s.eigenvalues[j].log2())
            .sum();
        cross += r.eigenvalues[i] * log_sigma;
    }
    let value = -spectrum_entropy(&r) - cross;
    // Klein: tiny negatives are roundoff
    let value = if (-DENSITY_TOL..0.0).contains(&value) { 0.0 } else { value };
    Ok(ExtendedReal::Finite(value))
}

/// The four entropies entering `I(A:C|B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmiBreakdown {
    pub s_abc: f64,
    pub s_ab: f64,
    pub s_bc: f64,
    pub s_b: f64,
}

impl CmiBreakdown {
    pub fn raw(&self) -> f64 {
        self.s_ab + self.s_bc - self.s_abc - self.s_b
    }

    /// The raw value, with numerically negative results in `[-1e-8, 0)` set to zero.
    pub fn clamped(&self) -> f64 {
        clamp_cmi(self.raw())
    }
}

pub fn clamp_cmi(raw: f64) -> f64 {
    if (-CMI_CLAMP_TOL..0.0).contains(&raw) {
        0.0
    } else {
        raw
    }
}

pub fn cmi_breakdown(s: &TripartiteState, policy: SupportPolicy) -> Result<CmiBreakdown> {
    Ok(CmiBreakdown {
        s_abc: von_neumann_entropy_with(s.rho(), policy)?,
        s_ab: von_neumann_entropy_with(&s.rho_ab(), policy)?,
        s_bc: von_neumann_entropy_with(&s.rho_bc(), policy)?,
        s_b: von_neumann_entropy_with(&s.rho_b(), policy)?,
    })
}

/// Raw `I(A:C|B)` in bits.
pub fn conditional_mutual_information(s: &TripartiteState) -> Result<f64> {
    Ok(cmi_breakdown(s, SupportPolicy::default())?.raw())
}

/// `ρ ⊗ σ` as a convenience for building product states.
pub fn product_state(parts: &[&CMatrix]) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1, 1);
    for p in parts {
        acc = tensor(&acc, p)?;
    }
    Ok(acc)
}
