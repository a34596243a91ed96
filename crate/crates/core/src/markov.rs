//! The operator `M = (ρ_AB^{1/2} ⊗ 1_C)(1_A ⊗ ρ_B^{-1/2} ⊗ 1_C)(1_A ⊗ ρ_BC^{1/2})`,
//! its Gram forms and self-commutator, Kraus channels and the Petz
//! transpose channel `Φ†_σ = Ad_{σ^{1/2}} ∘ Φ† ∘ Ad_{Φ(σ)^{-1/2}}`.
//!
//! `MM†` and `M†M` are the two Petz reconstructions of `ρ_ABC` from `ρ_AB`
//! and `ρ_BC`; both coincide with the state exactly when `I(A:C|B) = 0`.

use serde::{Deserialize, Serialize};

use crate::entropy::{cmi_breakdown, TripartiteState};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, factor_offsets, identity, matrix_function, max_abs, row_major_strides, trace_norm, CMatrix,
    MatrixFunction, SupportPolicy,
};

/// Tolerance on `Σ K†K = 1`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// A CPTP map `Φ(ρ) = Σ_μ K_μ ρ K_μ†` with `output_dim × input_dim` Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    input_dim: usize,
    output_dim: usize,
    kraus_ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(input_dim: usize, output_dim: usize, kraus_ops: Vec<CMatrix>) -> Result<Self> {
        if kraus_ops.is_empty() {
            return Err(Error::shape("a channel needs at least one Kraus operator"));
        }
        if let Some(k) = kraus_ops.iter().find(|k| k.shape() != (output_dim, input_dim)) {
            return Err(Error::shape(format!(
                "Kraus operator is {:?}, expected {:?}",
                k.shape(),
                (output_dim, input_dim)
            )));
        }
        let completeness = kraus_ops
            .iter()
            .fold(CMatrix::zeros(input_dim, input_dim), |acc, k| acc + k.adjoint() * k);
        let defect = max_abs(&(completeness - identity(input_dim)));
        if defect > COMPLETENESS_TOL {
            return Err(Error::domain(format!(
                "Kraus operators are not trace preserving: |Σ K†K - 1| = {defect:.3e}"
            )));
        }
        Ok(KrausChannel {
            input_dim,
            output_dim,
            kraus_ops,
        })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            input_dim: dim,
            output_dim: dim,
            kraus_ops: vec![identity(dim)],
        }
    }

    /// The partial trace over every factor of `dims` not in `keep`, one Kraus
    /// operator per basis state of the traced factors.
    pub fn partial_trace(dims: &[usize], keep: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::shape("factor dimensions must be positive"));
        }
        if let Some(&k) = keep.iter().find(|&&k| k >= dims.len()) {
            return Err(Error::shape(format!("factor index {k} out of range")));
        }
        let strides = row_major_strides(dims);
        let keep_list: Vec<usize> = (0..dims.len()).filter(|i| keep.contains(i)).collect();
        let trace_list: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let kept_off = factor_offsets(dims, &strides, &keep_list);
        let traced_off = factor_offsets(dims, &strides, &trace_list);
        let input_dim: usize = dims.iter().product();
        let output_dim = kept_off.len();

        let ops = traced_off
            .iter()
            .map(|&t| {
                let mut k = CMatrix::zeros(output_dim, input_dim);
                for (i, &o) in kept_off.iter().enumerate() {
                    k[(i, o + t)] = c64(1.0, 0.0);
                }
                k
            })
            .collect();
        KrausChannel::new(input_dim, output_dim, ops)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    /// `Φ(ρ)`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.input_dim, self.input_dim) {
            return Err(Error::shape(format!(
                "channel input must be {0}x{0}, got {1:?}",
                self.input_dim,
                rho.shape()
            )));
        }
        Ok(self
            .kraus_ops
            .iter()
            .fold(CMatrix::zeros(self.output_dim, self.output_dim), |acc, k| {
                acc + k * rho * k.adjoint()
            }))
    }

    /// `Φ†(X) = Σ K† X K`.
    pub fn apply_adjoint(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.output_dim, self.output_dim) {
            return Err(Error::shape(format!(
                "adjoint channel input must be {0}x{0}, got {1:?}",
                self.output_dim,
                x.shape()
            )));
        }
        Ok(self
            .kraus_ops
            .iter()
            .fold(CMatrix::zeros(self.input_dim, self.input_dim), |acc, k| {
                acc + k.adjoint() * x * k
            }))
    }
}

/// `σ^{1/2} Φ†(Φ(σ)^{-1/2} ω Φ(σ)^{-1/2}) σ^{1/2}`, inverses taken on the support.
pub fn petz_map(phi: &KrausChannel, sigma: &CMatrix, omega: &CMatrix, policy: SupportPolicy) -> Result<CMatrix> {
    if omega.shape() != (phi.output_dim(), phi.output_dim()) {
        return Err(Error::shape(format!(
            "omega must be {0}x{0}, got {1:?}",
            phi.output_dim(),
            omega.shape()
        )));
    }
    let image = phi.apply(sigma)?;
    let inv_sqrt = matrix_function(&image, MatrixFunction::InvSqrtOnSupport, policy)?;
    let inner = phi.apply_adjoint(&(&inv_sqrt * omega * &inv_sqrt))?;
    let sqrt_sigma = matrix_function(sigma, MatrixFunction::Sqrt, policy)?;
    Ok(&sqrt_sigma * inner * &sqrt_sigma)
}

/// `M`, its Gram forms and the self-commutator `[M, M†] = MM† - M†M`.
#[derive(Clone, Debug)]
pub struct MOperatorBundle {
    pub m: CMatrix,
    pub mm_dagger: CMatrix,
    pub m_dagger_m: CMatrix,
    pub commutator: CMatrix,
    pub commutator_trace_norm: f64,
}

pub fn build_m_bundle(s: &TripartiteState, policy: SupportPolicy) -> Result<MOperatorBundle> {
    let dims = s.dims();
    let sqrt_ab = matrix_function(&s.rho_ab(), MatrixFunction::Sqrt, policy)?;
    let inv_sqrt_b = matrix_function(&s.rho_b(), MatrixFunction::InvSqrtOnSupport, policy)?;
    let sqrt_bc = matrix_function(&s.rho_bc(), MatrixFunction::Sqrt, policy)?;

    let m = dims.lift_ab(&sqrt_ab) * dims.lift_b(&inv_sqrt_b) * dims.lift_bc(&sqrt_bc);
    let m_adj = m.adjoint();
    let mm_dagger = &m * &m_adj;
    let m_dagger_m = &m_adj * &m;
    let commutator = &mm_dagger - &m_dagger_m;
    let commutator_trace_norm = trace_norm(&commutator);
    Ok(MOperatorBundle {
        m,
        mm_dagger,
        m_dagger_m,
        commutator,
        commutator_trace_norm,
    })
}

/// The three quantities whose vanishing is equivalent for a tripartite state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovResiduals {
    /// `I(A:C|B)` in bits, clamped at zero within roundoff.
    pub cmi: f64,
    pub cmi_raw: f64,
    /// `‖ρ_ABC - MM†‖₁`
    pub dist_mm: f64,
    /// `‖ρ_ABC - M†M‖₁`
    pub dist_mdm: f64,
}

impl MarkovResiduals {
    pub fn max(&self) -> f64 {
        self.cmi.max(self.dist_mm).max(self.dist_mdm)
    }
}

pub fn theorem2_conditions(
    s: &TripartiteState,
    bundle: &MOperatorBundle,
    policy: SupportPolicy,
) -> Result<MarkovResiduals> {
    let cmi = cmi_breakdown(s, policy)?;
    Ok(MarkovResiduals {
        cmi: cmi.clamped(),
        cmi_raw: cmi.raw(),
        dist_mm: trace_norm(&(s.rho() - &bundle.mm_dagger)),
        dist_mdm: trace_norm(&(s.rho() - &bundle.m_dagger_m)),
    })
}
