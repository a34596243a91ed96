//! Equality-condition checkers for vanishing conditional mutual information,
//! the block-structure generator for exact quantum Markov states, and the
//! D1/D2/D3 classification by `[M, M†]` and `ρ - MM†`.

use serde::{Deserialize, Serialize};

use crate::entropy::{Dims, TripartiteState, STATE_TOL};
use crate::error::{Error, Result};
use crate::io::complex_matrix;
use crate::linalg::{
    c64, hermiticity_defect, max_abs, spectral, trace_norm, CMatrix, MatrixFunction, SpectralDecomposition,
    SupportPolicy,
};
use crate::markov::MOperatorBundle;

/// Grid standing in for "all real t" in the imaginary-power condition.
pub const DEFAULT_T_GRID: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];

/// Tolerance on `Σ p_k = 1` for block weights.
pub const WEIGHT_TOL: f64 = 1e-12;

pub const DEFAULT_ETA_COMM: f64 = 1e-6;
pub const DEFAULT_ETA_STATE: f64 = 1e-6;

/// Residual of `log ρ_ABC + log ρ_B = log ρ_AB + log ρ_BC` on `supp(ρ_ABC)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuskaiCheck {
    pub residual: f64,
    /// Set when `supp(ρ_ABC)` differs from `supp(ρ_AB ⊗ 1) ∩ supp(1 ⊗ ρ_BC)`;
    /// the log identity is then only meaningful on the smaller space.
    pub degraded_support: bool,
}

fn intersection_projector(p1: &CMatrix, p2: &CMatrix) -> Result<CMatrix> {
    // v lies in both ranges iff ⟨v|(P1 + P2)/2|v⟩ = 1
    let avg = (p1 + p2) * c64(0.5, 0.0);
    let sd = spectral(&avg, SupportPolicy::default())?;
    let rank = sd.eigenvalues.iter().filter(|&&l| l > 1.0 - 1e-8).count();
    let cols = sd.eigenvectors.columns(0, rank);
    Ok(cols * cols.adjoint())
}

pub fn check_ruskai(s: &TripartiteState, policy: SupportPolicy) -> Result<RuskaiCheck> {
    let dims = s.dims();
    let sd_abc = spectral(s.rho(), policy)?;
    let sd_ab = spectral(&s.rho_ab(), policy)?;
    let sd_bc = spectral(&s.rho_bc(), policy)?;
    let sd_b = spectral(&s.rho_b(), policy)?;
    let log = |sd: &SpectralDecomposition| sd.apply(MatrixFunction::Log2OnSupport);

    let x = log(&sd_abc)? + dims.lift_b(&log(&sd_b)?) - dims.lift_ab(&log(&sd_ab)?) - dims.lift_bc(&log(&sd_bc)?);
    let p = sd_abc.support_projector();
    let residual = trace_norm(&(&p * x * &p));

    let degraded_support = if sd_abc.support_rank == sd_abc.dim() {
        false
    } else {
        let inter = intersection_projector(
            &dims.lift_ab(&sd_ab.support_projector()),
            &dims.lift_bc(&sd_bc.support_projector()),
        )?;
        max_abs(&(inter - &p)) > 1e-6
    };
    Ok(RuskaiCheck {
        residual,
        degraded_support,
    })
}

/// `‖ρ_ABC^{it} ρ_BC^{-it} - ρ_AB^{it} ρ_B^{-it}‖₁` for each `t` in the grid.
pub fn petz_t_profile(s: &TripartiteState, t_grid: &[f64], policy: SupportPolicy) -> Result<Vec<(f64, f64)>> {
    if t_grid.is_empty() {
        return Err(Error::domain("the t grid is empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !t.is_finite()) {
        return Err(Error::domain(format!("t grid contains non-finite value {t}")));
    }
    let dims = s.dims();
    let sd_abc = spectral(s.rho(), policy)?;
    let sd_ab = spectral(&s.rho_ab(), policy)?;
    let sd_bc = spectral(&s.rho_bc(), policy)?;
    let sd_b = spectral(&s.rho_b(), policy)?;

    t_grid
        .iter()
        .map(|&t| {
            let pow = |sd: &SpectralDecomposition, t: f64| sd.apply(MatrixFunction::ImaginaryPower(t));
            let lhs = pow(&sd_abc, t)? * dims.lift_bc(&pow(&sd_bc, -t)?);
            let rhs = dims.lift_ab(&pow(&sd_ab, t)?) * dims.lift_b(&pow(&sd_b, -t)?);
            Ok((t, trace_norm(&(lhs - rhs))))
        })
        .collect()
}

/// Worst residual of the imaginary-power condition over `t_grid`.
pub fn check_petz_t(s: &TripartiteState, t_grid: &[f64], policy: SupportPolicy) -> Result<f64> {
    Ok(petz_t_profile(s, t_grid, policy)?
        .into_iter()
        .fold(0.0, |acc, (_, r)| acc.max(r)))
}

/// One summand `p_k ρ_{A bL_k} ⊗ ρ_{bR_k C}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovBlock {
    pub p: f64,
    /// State on `A ⊗ bL`, ordered `a·dim_bl + l`.
    #[serde(with = "complex_matrix")]
    pub rho_left: CMatrix,
    /// State on `bR ⊗ C`, ordered `r·dC + c`.
    #[serde(with = "complex_matrix")]
    pub rho_right: CMatrix,
    pub dim_bl: usize,
    pub dim_br: usize,
}

/// Block data for `H_B = ⊕_k H_{bL_k} ⊗ H_{bR_k}`, `ρ = ⊕_k p_k ρ_{A bL_k} ⊗ ρ_{bR_k C}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarkovBlockSpec")]
pub struct MarkovBlockSpec {
    dim_a: usize,
    dim_c: usize,
    blocks: Vec<MarkovBlock>,
}

#[derive(Deserialize)]
struct RawMarkovBlockSpec {
    dim_a: usize,
    dim_c: usize,
    blocks: Vec<MarkovBlock>,
}

impl TryFrom<RawMarkovBlockSpec> for MarkovBlockSpec {
    type Error = Error;

    fn try_from(raw: RawMarkovBlockSpec) -> Result<Self> {
        MarkovBlockSpec::new(raw.dim_a, raw.dim_c, raw.blocks)
    }
}

fn check_block_state(rho: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::shape(format!("{what} is {:?}, expected {dim}x{dim}", rho.shape())));
    }
    crate::linalg::ensure_finite(rho, what).map_err(|e| Error::invalid_state(e.to_string()))?;
    if hermiticity_defect(rho) > STATE_TOL {
        return Err(Error::invalid_state(format!("{what} is not Hermitian")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::invalid_state(format!("{what} has trace {tr}")));
    }
    let min = spectral(rho, SupportPolicy::default())?.min_eigenvalue();
    if min < -STATE_TOL {
        return Err(Error::invalid_state(format!("{what} has negative eigenvalue {min:e}")));
    }
    Ok(())
}

impl MarkovBlockSpec {
    pub fn new(dim_a: usize, dim_c: usize, blocks: Vec<MarkovBlock>) -> Result<Self> {
        if dim_a == 0 || dim_c == 0 {
            return Err(Error::shape("dim_a and dim_c must be positive"));
        }
        if blocks.is_empty() {
            return Err(Error::shape("a Markov block spec needs at least one block"));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.dim_bl == 0 || b.dim_br == 0 {
                return Err(Error::shape(format!("block {k}: dim_bl and dim_br must be positive")));
            }
            if !(b.p >= 0.0 && b.p <= 1.0) {
                return Err(Error::invalid_state(format!("block {k}: weight {} outside [0, 1]", b.p)));
            }
            check_block_state(&b.rho_left, dim_a * b.dim_bl, &format!("block {k} rho_left"))?;
            check_block_state(&b.rho_right, b.dim_br * dim_c, &format!("block {k} rho_right"))?;
        }
        let total: f64 = blocks.iter().map(|b| b.p).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid_state(format!("block weights sum to {total}, expected 1")));
        }
        Ok(MarkovBlockSpec { dim_a, dim_c, blocks })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_c(&self) -> usize {
        self.dim_c
    }

    pub fn dim_b(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_bl * b.dim_br).sum()
    }

    pub fn blocks(&self) -> &[MarkovBlock] {
        &self.blocks
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.dim_a, self.dim_b(), self.dim_c)
    }
}

/// Assembles `⊕_k p_k ρ_{A bL_k} ⊗ ρ_{bR_k C}`. Block `k` occupies the B
/// indices `offset_k + l·dim_bR + r`, blocks in order.
pub fn build_markov_state(spec: &MarkovBlockSpec) -> Result<TripartiteState> {
    let dims = spec.dims()?;
    let (da, dc) = (spec.dim_a, spec.dim_c);
    let mut rho = CMatrix::zeros(dims.total(), dims.total());
    let mut offset = 0;
    for block in &spec.blocks {
        let (bl, br) = (block.dim_bl, block.dim_br);
        let weight = c64(block.p, 0.0);
        for a in 0..da {
            for l in 0..bl {
                for r in 0..br {
                    for c in 0..dc {
                        let row = dims.index(a, offset + l * br + r, c);
                        for a2 in 0..da {
                            for l2 in 0..bl {
                                let left = block.rho_left[(a * bl + l, a2 * bl + l2)];
                                for r2 in 0..br {
                                    for c2 in 0..dc {
                                        let col = dims.index(a2, offset + l2 * br + r2, c2);
                                        let right = block.rho_right[(r * dc + c, r2 * dc + c2)];
                                        rho[(row, col)] = weight * left * right;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        offset += bl * br;
    }
    TripartiteState::new(rho, dims)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    /// `ρ = MM†` and `[M, M†] = 0`.
    D1,
    /// `ρ ≠ MM†` but `[M, M†] = 0`.
    D2,
    /// `[M, M†] ≠ 0`.
    D3,
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassLabel::D1 => "D1",
            ClassLabel::D2 => "D2",
            ClassLabel::D3 => "D3",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: ClassLabel,
    /// `‖[M, M†]‖₁`
    pub comm_norm: f64,
    /// `‖ρ - MM†‖₁`
    pub state_distance: f64,
    pub eta_comm: f64,
    pub eta_state: f64,
}

/// D3 iff `‖[M,M†]‖₁ > eta_comm`; otherwise D1 iff `‖ρ - MM†‖₁ <= eta_state`, else D2.
pub fn classify(s: &TripartiteState, bundle: &MOperatorBundle, eta_comm: f64, eta_state: f64) -> Classification {
    let comm_norm = bundle.commutator_trace_norm;
    let state_distance = trace_norm(&(s.rho() - &bundle.mm_dagger));
    let label = if comm_norm > eta_comm {
        ClassLabel::D3
    } else if state_distance <= eta_state {
        ClassLabel::D1
    } else {
        ClassLabel::D2
    };
    Classification {
        label,
        comm_norm,
        state_distance,
        eta_comm,
        eta_state,
    }
}
