//! Randomized probes of the conjectured lower bounds
//!
//! ```text
//! I(A:C|B) >= 1/(2 ln 2) · max(‖ρ - MM†‖₁², ‖ρ - M†M‖₁²)
//! I(A:C|B) >= 1/(8 ln 2) · ‖[M, M†]‖₁²
//! ```
//!
//! plus the commuting-marginal identity `I(A:C|B) = S(ρ‖MM†)` and the
//! recovery-strengthened monotonicity inequality for general channels.
//!
//! Every sample is a pure function of `(seed, index)`: index `i` draws from
//! its own ChaCha stream, so scans give the same records serially and in
//! parallel.

mod search;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::checkers::{build_markov_state, classify, ClassLabel};
use crate::entropy::{relative_entropy_with, Dims, ExtendedReal, TripartiteState};
use crate::error::{Error, Result};
use crate::io::StateFile;
use crate::linalg::{c64, commutator, spectral, trace_norm, CMatrix, SupportPolicy};
use crate::markov::{build_m_bundle, petz_map, theorem2_conditions, KrausChannel};
use crate::parallel::map_indexed;
use crate::random::{
    flat_dirichlet, hs_density, random_block_layout, random_hermitian, random_markov_spec, stream_rng,
};

pub use search::{search_min_deficit, SearchConfig, SearchOutcome, TrailPoint};

/// `1/(2 ln 2)`, the Pinsker constant in bits.
pub const CONJ_CONSTANT: f64 = 1.0 / (2.0 * LN_2);
/// `1/(8 ln 2)`.
pub const COMM_CONSTANT: f64 = 1.0 / (8.0 * LN_2);

/// Pairwise commutator norm below which the lifted marginals count as commuting.
pub const COMMUTING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    /// Haar-random pure state on `ABC ⊗ E`, `E` traced out.
    HsInduced { env_dim: usize },
    /// Flat-Dirichlet joint distribution placed on the diagonal.
    ClassicalDirichlet,
    /// Random exact Markov state plus a Hermitian kick of trace norm
    /// `noise_scale`, projected back onto the density matrices.
    MarkovPerturbed { noise_scale: f64 },
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::HsInduced { .. } => "hs_induced",
            Measure::ClassicalDirichlet => "classical_dirichlet",
            Measure::MarkovPerturbed { .. } => "markov_perturbed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub dims: Dims,
    pub measure: Measure,
    pub count: usize,
    pub seed: u64,
}

impl SampleConfig {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        match self.measure {
            Measure::HsInduced { env_dim: 0 } => Err(Error::Config("env_dim must be at least 1".into())),
            Measure::MarkovPerturbed { noise_scale } if noise_scale.is_nan() || noise_scale < 0.0 => {
                Err(Error::Config(format!("noise_scale must be >= 0, got {noise_scale}")))
            }
            _ => Ok(()),
        }
    }
}

/// Clips negative eigenvalues and renormalises.
fn project_to_density(h: &CMatrix) -> Result<CMatrix> {
    let sd = spectral(h, SupportPolicy::default())?;
    let total: f64 = sd.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let rho = sd.map(|l, _| c64(l.max(0.0) / total, 0.0));
    Ok((&rho + rho.adjoint()) * c64(0.5, 0.0))
}

/// The `index`-th state of the stream described by `cfg`.
pub fn sample_state(cfg: &SampleConfig, index: usize) -> Result<TripartiteState> {
    cfg.validate()?;
    if index >= cfg.count {
        return Err(Error::domain(format!("sample index {index} out of range for count {}", cfg.count)));
    }
    let dims = cfg.dims;
    let n = dims.total();
    let mut rng = stream_rng(cfg.seed, index as u64);
    match cfg.measure {
        Measure::HsInduced { env_dim } => TripartiteState::new(hs_density(n, env_dim, &mut rng), dims),
        Measure::ClassicalDirichlet => TripartiteState::from_diagonal(&flat_dirichlet(n, &mut rng), dims),
        Measure::MarkovPerturbed { noise_scale } => {
            let layout = random_block_layout(dims.b, None, &mut rng);
            let spec = random_markov_spec(dims.a, dims.c, &layout, &mut rng)?;
            let state = build_markov_state(&spec)?;
            if noise_scale == 0.0 {
                return Ok(state);
            }
            let kick = random_hermitian(n, &mut rng);
            let kick = &kick * c64(noise_scale / trace_norm(&kick), 0.0);
            TripartiteState::new(project_to_density(&(state.rho() + kick))?, dims)
        }
    }
}

/// Numerical settings for deficit evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub policy: SupportPolicy,
    pub eta_comm: f64,
    pub eta_state: f64,
    pub violation_threshold: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            policy: SupportPolicy::default(),
            eta_comm: crate::checkers::DEFAULT_ETA_COMM,
            eta_state: crate::checkers::DEFAULT_ETA_STATE,
            violation_threshold: 1e-6,
        }
    }
}

/// Where a record came from: the generator seed and the per-sample stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitRecord {
    pub state_id: String,
    /// CMI in bits, clamped at zero within roundoff.
    pub cmi: f64,
    pub cmi_raw: f64,
    pub dist_mm: f64,
    pub dist_mdm: f64,
    pub comm_norm: f64,
    /// `cmi - max(dist_mm², dist_mdm²)/(2 ln 2)`
    pub deficit_conj: f64,
    /// `cmi - comm_norm²/(8 ln 2)`
    pub deficit_comm: f64,
    pub class_label: ClassLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<Provenance>,
}

impl DeficitRecord {
    pub fn min_deficit(&self) -> f64 {
        self.deficit_conj.min(self.deficit_comm)
    }

    /// Recomputes both deficits from the stored parts.
    pub fn arithmetic_residual(&self) -> f64 {
        let conj = self.cmi - CONJ_CONSTANT * self.dist_mm.powi(2).max(self.dist_mdm.powi(2));
        let comm = self.cmi - COMM_CONSTANT * self.comm_norm.powi(2);
        (conj - self.deficit_conj).abs().max((comm - self.deficit_comm).abs())
    }
}

pub fn evaluate_deficits(
    s: &TripartiteState,
    state_id: impl Into<String>,
    settings: &EvalSettings,
) -> Result<DeficitRecord> {
    let bundle = build_m_bundle(s, settings.policy)?;
    let t2 = theorem2_conditions(s, &bundle, settings.policy)?;
    let class = classify(s, &bundle, settings.eta_comm, settings.eta_state);
    let comm_norm = bundle.commutator_trace_norm;
    Ok(DeficitRecord {
        state_id: state_id.into(),
        cmi: t2.cmi,
        cmi_raw: t2.cmi_raw,
        dist_mm: t2.dist_mm,
        dist_mdm: t2.dist_mdm,
        comm_norm,
        deficit_conj: t2.cmi - CONJ_CONSTANT * t2.dist_mm.powi(2).max(t2.dist_mdm.powi(2)),
        deficit_comm: t2.cmi - COMM_CONSTANT * comm_norm.powi(2),
        class_label: class.label,
        provenance: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinskerRecord {
    pub commuting: bool,
    /// Largest trace norm among the pairwise commutators of the lifted
    /// `ρ_AB`, `ρ_BC` and `ρ_B`.
    pub max_commutator_norm: f64,
    /// `|I(A:C|B) - S(ρ‖MM†)|`; absent when the marginals do not commute or
    /// the relative entropy is infinite.
    pub identity_residual: Option<f64>,
    /// `S(ρ‖MM†)` when the marginals commute.
    pub relative_entropy: Option<ExtendedReal>,
}

pub fn pinsker_identity_check(s: &TripartiteState, policy: SupportPolicy) -> Result<PinskerRecord> {
    let dims = s.dims();
    let ab = dims.lift_ab(&s.rho_ab());
    let bc = dims.lift_bc(&s.rho_bc());
    let b = dims.lift_b(&s.rho_b());
    let max_commutator_norm = [(&ab, &bc), (&ab, &b), (&bc, &b)]
        .iter()
        .map(|(x, y)| trace_norm(&commutator(x, y)))
        .fold(0.0, f64::max);
    let commuting = max_commutator_norm < COMMUTING_TOL;
    if !commuting {
        return Ok(PinskerRecord {
            commuting,
            max_commutator_norm,
            identity_residual: None,
            relative_entropy: None,
        });
    }
    let bundle = build_m_bundle(s, policy)?;
    let cmi = theorem2_conditions(s, &bundle, policy)?.cmi;
    let rel = relative_entropy_with(s.rho(), &bundle.mm_dagger, policy)?;
    Ok(PinskerRecord {
        commuting,
        max_commutator_norm,
        identity_residual: rel.finite().map(|r| (cmi - r).abs()),
        relative_entropy: Some(rel),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRecord {
    /// `S(ρ‖σ) - S(Φρ‖Φσ)`.
    pub dpi_gap: ExtendedReal,
    /// `‖ρ - Φ†_σ Φ(ρ)‖₁`.
    pub recovery_distance: f64,
    /// `dpi_gap - recovery_distance²/(2 ln 2)`. Probed, not asserted.
    pub modified_residual: ExtendedReal,
}

pub fn monotonicity_gap(
    rho: &CMatrix,
    sigma: &CMatrix,
    phi: &KrausChannel,
    policy: SupportPolicy,
) -> Result<MonotonicityRecord> {
    if rho.shape() != sigma.shape() {
        return Err(Error::shape(format!("rho is {:?}, sigma is {:?}", rho.shape(), sigma.shape())));
    }
    let phi_rho = phi.apply(rho)?;
    let phi_sigma = phi.apply(sigma)?;
    let recovered = petz_map(phi, sigma, &phi_rho, policy)?;
    let recovery_distance = trace_norm(&(rho - recovered));

    let before = relative_entropy_with(rho, sigma, policy)?;
    let Some(before) = before.finite() else {
        return Ok(MonotonicityRecord {
            dpi_gap: ExtendedReal::Infinite,
            recovery_distance,
            modified_residual: ExtendedReal::Infinite,
        });
    };
    let after = relative_entropy_with(&phi_rho, &phi_sigma, policy)?
        .finite()
        .ok_or_else(|| Error::Numeric("channel output escaped the support of Φ(σ)".into()))?;
    let gap = before - after;
    Ok(MonotonicityRecord {
        dpi_gap: ExtendedReal::Finite(gap),
        recovery_distance,
        modified_residual: ExtendedReal::Finite(gap - CONJ_CONSTANT * recovery_distance.powi(2)),
    })
}

/// A record that stayed below `-violation_threshold` after re-evaluation at
/// the tight support cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationCandidate {
    pub record: DeficitRecord,
    pub recheck: DeficitRecord,
    pub state: StateFile,
}

/// Re-evaluates a suspicious state at cutoff `2^-52` with every marginal
/// rebuilt from the stored matrix. Returns a candidate only if the violation
/// persists.
pub fn recheck_violation(
    state: &TripartiteState,
    record: &DeficitRecord,
    settings: &EvalSettings,
) -> Result<Option<ViolationCandidate>> {
    if record.min_deficit() >= -settings.violation_threshold {
        return Ok(None);
    }
    let (rho, dims) = state.clone().into_parts();
    let fresh = TripartiteState::new(rho, dims)?;
    let tight = EvalSettings {
        policy: SupportPolicy::tight(),
        ..*settings
    };
    let mut recheck = evaluate_deficits(&fresh, record.state_id.clone(), &tight)?;
    recheck.provenance = record.provenance;
    if recheck.min_deficit() >= -settings.violation_threshold {
        return Ok(None);
    }
    Ok(Some(ViolationCandidate {
        record: record.clone(),
        recheck,
        state: StateFile::from_state(&fresh),
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub count: usize,
    pub measure: String,
    pub min_deficit_conj: f64,
    pub min_deficit_conj_id: String,
    pub min_deficit_comm: f64,
    pub min_deficit_comm_id: String,
    pub max_cmi: f64,
    pub class_histogram: BTreeMap<ClassLabel, usize>,
    /// Records below `-violation_threshold` before re-evaluation.
    pub flagged: usize,
    pub violation_candidates: usize,
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub records: Vec<DeficitRecord>,
    pub candidates: Vec<ViolationCandidate>,
    pub summary: ScanSummary,
}

pub fn state_id(measure: &Measure, seed: u64, index: usize) -> String {
    format!("{}-{seed}-{index}", measure.name())
}

fn scan_one(cfg: &SampleConfig, settings: &EvalSettings, index: usize) -> Result<(DeficitRecord, Option<ViolationCandidate>)> {
    let s = sample_state(cfg, index)?;
    let mut record = evaluate_deficits(&s, state_id(&cfg.measure, cfg.seed, index), settings)?;
    record.provenance = Some(Provenance {
        seed: cfg.seed,
        stream: index as u64,
    });
    let candidate = recheck_violation(&s, &record, settings)?;
    Ok((record, candidate))
}

/// Evaluates every sample of `cfg`. Records come back in index order.
pub fn scan(cfg: &SampleConfig, settings: &EvalSettings) -> Result<ScanOutcome> {
    cfg.validate()?;
    let results = map_indexed(cfg.count, |i| scan_one(cfg, settings, i));
    let mut records = Vec::with_capacity(cfg.count);
    let mut candidates = Vec::new();
    for r in results {
        let (record, candidate) = r?;
        records.push(record);
        candidates.extend(candidate);
    }
    let summary = summarize(cfg.measure.name(), &records, candidates.len(), settings);
    Ok(ScanOutcome {
        records,
        candidates,
        summary,
    })
}

pub fn summarize(measure: &str, records: &[DeficitRecord], candidates: usize, settings: &EvalSettings) -> ScanSummary {
    let argmin = |f: fn(&DeficitRecord) -> f64| {
        records
            .iter()
            .min_by(|a, b| f(a).total_cmp(&f(b)))
            .map(|r| (f(r), r.state_id.clone()))
            .unwrap_or((f64::NAN, String::new()))
    };
    let (min_deficit_conj, min_deficit_conj_id) = argmin(|r| r.deficit_conj);
    let (min_deficit_comm, min_deficit_comm_id) = argmin(|r| r.deficit_comm);
    let mut class_histogram = BTreeMap::new();
    for r in records {
        *class_histogram.entry(r.class_label).or_insert(0) += 1;
    }
    ScanSummary {
        count: records.len(),
        measure: measure.to_string(),
        min_deficit_conj,
        min_deficit_conj_id,
        min_deficit_comm,
        min_deficit_comm_id,
        max_cmi: records.iter().map(|r| r.cmi).fold(f64::NEG_INFINITY, f64::max),
        class_histogram,
        flagged: records
            .iter()
            .filter(|r| r.min_deficit() < -settings.violation_threshold)
            .count(),
        violation_candidates: candidates,
    }
}
