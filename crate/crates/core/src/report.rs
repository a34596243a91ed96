//! Full single-state analysis, as emitted by `markovscope analyze`.

use serde::{Deserialize, Serialize};

use crate::checkers::{check_ruskai, classify, petz_t_profile, Classification, RuskaiCheck};
use crate::config::RunConfig;
use crate::entropy::{cmi_breakdown, CmiBreakdown, Dims, TripartiteState};
use crate::error::Result;
use crate::io::FORMAT_VERSION;
use crate::lab::{pinsker_identity_check, PinskerRecord, COMM_CONSTANT, CONJ_CONSTANT};
use crate::markov::{build_m_bundle, theorem2_conditions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetzPoint {
    pub t: f64,
    pub residual: f64,
}

/// Which residuals fall below `tol_check`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Saturation {
    pub cmi: bool,
    pub dist_mm: bool,
    pub dist_mdm: bool,
    pub ruskai: bool,
    pub petz_t: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u32,
    pub dims: Dims,
    pub entropies: CmiBreakdown,
    pub cmi: f64,
    pub cmi_raw: f64,
    pub dist_mm: f64,
    pub dist_mdm: f64,
    pub comm_norm: f64,
    pub deficit_conj: f64,
    pub deficit_comm: f64,
    pub ruskai: RuskaiCheck,
    pub petz_t: f64,
    pub petz_t_profile: Vec<PetzPoint>,
    pub saturated: Saturation,
    pub classification: Classification,
    pub pinsker: PinskerRecord,
    pub config: RunConfig,
}

pub fn analyze(s: &TripartiteState, cfg: &RunConfig) -> Result<AnalysisReport> {
    let policy = cfg.policy();
    let bundle = build_m_bundle(s, policy)?;
    let t2 = theorem2_conditions(s, &bundle, policy)?;
    let entropies = cmi_breakdown(s, policy)?;
    let ruskai = check_ruskai(s, policy)?;
    let profile: Vec<PetzPoint> = petz_t_profile(s, &cfg.t_grid, policy)?
        .into_iter()
        .map(|(t, residual)| PetzPoint { t, residual })
        .collect();
    let petz_t = profile.iter().map(|p| p.residual).fold(0.0, f64::max);
    let comm_norm = bundle.commutator_trace_norm;
    let tol = cfg.tol_check;
    Ok(AnalysisReport {
        format_version: FORMAT_VERSION,
        dims: s.dims(),
        entropies,
        cmi: t2.cmi,
        cmi_raw: t2.cmi_raw,
        dist_mm: t2.dist_mm,
        dist_mdm: t2.dist_mdm,
        comm_norm,
        deficit_conj: t2.cmi - CONJ_CONSTANT * t2.dist_mm.powi(2).max(t2.dist_mdm.powi(2)),
        deficit_comm: t2.cmi - COMM_CONSTANT * comm_norm.powi(2),
        ruskai,
        petz_t,
        petz_t_profile: profile,
        saturated: Saturation {
            cmi: t2.cmi < tol,
            dist_mm: t2.dist_mm < tol,
            dist_mdm: t2.dist_mdm < tol,
            ruskai: ruskai.residual < tol,
            petz_t: petz_t < tol,
        },
        classification: classify(s, &bundle, cfg.eta_comm, cfg.eta_state),
        pinsker: pinsker_identity_check(s, policy)?,
        config: cfg.clone(),
    })
}

pub const ANALYSIS_CSV_COLUMNS: [&str; 10] = [
    "cmi",
    "dist_mm",
    "dist_mdm",
    "comm_norm",
    "deficit_conj",
    "deficit_comm",
    "ruskai",
    "petz_t",
    "class_label",
    "pinsker_residual",
];

impl AnalysisReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.cmi,
            self.dist_mm,
            self.dist_mdm,
            self.comm_norm,
            self.deficit_conj,
            self.deficit_comm,
            self.ruskai.residual,
            self.petz_t,
            self.classification.label,
            self.pinsker
                .identity_residual
                .map_or_else(|| "NA".to_string(), |r| r.to_string()),
        )
    }
}
