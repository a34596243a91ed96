//! Run configuration shared by every command. Loaded from TOML or JSON;
//! command-line flags override individual keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkers::{DEFAULT_ETA_COMM, DEFAULT_ETA_STATE, DEFAULT_T_GRID};
use crate::entropy::Dims;
use crate::error::{Error, Result};
use crate::io::parse_error;
use crate::lab::{EvalSettings, Measure, SampleConfig, SearchConfig};
use crate::linalg::SupportPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    HsInduced,
    ClassicalDirichlet,
    MarkovPerturbed,
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hs_induced" | "hs" => Ok(MeasureKind::HsInduced),
            "classical_dirichlet" | "classical" => Ok(MeasureKind::ClassicalDirichlet),
            "markov_perturbed" | "markov" => Ok(MeasureKind::MarkovPerturbed),
            other => Err(Error::Config(format!(
                "unknown measure {other:?} (expected hs_induced, classical_dirichlet or markov_perturbed)"
            ))),
        }
    }
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureKind::HsInduced => "hs_induced",
            MeasureKind::ClassicalDirichlet => "classical_dirichlet",
            MeasureKind::MarkovPerturbed => "markov_perturbed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Coordinate-descent schedule for the deficit search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub budget: usize,
    pub restarts: usize,
    pub step_init: f64,
    pub stall_limit: usize,
    pub step_floor: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            budget: 10_000,
            restarts: 10,
            step_init: 0.1,
            stall_limit: 20,
            step_floor: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dims: Dims,
    pub seed: u64,
    pub count: usize,
    pub measure: MeasureKind,
    /// Environment dimension for `hs_induced`; defaults to `dA·dB·dC`.
    pub env_dim: Option<usize>,
    pub noise_scale: f64,
    pub t_grid: Vec<f64>,
    /// Relative support cutoff.
    pub tol_support: f64,
    /// A checker residual below this counts as saturated.
    pub tol_check: f64,
    pub eta_comm: f64,
    pub eta_state: f64,
    /// Deficits below `-violation_threshold` trigger the tight re-evaluation.
    pub violation_threshold: f64,
    pub search: SearchSettings,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dims: Dims { a: 2, b: 2, c: 2 },
            seed: 1,
            count: 1000,
            measure: MeasureKind::HsInduced,
            env_dim: None,
            noise_scale: 1e-3,
            t_grid: DEFAULT_T_GRID.to_vec(),
            tol_support: SupportPolicy::default().relative_cutoff,
            tol_check: 1e-7,
            eta_comm: DEFAULT_ETA_COMM,
            eta_state: DEFAULT_ETA_STATE,
            violation_threshold: 1e-6,
            search: SearchSettings::default(),
            out: None,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| parse_error(&text, e.span().map(|s| s.start), e.message().to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_support", self.tol_support),
            ("tol_check", self.tol_check),
            ("eta_comm", self.eta_comm),
            ("eta_state", self.eta_state),
            ("violation_threshold", self.violation_threshold),
            ("search.step_init", self.search.step_init),
            ("search.step_floor", self.search.step_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        SupportPolicy::new(self.tol_support)?;
        if self.count == 0 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if self.env_dim == Some(0) {
            return Err(Error::Config("env_dim must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Config(format!("noise_scale must be >= 0, got {}", self.noise_scale)));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("t_grid must be a non-empty list of finite values".into()));
        }
        if self.search.restarts == 0 || self.search.budget < self.search.restarts {
            return Err(Error::Config(format!(
                "search needs budget >= restarts >= 1, got budget {} and restarts {}",
                self.search.budget, self.search.restarts
            )));
        }
        if self.search.stall_limit == 0 {
            return Err(Error::Config("search.stall_limit must be at least 1".into()));
        }
        Dims::new(self.dims.a, self.dims.b, self.dims.c)?;
        Ok(())
    }

    pub fn policy(&self) -> SupportPolicy {
        SupportPolicy {
            relative_cutoff: self.tol_support,
        }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            policy: self.policy(),
            eta_comm: self.eta_comm,
            eta_state: self.eta_state,
            violation_threshold: self.violation_threshold,
        }
    }

    pub fn measure(&self) -> Measure {
        match self.measure {
            MeasureKind::HsInduced => Measure::HsInduced {
                env_dim: self.env_dim.unwrap_or(self.dims.total()),
            },
            MeasureKind::ClassicalDirichlet => Measure::ClassicalDirichlet,
            MeasureKind::MarkovPerturbed => Measure::MarkovPerturbed {
                noise_scale: self.noise_scale,
            },
        }
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            dims: self.dims,
            measure: self.measure(),
            count: self.count,
            seed: self.seed,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            dims: self.dims,
            budget: self.search.budget,
            restarts: self.search.restarts,
            seed: self.seed,
            step_init: self.search.step_init,
            stall_limit: self.search.stall_limit,
            step_floor: self.search.step_floor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.env_dim = Some(3);
        cfg.out = Some(PathBuf::from("out/scan.jsonl"));
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eta_comm = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.search.budget = 3;
        cfg.search.restarts = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.t_grid.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_errors_have_positions() {
        let dir = std::env::temp_dir().join(format!("markovscope-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.toml");
        std::fs::write(&p, "seed = 3\ncount = \"many\"\n").unwrap();
        match RunConfig::load(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "seed = 3\nbogus = 1\n").unwrap();
        assert!(matches!(RunConfig::load(&p), Err(Error::Parse { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn measure_names() {
        assert_eq!("classical".parse::<MeasureKind>().unwrap(), MeasureKind::ClassicalDirichlet);
        assert_eq!("markov-perturbed".parse::<MeasureKind>().unwrap(), MeasureKind::MarkovPerturbed);
        assert!("gaussian".parse::<MeasureKind>().is_err());
    }
}
