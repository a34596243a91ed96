//! Derivative-free minimisation of the conjecture deficit.
//!
//! States are parametrised as `ρ = LL†/Tr(LL†)` with `L` lower triangular.
//! Each restart starts from a Hilbert–Schmidt sample (the same state a scan
//! with the same seed would draw at that index), takes its Cholesky factor and
//! then perturbs one complex entry at a time, keeping strict improvements.
//! After `stall_limit` consecutive rejections the step halves; a restart ends
//! when the step falls below `step_floor` or its share of the budget is spent.

use nalgebra::Cholesky;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_deficits, recheck_violation, sample_state, DeficitRecord, EvalSettings, Measure, Provenance, SampleConfig, ViolationCandidate};
use crate::entropy::{Dims, TripartiteState};
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};
use crate::parallel::map_indexed;
use crate::random::{complex_normal, stream_rng};

/// Offset separating descent streams from sampling streams of the same seed.
const DESCENT_STREAM: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub dims: Dims,
    /// Total number of deficit evaluations across all restarts.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub step_init: f64,
    pub stall_limit: usize,
    pub step_floor: f64,
}

impl SearchConfig {
    pub fn new(dims: Dims, budget: usize, restarts: usize, seed: u64) -> Self {
        SearchConfig {
            dims,
            budget,
            restarts,
            seed,
            step_init: 0.1,
            stall_limit: 20,
            step_floor: 1e-7,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.budget < self.restarts {
            return Err(Error::Config(format!(
                "search needs budget >= restarts >= 1, got budget {} and restarts {}",
                self.budget, self.restarts
            )));
        }
        if !(self.step_init > 0.0 && self.step_floor > 0.0) || self.stall_limit == 0 {
            return Err(Error::Config("step sizes and stall limit must be positive".into()));
        }
        Ok(())
    }

    fn share(&self, restart: usize) -> usize {
        self.budget / self.restarts + usize::from(restart < self.budget % self.restarts)
    }

    /// The scan whose first `restarts` states seed the restarts.
    pub fn seed_scan(&self) -> SampleConfig {
        SampleConfig {
            dims: self.dims,
            measure: Measure::HsInduced {
                env_dim: self.dims.total(),
            },
            count: self.restarts,
            seed: self.seed,
        }
    }
}

/// An accepted step (or a restart's starting point).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrailPoint {
    pub restart: usize,
    /// Evaluation counter within the restart, starting at 1.
    pub evaluation: usize,
    pub deficit_conj: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: DeficitRecord,
    pub best_state: TripartiteState,
    pub trail: Vec<TrailPoint>,
    pub evaluations: usize,
    pub candidate: Option<ViolationCandidate>,
}

struct RestartResult {
    best: DeficitRecord,
    best_state: TripartiteState,
    trail: Vec<TrailPoint>,
    evaluations: usize,
}

fn state_from_factor(l: &CMatrix, dims: Dims) -> Result<TripartiteState> {
    let rho = l * l.adjoint();
    let tr = rho.trace().re;
    let rho = rho / c64(tr, 0.0);
    TripartiteState::new((&rho + rho.adjoint()) * c64(0.5, 0.0), dims)
}

fn run_restart(cfg: &SearchConfig, settings: &EvalSettings, restart: usize) -> Result<RestartResult> {
    let n = cfg.dims.total();
    let share = cfg.share(restart);
    let id = |eval: usize| format!("search-{}-{restart}-{eval}", cfg.seed);
    let provenance = Some(Provenance {
        seed: cfg.seed,
        stream: restart as u64,
    });

    let start = sample_state(&cfg.seed_scan(), restart)?;
    let mut rng = stream_rng(cfg.seed, DESCENT_STREAM + restart as u64);
    let mut factor = match Cholesky::new(start.rho().clone()) {
        Some(ch) => ch.unpack(),
        // rank-deficient start: fall back to a random factor
        None => CMatrix::from_fn(n, n, |i, j| if i >= j { complex_normal(&mut rng) } else { c64(0.0, 0.0) }),
    };

    let mut best = evaluate_deficits(&start, id(1), settings)?;
    best.provenance = provenance;
    let mut best_state = start;
    let mut trail = vec![TrailPoint {
        restart,
        evaluation: 1,
        deficit_conj: best.deficit_conj,
        step: cfg.step_init,
    }];

    let coords: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let mut step = cfg.step_init;
    let mut stall = 0;
    let mut evaluations = 1;
    while evaluations < share && step >= cfg.step_floor {
        let (i, j) = coords[rng.random_range(0..coords.len())];
        let delta = complex_normal(&mut rng) * step;
        let mut trial = factor.clone();
        trial[(i, j)] += delta;
        evaluations += 1;

        let candidate = state_from_factor(&trial, cfg.dims)
            .and_then(|s| evaluate_deficits(&s, id(evaluations), settings).map(|r| (s, r)));
        match candidate {
            Ok((s, mut record)) if record.deficit_conj < best.deficit_conj => {
                record.provenance = provenance;
                factor = trial;
                best = record;
                best_state = s;
                stall = 0;
                trail.push(TrailPoint {
                    restart,
                    evaluation: evaluations,
                    deficit_conj: best.deficit_conj,
                    step,
                });
            }
            // a degenerate trial factor is just a rejected step
            _ => {
                stall += 1;
                if stall >= cfg.stall_limit {
                    step *= 0.5;
                    stall = 0;
                }
            }
        }
    }
    Ok(RestartResult {
        best,
        best_state,
        trail,
        evaluations,
    })
}

/// Runs every restart (in parallel when enabled) and returns the lowest
/// `deficit_conj` found, ties going to the earliest restart.
pub fn search_min_deficit(cfg: &SearchConfig, settings: &EvalSettings) -> Result<SearchOutcome> {
    cfg.validate()?;
    let results = map_indexed(cfg.restarts, |r| run_restart(cfg, settings, r));
    let mut trail = Vec::new();
    let mut evaluations = 0;
    let mut best: Option<(DeficitRecord, TripartiteState)> = None;
    for r in results {
        let r = r?;
        trail.extend(r.trail);
        evaluations += r.evaluations;
        if best.as_ref().is_none_or(|(b, _)| r.best.deficit_conj < b.deficit_conj) {
            best = Some((r.best, r.best_state));
        }
    }
    let (best, best_state) = best.expect("at least one restart");
    let candidate = recheck_violation(&best_state, &best, settings)?;
    Ok(SearchOutcome {
        best,
        best_state,
        trail,
        evaluations,
        candidate,
    })
}
