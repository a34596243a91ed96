#![allow(dead_code)]

use markovscope::lab::{sample_state, Measure, SampleConfig};
use markovscope::linalg::c64;
use markovscope::{CMatrix, Dims, TripartiteState};
use nalgebra::{DMatrix, SymmetricEigen};

pub fn dims(a: usize, b: usize, c: usize) -> Dims {
    Dims::new(a, b, c).unwrap()
}

pub fn hs_state(d: Dims, env: usize, seed: u64) -> TripartiteState {
    let cfg = SampleConfig {
        dims: d,
        measure: Measure::HsInduced { env_dim: env },
        count: 1,
        seed,
    };
    sample_state(&cfg, 0).unwrap()
}

/// Eigenvalues of a Hermitian matrix through the real symmetric embedding
/// `[[X, -Y], [Y, X]]`, which repeats each eigenvalue twice.
pub fn oracle_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(real).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn oracle_entropy(rho: &CMatrix) -> f64 {
    oracle_eigenvalues(rho)
        .into_iter()
        .filter(|&l| l > 1e-300)
        .map(|l| -l * l.log2())
        .sum()
}

/// Trace norm of a Hermitian matrix as `Σ |λ|`.
pub fn oracle_hermitian_trace_norm(h: &CMatrix) -> f64 {
    oracle_eigenvalues(h).into_iter().map(f64::abs).sum()
}

/// Partial trace by explicit index loops over a row-major tensor layout.
pub fn oracle_partial_trace(m: &CMatrix, d: &[usize; 3], keep: &[usize]) -> CMatrix {
    let kept: usize = keep.iter().map(|&k| d[k]).product();
    let mut out = CMatrix::zeros(kept, kept);
    let flat = |i: [usize; 3]| (i[0] * d[1] + i[1]) * d[2] + i[2];
    let sub = |i: [usize; 3]| keep.iter().fold(0, |acc, &k| acc * d[k] + i[k]);
    for a in 0..d[0] {
        for b in 0..d[1] {
            for c in 0..d[2] {
                for a2 in 0..d[0] {
                    for b2 in 0..d[1] {
                        for c2 in 0..d[2] {
                            let (x, y) = ([a, b, c], [a2, b2, c2]);
                            if (0..3).any(|k| !keep.contains(&k) && x[k] != y[k]) {
                                continue;
                            }
                            out[(sub(x), sub(y))] += m[(flat(x), flat(y))];
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| if i == j { c64(values[i], 0.0) } else { c64(0.0, 0.0) })
}
