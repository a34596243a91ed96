//! Random states, Hermitian matrices, channels and block layouts.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::checkers::{MarkovBlock, MarkovBlockSpec};
use crate::error::{Error, Result};
use crate::linalg::{c64, matrix_function, CMatrix, MatrixFunction, SupportPolicy, C64};
use crate::markov::KrausChannel;

/// Deterministic generator for stream `stream` of `seed`. Distinct streams
/// of one seed are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal: real and imaginary parts i.i.d. N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order fixed
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Haar-random unit vector.
pub fn haar_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Density matrix from the Hilbert–Schmidt-induced measure: a Haar-random
/// pure state on `H ⊗ H_E` with `E` traced out.
///
/// Reshaping the pure state into a `dim × env_dim` matrix `G` gives
/// `Tr_E |ψ⟩⟨ψ| = G G†`.
pub fn hs_density<R: Rng + ?Sized>(dim: usize, env_dim: usize, rng: &mut R) -> CMatrix {
    let psi = haar_pure(dim * env_dim, rng);
    let g = CMatrix::from_fn(dim, env_dim, |i, e| psi[i * env_dim + e]);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho / c64(tr, 0.0)
}

/// GUE-like Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

/// Flat Dirichlet draw on the `n`-simplex.
pub fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Random CPTP map with `n_kraus` Kraus operators, from a Gaussian isometry
/// `V = G (G†G)^{-1/2}` cut into `output_dim`-row blocks.
pub fn random_channel<R: Rng + ?Sized>(
    input_dim: usize,
    output_dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if n_kraus * output_dim < input_dim {
        return Err(Error::domain(format!(
            "{n_kraus} Kraus operators of {output_dim} rows cannot form a channel on dimension {input_dim}"
        )));
    }
    let g = ginibre(n_kraus * output_dim, input_dim, rng);
    let gram = g.adjoint() * &g;
    let v = &g * matrix_function(&gram, MatrixFunction::InvSqrtOnSupport, SupportPolicy::default())?;
    let ops = (0..n_kraus)
        .map(|k| v.rows(k * output_dim, output_dim).into_owned())
        .collect();
    KrausChannel::new(input_dim, output_dim, ops)
}

/// Random decomposition of `db` into blocks `(dim_bL, dim_bR)` with
/// `Σ dim_bL·dim_bR = db`. With `blocks = None` the block count is itself random.
pub fn random_block_layout<R: Rng + ?Sized>(db: usize, blocks: Option<usize>, rng: &mut R) -> Vec<(usize, usize)> {
    let k = blocks.unwrap_or_else(|| rng.random_range(1..=db)).clamp(1, db);
    let mut cuts: Vec<usize> = index::sample(rng, db - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(db)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
        .into_iter()
        .map(|s| {
            let divisors: Vec<usize> = (1..=s).filter(|d| s % d == 0).collect();
            let bl = divisors[rng.random_range(0..divisors.len())];
            (bl, s / bl)
        })
        .collect()
}

/// Markov block data with the given `(dim_bL, dim_bR)` layout, full-rank
/// block states from the Hilbert–Schmidt measure and flat-Dirichlet weights.
pub fn random_markov_spec<R: Rng + ?Sized>(
    da: usize,
    dc: usize,
    layout: &[(usize, usize)],
    rng: &mut R,
) -> Result<MarkovBlockSpec> {
    let weights = flat_dirichlet(layout.len(), rng);
    let blocks = layout
        .iter()
        .zip(weights)
        .map(|(&(bl, br), p)| MarkovBlock {
            p,
            rho_left: hs_density(da * bl, da * bl, rng),
            rho_right: hs_density(br * dc, br * dc, rng),
            dim_bl: bl,
            dim_br: br,
        })
        .collect();
    MarkovBlockSpec::new(da, dc, blocks)
}
