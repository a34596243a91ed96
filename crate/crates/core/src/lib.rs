//! Numerics for conditional mutual information of tripartite quantum states.
//!
//! * [`linalg`]: Hermitian spectral calculus, partial traces, trace norm.
//! * [`entropy`]: von Neumann / relative entropy and `I(A:C|B)` in bits.
//! * [`markov`]: the operator `M = ρ_AB^{1/2} ρ_B^{-1/2} ρ_BC^{1/2}`, its self-commutator,
//!   Kraus channels and the Petz transpose channel.
//! * [`checkers`]: the log, imaginary-power and `MM†` equality conditions, an
//!   exact Markov-state generator, and the D1/D2/D3 classifier.
//! * [`lab`]: random scans and a local search probing the conjectured
//!   trace-norm lower bounds on `I(A:C|B)`.
//! * [`io`], [`config`], [`report`]: file formats and the single-state report.
//!
//! Scans and searches run on rayon when the default `parallel` feature is
//! enabled and serially otherwise; both produce identical output.

pub mod checkers;
pub mod config;
pub mod entropy;
pub mod error;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod markov;
pub mod parallel;
pub mod random;
pub mod report;

pub use entropy::{Dims, ExtendedReal, TripartiteState};
pub use error::{Error, Result};
pub use linalg::{CMatrix, SupportPolicy, C64};
