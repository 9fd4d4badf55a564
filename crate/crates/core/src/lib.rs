//! Zero-error k-learnability of pure-state ensembles and factor width of
//! positive semidefinite matrices.
//!
//! The crate is layered bottom-up:
//!
//! * [`matrix`] dense Hermitian linear algebra (eigendecomposition, PSD tests,
//!   pivoted Gram factorization) and the [`StateList`] / [`Subspace`] types.
//! * [`conic`] block semidefinite programs in equality standard form and a
//!   primal-dual interior-point solver with a certified additive gap.
//! * [`incoherence`] membership, distance, decomposition and optimization over
//!   the set of trace-bounded k-incoherent matrices.
//! * [`learnability`] Gram matrices, learnability decisions and POVM
//!   extraction for lists of states.
//! * [`clique`] the clique-to-optimization reduction.
//! * [`cli`] the `learnwidth` command-line front end.

pub mod clique;
pub mod cli;
pub mod conic;
pub mod error;
pub mod incoherence;
pub mod io;
pub mod learnability;
pub mod matrix;
pub mod subsets;

pub use error::{Error, Result};
pub use matrix::{HermitianMatrix, StateList, Subspace, C64};
