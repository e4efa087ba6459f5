//! Bayesian coreset construction.
//!
//! Given vectors `L_1, …, L_N` in an inner-product space, find sparse
//! nonnegative weights `w` such that `Σ w_n L_n ≈ Σ L_n`. The main
//! construction is greedy iterative geodesic ascent ([`giga`]), which scales
//! the weighted sum optimally at every step; [`baselines`] holds the
//! simplex-constrained Frank–Wolfe, importance sampling and uniform
//! subsampling constructions for comparison.
//!
//! Models are turned into vectors by [`embeddings`]; [`captree`] provides an
//! optional branch-and-bound search for the greedy selection step.

pub mod baselines;
pub mod captree;
pub mod embeddings;
pub mod error;
pub mod exec;
pub mod giga;
pub mod hilbert;
pub mod rng;

pub use error::{CoresetError, Result};
pub use exec::Execution;
pub use hilbert::{build_problem, CoresetProblem, DenseVector, WeightVector};
