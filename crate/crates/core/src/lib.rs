//! Multiplicative iterative solver for Fredholm integral equations of the
//! first kind, f(x) = ∫ k(x, θ) p(θ) dθ, with f, k given and p unknown.
//!
//! The core iteration p ← p·∫ k·f/f_p dx keeps every iterate a density and
//! decreases the Kullback–Leibler divergence D(f, f_p) at every step. Around
//! it sit reductions for signed problems ([`transforms`]), mixing-density
//! estimation from data ([`mixing`]) and first-passage-time densities of
//! Brownian motion ([`fpt`]).

pub mod densities;
pub mod error;
pub mod fpt;
pub mod grid;
pub mod kernels;
pub mod mixing;
pub mod solver;
pub mod special;
pub mod transforms;

pub use densities::Density;
pub use error::{Error, Result};
pub use grid::{kl_divergence, l1_distance, normalize_to_density, trapezoid_integrate, Grid1D, GridFunction};
pub use kernels::{KernelMatrix, KernelSpec, TabulatedKernel};
pub use solver::{solve, ProblemSpec, SolverOptions, SolverResult, StoppingRule, Termination};
