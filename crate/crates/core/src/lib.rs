//! Numerical laboratory for the inviscid dyadic shell model
//!
//! ```text
//! dX_n/dt = k_{n-1} X_{n-1}^2 - k_n X_n X_{n+1},   k_n = 2^n
//! ```
//!
//! Modules:
//! - [`shell`]: state, vector field, energy, flux
//! - [`integrator`]: adaptive integration of the Galerkin truncation
//! - [`series`]: generating-function coefficients and the radius `R`
//! - [`selfsimilar`]: self-similar profiles, shooting and the critical `γ`
//! - [`experiments`]: dissipation, decay, blow-up and coalescence runs
//! - [`output`]: CSV/JSON artifacts

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiments;
pub mod integrator;
pub mod output;
pub mod selfsimilar;
pub mod series;
pub mod shell;

pub use error::{Error, Result};
pub use exec::Execution;
pub use integrator::{
    integrate, integrate_outcome, integrate_positive, variation_check, Boundary, IntegratorConfig,
    Method, Outcome, Termination, Trace,
};
pub use selfsimilar::{Classification, SelfSimilarProfile, TildeTrace};
pub use series::{RadiusReport, SeriesTable};
pub use shell::{energy, flux, rhs, wavenumber, EnergyDecomposition, ShellState};
