//! Sparse Bayesian reconstruction for linear inverse problems `g = Hf + ε`.
//!
//! The crate provides two estimators for Student-t hierarchical models:
//!
//! * [`jmap`]: joint maximum a posteriori estimation by exact alternating
//!   minimization of the negative log posterior [`model::neg_log_posterior`].
//! * [`vba`]: posterior means through a separable variational approximation,
//!   with either multivariate Gaussian factors (partial separability) or
//!   scalar factors (full separability).
//!
//! Sparsity is either imposed on `f` directly (two-level model) or on a
//! latent `z` with `f = Dz + ξ` (three-level model). Both models are
//! described by a [`ForwardProblem`]; the presence of `D` selects the model.
//!
//! The [`priors`] module collects heavy-tailed densities around the
//! Generalized Hyperbolic family, the modified Bessel function of the second
//! kind they are built on, and quadrature oracles for the normal
//! variance-mean mixture identities. [`synth`] generates seeded test problems.

// NaN-rejecting `!(x > 0.0)` checks and full-precision tabulated constants are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod jmap;
pub mod linalg;
pub mod model;
pub mod priors;
pub mod quadrature;
pub mod synth;
pub mod vba;

pub use error::{Error, Result};
pub use jmap::{solve_jmap, Init, JmapConfig};
pub use model::{
    neg_log_posterior, validate_problem, ForwardProblem, HyperParams, ModelKind, RunTrace,
    SolverState, TraceRecord,
};
pub use vba::{solve_vba, Separability, VbaConfig};

pub use nalgebra::{DMatrix, DVector};
