//! Fisher linear discriminant analysis on the Grassmann manifold.
//!
//! The crate solves `min_R −tr(RᵀΣ_B R) / tr(RᵀΣ_W R)` over orthonormal
//! `R ∈ ℝ^{m×p}` with proxy matrix optimization (gradient descent on an
//! unconstrained matrix whose polar retraction is the iterate), alongside the
//! generalized-eigenvector baseline and the two-step tangent-project/retract
//! descent. [`bench`] reproduces dimension and projection-rank sweeps on
//! synthetic Gaussian data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod datagen;
pub mod error;
pub mod grassmann;
pub mod lda;
pub mod optim;

pub use error::{GildaError, Result};
pub use grassmann::{is_on_manifold, retract, riemannian_gradient, tangent_project, AmbientMatrix, GrassmannPoint};
pub use lda::{
    eigenvector_solution, objective_gradient, scatter_matrices, trace_ratio_objective, LabeledDataset, ScatterPair,
};
pub use optim::{
    pmo_optimize, pmo_optimize_observed, retraction_vjp, two_step_optimize, two_step_optimize_observed, OptConfig, OptRun,
    TraceEntry,
};
