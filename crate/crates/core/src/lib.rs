//! Information-theoretic generalization error bounds for the quadratic
//! Gaussian location problem.
//!
//! The crate evaluates KL-divergence-based and mutual-information-based bounds
//! on the expected generalization error of noisy weighted-average estimators,
//! in the scalar setting and in the vector setting under a `‖·‖²_A` loss, and
//! ships an independent Monte Carlo oracle that every closed form is checked
//! against.
//!
//! Module map:
//!
//! - [`gaussian`]: Gaussian types, KL divergences, mutual information, CGFs.
//! - [`optim`]: one-dimensional infimum over λ (inverse Legendre dual).
//! - [`scalar`]: scalar problem model and every scalar bound family.
//! - [`vector`]: vector problem model, direct and decomposed bounds.
//! - [`mc`]: seeded, block-parallel Monte Carlo estimators.
//! - [`sweep`], [`report`], [`svg`]: the batch front-end used by the CLI.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod mc;
pub mod numeric;
pub mod optim;
pub mod report;
pub mod scalar;
pub mod svg;
pub mod sweep;
pub mod vector;

pub use error::{Error, Result};
pub use gaussian::{CgfSpec, MultivariateGaussian, ScalarGaussian};
pub use mc::McEstimate;
pub use optim::InfResult;
pub use scalar::{BoundFamily, BoundResult, ScalarLocationProblem};
pub use vector::{EigenDecomposition, VectorLocationProblem};
