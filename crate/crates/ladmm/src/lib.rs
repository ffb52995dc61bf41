//! Linearized ADMM solvers for nonconvex penalized regression.
//!
//! The library fits models of the form
//! `min_beta sum_i L(y_i - x_i' beta) + P(|beta|)` where `L` is a smooth
//! quantile, quantile, least-squares, or Huber loss and `P` combines a
//! SCAD, MCP, capped-L1, or L1 sparsity term with a ridge term. Both the
//! beta step and the residual step reduce to closed-form proximal
//! operators, so each iteration costs two matrix-vector products.
//!
//! Modules:
//! - [`loss`], [`penalty`]: validated specs with values, gradients, proxes.
//! - [`linalg`]: dense row-major kernels, power-method spectral bounds,
//!   row partitioning.
//! - [`solver`]: the sequential iteration with convergence diagnostics
//!   (augmented-Lagrangian descent, dual optimality gap).
//! - [`parallel`]: coordinator/worker engine over row shards whose iterates
//!   match the sequential ones for any shard count at fixed eta.
//! - [`tune`]: HBIC model selection over (lambda1, lambda2) grids.
//! - [`sim`]: synthetic benchmark scenarios and metrics.
//! - [`io`]: CSV/JSON plumbing for the CLI.

pub mod error;
pub mod io;
pub mod linalg;
pub mod loss;
pub mod parallel;
pub mod penalty;
pub mod sim;
pub mod solver;
pub mod tune;

pub use error::{Error, Result};
