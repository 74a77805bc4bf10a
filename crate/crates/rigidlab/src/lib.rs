//! # rigidlab
//!
//! Bar-joint frameworks in `d` dimensions: rigidity and stiffness spectra,
//! graph Laplacian spectra, and estimation of the d-dimensional algebraic
//! connectivity `a_d(G)` by eigenvalue maximization over configurations.
//!
//! The crate is organized around a small set of value types:
//!
//! | Type | Meaning |
//! |------|---------|
//! | [`graph::Graph`] | vertex count + ordered undirected edge list |
//! | [`rigidity::Configuration`] | one point in `R^d` per vertex |
//! | [`rigidity::Framework`] | graph + configuration, with derived `m`, `D` |
//! | [`linalg::Spectrum`] | ascending eigenvalues with orthonormal eigenvectors |
//! | [`bounds::BoundReport`] | evaluated inequality with margin and pass/fail |
//!
//! Everything is dense and deterministic: identical inputs produce identical
//! outputs, including eigenvector signs and optimizer trajectories.
//!
//! The `rigidlab` binary exposes four subcommands (`spectrum`, `check`,
//! `estimate`, `fuzz`); see the crate README for the file formats.

pub mod bounds;
pub mod cli;
pub mod graph;
pub mod linalg;
pub mod optimizer;
pub mod rigidity;

use thiserror::Error;

/// Unified error type for all fallible operations in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller handed in something that violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameters are outside the domain where a formula applies.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// An internal consistency check failed (bad tolerance, degenerate
    /// input mishandled). These indicate bugs, not user errors.
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// The analytic eigenvalue gradient needs a simple eigenvalue.
    #[error("eigenvalue {index} is not simple (gap {gap:.3e})")]
    NonSimpleEigenvalue { index: usize, gap: f64 },

    /// Edge endpoints coincide under the coincidence threshold; the
    /// gradient of the edge direction is undefined there.
    #[error("gradient undefined: vertices {i} and {j} coincide")]
    CoincidentPoints { i: usize, j: usize },

    /// A graph or configuration file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
