//! Numerical convex geometry toolkit.
//!
//! Computes volumes, surface areas, quermassintegrals, sections and
//! projections of ellipsoids and explicit polytope families, together with
//! the scale-invariant shape parameters built from them, and runs the
//! divergence sweeps and inequality verifiers that exercise them.

pub mod bodies;
pub mod cli;
pub mod ellipsoid;
pub mod experiments;
pub mod numkit;
pub mod sampling;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("eigensolver did not converge: off-diagonal norm {off_diag:e} above {threshold:e}")]
    NonConvergence { off_diag: f64, threshold: f64 },
    #[error("columns are rank deficient (gram determinant {gram_det:e})")]
    RankDeficient { gram_det: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("degenerate sample: gaussian vector norm below threshold after {retries} retries")]
    DegenerateSample { retries: usize },
    #[error("integrand returned a non-finite value at sample {sample_index}")]
    NonFiniteValue { sample_index: u64 },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("scan violation in {context}: value {value} exceeds bound {bound}; offending frame {frame:?}")]
    ScanViolation {
        context: String,
        value: f64,
        bound: f64,
        frame: Vec<Vec<f64>>,
    },
    #[error("degenerate polygon: only {points} intersection points")]
    DegeneratePolygon { points: usize },
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
