//! Column-wise synthesis of localized infinite-horizon CLMs.
//!
//! Each global state index `j` gets its own subproblem: the states its
//! disturbance may reach (the support), the states that must stay at zero
//! to contain it (the boundary), and the inputs the communication pattern
//! permits. The boundary constraint is solved for the inputs, the remaining
//! free input drives an ordinary LQR, and the Riccati solution yields a
//! finite-dimensional generator for the whole column of `Φx` and `Φu`.
//!
//! Columns are independent and may be solved in parallel; results are
//! gathered in column order.

mod clm;
mod deconstrain;
mod reduce;
mod solve;

pub use clm::{
    synthesize_all, synthesize_column, verify_achievability, AchievabilityReport, ColumnSolutionJson, LocalizedClm,
    LocalizedClmJson, SynthesisOptions,
};
pub use deconstrain::{deconstrain, DeconstrainOptions, DeconstrainedLqr};
pub(crate) use reduce::submatrix;
pub use reduce::{check_localizability, localizability_residual, localizable_subspace, reduce_column, ColumnProblem};
pub use solve::{clm_spectral, embed_column, solve_column, ColumnSolution, SpectralIter};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::netmodel::{NetModelError, PatternReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColumnErrorKind {
    #[error("localized support of the column is empty")]
    EmptySupport,
    #[error("boundary cannot be held at zero (|B_b pinv(B_b) - I|_F = {residual:e})")]
    NotLocalizable { residual: f64 },
    #[error("reduced Riccati problem failed: {0}")]
    Riccati(LinalgError),
}

impl ColumnErrorKind {
    pub fn code(&self) -> &'static str {
        match self {
            ColumnErrorKind::EmptySupport => "column_empty_support",
            ColumnErrorKind::NotLocalizable { .. } => "column_not_localizable",
            ColumnErrorKind::Riccati(_) => "column_riccati_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {kind}")]
pub struct ColumnError {
    pub column: usize,
    pub kind: ColumnErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Model(#[from] NetModelError),
    #[error("pattern validation failed with {} violation(s)", .0.errors.len())]
    Patterns(PatternReport),
    #[error("{} column(s) failed; first: {}", .0.len(), .0[0])]
    Columns(Vec<ColumnError>),
}

impl SynthesisError {
    pub fn code(&self) -> &'static str {
        match self {
            SynthesisError::Model(_) => "model_invalid",
            SynthesisError::Patterns(_) => "pattern_violation",
            SynthesisError::Columns(errs) => errs[0].kind.code(),
        }
    }
}
