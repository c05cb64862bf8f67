//! Cost evaluation, closed-loop simulation, the FIR baseline and sweeps.

mod cost;
mod fir;
mod sim;
mod sweep;

pub use cost::{h2_cost_lyapunov, h2_cost_truncated, CostMethod, CostReport};
pub use fir::{fir_column, fir_cost, fir_synthesize, FirClm, FirColumn, FirOptions};
pub use sim::{
    gaussian_disturbance, global_lqr_controller, impulse, localization_leak, monte_carlo_cost, simulate_closed_loop,
    stage_costs, MonteCarloEstimate, StaticGainController, Trajectory,
};
pub use sweep::{
    benchmark_sweep, chain_patterns, median, write_sweep_csv, write_timing_csv, HorizonSweep, SizeSweep, SweepConfig,
    SweepRow, SweepTable, TimingRow,
};

use thiserror::Error;

use crate::column::SynthesisError;
use crate::linalg::LinalgError;
use crate::netmodel::NetModelError;
use crate::realization::RealizationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("column {column} is not stable: {source}")]
    UnstableColumn { column: usize, source: LinalgError },
    #[error("FIR program with horizon {horizon} is infeasible for {} column(s), first {}", .columns.len(), .columns[0])]
    FirInfeasible { horizon: usize, columns: Vec<usize> },
    #[error("FIR program for column {column} failed: {source}")]
    FirColumn { column: usize, source: LinalgError },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Realization(#[from] RealizationError),
    #[error(transparent)]
    Model(#[from] NetModelError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl EvalError {
    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        EvalError::Io(e.to_string())
    }

    pub fn code(&self) -> &'static str {
        match self {
            EvalError::UnstableColumn { .. } => "unstable_column",
            EvalError::FirInfeasible { .. } => "fir_infeasible",
            EvalError::FirColumn { .. } => "fir_column_failed",
            EvalError::Synthesis(e) => e.code(),
            EvalError::Realization(_) => "realization_failed",
            EvalError::Model(_) => "model_invalid",
            EvalError::Io(_) => "io_error",
        }
    }
}
