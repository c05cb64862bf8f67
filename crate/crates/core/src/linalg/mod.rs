//! Dense numerical kernels used by the synthesis pipeline.
//!
//! Everything here operates on `nalgebra` dynamic matrices and accepts
//! degenerate shapes (zero rows or zero columns); empty boundaries and
//! subsystems without actuators produce those routinely.

mod dare;
mod kkt;
mod lyap;
mod svd;

pub use dare::{dare_residual, dare_solve, dare_value_iteration, DareOptions, DareSolution};
pub use kkt::{kkt_solve, KktOptions, KktSolution};
pub use lyap::{dlyap_residual, dlyap_solve};
pub use svd::{kernel_basis, kernel_basis_abs, pinv, pinv_with_rank, DEFAULT_RANK_TOL};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("{0} is numerically singular")]
    Singular(&'static str),
    #[error("iteration did not converge within {iterations} steps (last update {last_step:e})")]
    NotConverged { iterations: usize, last_step: f64 },
    #[error("closed loop is not stable (spectral radius {0})")]
    Unstable(f64),
    #[error("equality constraints are inconsistent (residual {residual:e})")]
    Infeasible { residual: f64 },
    #[error("KKT system is singular or the objective is unbounded on the feasible set")]
    UnboundedOrSingular,
}

/// Largest eigenvalue magnitude. Returns 0 for an empty matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

pub(crate) fn check_square(m: &DMatrix<f64>, n: usize, name: &str) -> Result<(), LinalgError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(LinalgError::Dimension(format!(
            "{} is {}x{}, expected {}x{}",
            name,
            m.nrows(),
            m.ncols(),
            n,
            n
        )));
    }
    Ok(())
}
