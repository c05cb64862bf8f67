use nalgebra::DMatrix;

use super::{check_square, spectral_radius, symmetrize, LinalgError};

/// Solves the Stein equation `G = A' G A + M` for stable `A`.
///
/// Squared Smith iteration: `G <- G + Ak' G Ak`, `Ak <- Ak^2`, i.e. the
/// series `sum_k (A')^k M A^k` summed in doubling blocks.
pub fn dlyap_solve(acl: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = acl.nrows();
    check_square(acl, n, "A")?;
    check_square(m, n, "M")?;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let rho = spectral_radius(acl);
    if rho.is_nan() || rho >= 1.0 {
        return Err(LinalgError::Unstable(rho));
    }
    let mut g = symmetrize(m);
    let mut ak = acl.clone();
    let mut last_step = f64::INFINITY;
    for it in 1..=200 {
        let inc = ak.transpose() * &g * &ak;
        last_step = inc.norm();
        g = symmetrize(&(g + inc));
        ak = &ak * &ak;
        if last_step <= f64::EPSILON * (1.0 + g.norm()) || ak.amax() == 0.0 {
            return Ok(g);
        }
        if !last_step.is_finite() {
            return Err(LinalgError::NotConverged {
                iterations: it,
                last_step,
            });
        }
    }
    Err(LinalgError::NotConverged {
        iterations: 200,
        last_step,
    })
}

/// Frobenius norm of `G - A'GA - M`.
pub fn dlyap_residual(acl: &DMatrix<f64>, m: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    (g - acl.transpose() * g * acl - m).norm()
}
