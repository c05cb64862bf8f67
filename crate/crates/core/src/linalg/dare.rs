use nalgebra::DMatrix;

use super::{check_square, spectral_radius, symmetrize, LinalgError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareOptions {
    /// Stop when successive iterates differ by less than `tol * (1 + |X|)` (Frobenius).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DareOptions {
    fn default() -> Self {
        DareOptions {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Stabilizing solution of `X = Q + A'XA - A'XB (R + B'XB)^-1 B'XA`.
#[derive(Debug, Clone)]
pub struct DareSolution {
    pub x: DMatrix<f64>,
    /// Optimal gain, `u = K x`.
    pub k: DMatrix<f64>,
    /// Frobenius norm of the fixed-point residual.
    pub residual: f64,
    pub iterations: usize,
}

fn check_dims(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(usize, usize), LinalgError> {
    let n = a.nrows();
    check_square(a, n, "A")?;
    if b.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "B has {} rows, expected {}",
            b.nrows(),
            n
        )));
    }
    let m = b.ncols();
    check_square(q, n, "Q")?;
    check_square(r, m, "R")?;
    Ok((n, m))
}

/// Gain `-(R + B'XB)^-1 B'XA`.
fn riccati_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    let m = b.ncols();
    if m == 0 {
        return Ok(DMatrix::zeros(0, a.nrows()));
    }
    let bt_x = b.transpose() * x;
    let s = symmetrize(&(r + &bt_x * b));
    let chol = s.cholesky().ok_or(LinalgError::Singular("R + B'XB"))?;
    Ok(-chol.solve(&(bt_x * a)))
}

/// Frobenius norm of `Q + A'XA - A'XB (R + B'XB)^-1 B'XA - X`.
pub fn dare_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let at_x = a.transpose() * x;
    let mut res = q + &at_x * a - x;
    if b.ncols() > 0 {
        if let Ok(k) = riccati_gain(a, b, r, x) {
            // A'XB (R+B'XB)^-1 B'XA = -A'XB K
            res += &at_x * b * k;
        } else {
            return f64::INFINITY;
        }
    }
    res.norm()
}

fn finish(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: DMatrix<f64>,
    iterations: usize,
) -> Result<DareSolution, LinalgError> {
    let x = symmetrize(&x);
    let k = riccati_gain(a, b, r, &x)?;
    let rho = spectral_radius(&(a + b * &k));
    if rho.is_nan() || rho >= 1.0 {
        return Err(LinalgError::Unstable(rho));
    }
    let residual = dare_residual(a, b, q, r, &x);
    Ok(DareSolution {
        x,
        k,
        residual,
        iterations,
    })
}

/// Structure-preserving doubling for the discrete algebraic Riccati equation.
///
/// With `G0 = B R^-1 B'`, `H0 = Q`, `A0 = A` the iteration
///
/// ```text
/// W      = I + Gk Hk
/// A(k+1) = Ak W^-1 Ak
/// G(k+1) = Gk + Ak W^-1 Gk Ak'
/// H(k+1) = Hk + Ak' Hk W^-1 Ak
/// ```
///
/// converges quadratically to the stabilizing solution `X = lim Hk` when
/// `(A, B)` is stabilizable and `(A, Q)` detectable. `R` must be positive
/// definite; `B` may have zero columns, in which case the result is the
/// Stein solution and `K` is empty.
pub fn dare_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    opts: &DareOptions,
) -> Result<DareSolution, LinalgError> {
    let (n, m) = check_dims(a, b, q, r)?;
    if n == 0 {
        return Ok(DareSolution {
            x: DMatrix::zeros(0, 0),
            k: DMatrix::zeros(m, 0),
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut g = if m == 0 {
        DMatrix::zeros(n, n)
    } else {
        let chol = symmetrize(r).cholesky().ok_or(LinalgError::NotPositiveDefinite("R"))?;
        symmetrize(&(b * chol.solve(&b.transpose())))
    };
    let mut h = symmetrize(q);
    let mut ak = a.clone();
    let eye = DMatrix::<f64>::identity(n, n);

    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let w = &eye + &g * &h;
        let lu = w.lu();
        let w_inv_a = lu.solve(&ak).ok_or(LinalgError::Singular("I + G H"))?;
        let w_inv_g = lu.solve(&g).ok_or(LinalgError::Singular("I + G H"))?;
        let h_next = symmetrize(&(&h + ak.transpose() * &h * &w_inv_a));
        let g_next = symmetrize(&(&g + &ak * w_inv_g * ak.transpose()));
        let a_next = &ak * &w_inv_a;

        last_step = (&h_next - &h).norm();
        if !last_step.is_finite() {
            return Err(LinalgError::NotConverged {
                iterations: it,
                last_step,
            });
        }
        h = h_next;
        g = g_next;
        ak = a_next;
        if last_step <= opts.tol * (1.0 + h.norm()) {
            return finish(a, b, q, r, h, it);
        }
    }
    Err(LinalgError::NotConverged {
        iterations: opts.max_iter,
        last_step,
    })
}

/// Riccati value iteration `X <- Q + A'XA - A'XB (R + B'XB)^-1 B'XA`, started at `Q`.
///
/// Linear convergence; kept as an independent check on [`dare_solve`].
pub fn dare_value_iteration(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    opts: &DareOptions,
) -> Result<DareSolution, LinalgError> {
    let (n, m) = check_dims(a, b, q, r)?;
    if n == 0 {
        return Ok(DareSolution {
            x: DMatrix::zeros(0, 0),
            k: DMatrix::zeros(m, 0),
            residual: 0.0,
            iterations: 0,
        });
    }
    if m > 0 && symmetrize(r).cholesky().is_none() {
        return Err(LinalgError::NotPositiveDefinite("R"));
    }
    let q = symmetrize(q);
    let mut x = q.clone();
    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let k = riccati_gain(a, b, r, &x)?;
        let at_x = a.transpose() * &x;
        let next = symmetrize(&(&q + &at_x * a + &at_x * b * k));
        last_step = (&next - &x).norm();
        if !last_step.is_finite() {
            break;
        }
        x = next;
        if last_step <= opts.tol * (1.0 + x.norm()) {
            return finish(a, b, &q, r, x, it);
        }
    }
    Err(LinalgError::NotConverged {
        iterations: opts.max_iter,
        last_step,
    })
}
