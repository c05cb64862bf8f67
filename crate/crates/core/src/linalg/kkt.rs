use nalgebra::{DMatrix, DVector};

use super::{kernel_basis, pinv, pinv_with_rank, symmetrize, LinalgError, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktOptions {
    /// Relative singular-value cutoff used for the constraint rank.
    pub rank_tol: f64,
    /// Constraints count as violated when `|Az - b| > feas_tol * (1 + |b|)`.
    pub feas_tol: f64,
}

impl Default for KktOptions {
    fn default() -> Self {
        KktOptions {
            rank_tol: DEFAULT_RANK_TOL,
            feas_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub z: DVector<f64>,
    /// Multipliers with `Hz + f + A'lambda = 0`.
    pub multipliers: DVector<f64>,
    /// Numerical rank of the constraint matrix.
    pub constraint_rank: usize,
}

/// Minimizes `0.5 z'Hz + f'z` subject to `A z = b`.
///
/// When `H` is positive definite the problem is whitened with its Cholesky
/// factor `H = LL'`: with `y = L'z` it becomes a minimum-distance projection
/// onto `{y : A L^-T y = b}`, which one SVD of `A L^-T` solves and which also
/// exposes redundant and inconsistent constraint rows. A merely semidefinite
/// `H` falls back to a null-space method.
pub fn kkt_solve(
    h: &DMatrix<f64>,
    f: &DVector<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    opts: &KktOptions,
) -> Result<KktSolution, LinalgError> {
    let n = h.nrows();
    if h.ncols() != n || f.len() != n || aeq.ncols() != n || aeq.nrows() != beq.len() {
        return Err(LinalgError::Dimension(format!(
            "H {:?}, f {}, A {:?}, b {}",
            h.shape(),
            f.len(),
            aeq.shape(),
            beq.len()
        )));
    }
    match symmetrize(h).cholesky() {
        Some(chol) => whitened(&chol.l(), f, aeq, beq, opts),
        None => null_space(h, f, aeq, beq, opts),
    }
}

fn infeasible_if_violated(
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    z: &DVector<f64>,
    opts: &KktOptions,
) -> Result<(), LinalgError> {
    if aeq.nrows() == 0 {
        return Ok(());
    }
    let residual = (aeq * z - beq).amax();
    if residual > opts.feas_tol * (1.0 + beq.amax()) {
        return Err(LinalgError::Infeasible { residual });
    }
    Ok(())
}

fn whitened(
    l: &DMatrix<f64>,
    f: &DVector<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    opts: &KktOptions,
) -> Result<KktSolution, LinalgError> {
    let p = aeq.nrows();
    let g = l.solve_lower_triangular(f).ok_or(LinalgError::Singular("H"))?;
    if p == 0 {
        let z = l
            .transpose()
            .solve_upper_triangular(&(-&g))
            .ok_or(LinalgError::Singular("H"))?;
        return Ok(KktSolution {
            z,
            multipliers: DVector::zeros(0),
            constraint_rank: 0,
        });
    }
    // At = A L^-T = (L^-1 A')'
    let at = l
        .solve_lower_triangular(&aeq.transpose())
        .ok_or(LinalgError::Singular("H"))?
        .transpose();
    let (at_pinv, rank) = pinv_with_rank(&at, opts.rank_tol);
    let y = -&g + &at_pinv * (beq + &at * &g);
    let z = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(LinalgError::Singular("H"))?;
    infeasible_if_violated(aeq, beq, &z, opts)?;
    let multipliers = -(at_pinv.transpose() * (&y + &g));
    Ok(KktSolution {
        z,
        multipliers,
        constraint_rank: rank,
    })
}

fn null_space(
    h: &DMatrix<f64>,
    f: &DVector<f64>,
    aeq: &DMatrix<f64>,
    beq: &DVector<f64>,
    opts: &KktOptions,
) -> Result<KktSolution, LinalgError> {
    let n = h.nrows();
    let a_pinv = pinv(aeq, opts.rank_tol);
    let zp = if aeq.nrows() == 0 {
        DVector::zeros(n)
    } else {
        &a_pinv * beq
    };
    infeasible_if_violated(aeq, beq, &zp, opts)?;
    let basis = kernel_basis(aeq, opts.rank_tol);
    let rank = n - basis.ncols();
    let z = if basis.ncols() == 0 {
        zp
    } else {
        let reduced = symmetrize(&(basis.transpose() * h * &basis));
        let chol = reduced.cholesky().ok_or(LinalgError::UnboundedOrSingular)?;
        let y = -chol.solve(&(basis.transpose() * (h * &zp + f)));
        zp + &basis * y
    };
    let multipliers = -(a_pinv.transpose() * (h * &z + f));
    Ok(KktSolution {
        z,
        multipliers,
        constraint_rank: rank,
    })
}
