use nalgebra::{DMatrix, DVector};

use crate::linalg::{kernel_basis, pinv};

use super::reduce::{localizability_residual, localizable_subspace, subspace_constraints, ColumnProblem};
use super::ColumnErrorKind;

/// Unconstrained LQR data of one column after the boundary constraint has
/// been solved for the inputs.
///
/// Support states are written `x = V y` with `V` orthonormal. Admissible
/// inputs are `u = F y + Z η` for a free `η`. With a full-row-rank `B_b`,
/// `V = I`, `F = −B_b^† A_bn` and `Z` spans `ker B_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconstrainedLqr {
    /// Basis of the localizable support subspace, `s × r`.
    pub v: DMatrix<f64>,
    /// Feedforward input map `F`, `m × r`.
    pub f_state: DMatrix<f64>,
    /// Projector onto admissible input directions, `m × m`.
    pub p_free: DMatrix<f64>,
    /// Orthonormal basis of `Range(p_free)`, `m × p`.
    pub z: DMatrix<f64>,
    /// `Ã`, `r × r`.
    pub atil: DMatrix<f64>,
    /// `B̃ = V' B_n P_free`, `r × m`.
    pub btil: DMatrix<f64>,
    /// `B̃ Z`, `r × p`.
    pub btil_eff: DMatrix<f64>,
    /// State weight `V'Q_nn V + F'RF`, `r × r`.
    pub qtil: DMatrix<f64>,
    /// Cross weight `F'RZ`, `r × p`.
    pub cross: DMatrix<f64>,
    /// `Z'RZ`, `p × p`.
    pub rhat: DMatrix<f64>,
    /// `V' e_j`.
    pub init: DVector<f64>,
}

impl DeconstrainedLqr {
    /// True when the localizable subspace is a proper subspace of the support.
    pub fn is_restricted(&self) -> bool {
        self.v.ncols() < self.v.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconstrainOptions {
    pub rank_tol: f64,
    /// Threshold on `‖B_b B_b^† − I‖_F` for the full-row-rank test.
    pub localizability_tol: f64,
    /// Reject columns whose `B_b` lacks full row rank instead of shrinking
    /// to the localizable subspace.
    pub require_full_row_rank: bool,
}

impl Default for DeconstrainOptions {
    fn default() -> Self {
        DeconstrainOptions {
            rank_tol: crate::linalg::DEFAULT_RANK_TOL,
            localizability_tol: 1e-9,
            require_full_row_rank: false,
        }
    }
}

/// Eliminates the boundary constraint of a column problem.
pub fn deconstrain(cp: &ColumnProblem, opts: &DeconstrainOptions) -> Result<DeconstrainedLqr, ColumnErrorKind> {
    let s = cp.num_support();
    let residual = localizability_residual(cp, opts.rank_tol);
    let full_rank = residual <= opts.localizability_tol;
    let v = if full_rank {
        DMatrix::identity(s, s)
    } else if opts.require_full_row_rank {
        return Err(ColumnErrorKind::NotLocalizable { residual });
    } else {
        let v = localizable_subspace(cp, opts.rank_tol);
        let mut e = DVector::zeros(s);
        e[cp.pos_in_n] = 1.0;
        let miss = (&e - &v * (v.transpose() * &e)).norm();
        if miss > 1e-8 {
            return Err(ColumnErrorKind::NotLocalizable { residual });
        }
        v
    };

    let cutoff = opts.rank_tol * cp.scale();
    let (m, n) = subspace_constraints(cp, &v, cutoff);
    let n_pinv = pinv(&n, opts.rank_tol);
    let f_state = -(&n_pinv * &m);
    let nu = cp.num_inputs();
    let p_free = DMatrix::<f64>::identity(nu, nu) - &n_pinv * &n;
    let z = kernel_basis(&n, opts.rank_tol);

    let vt = v.transpose();
    let atil = &vt * (&cp.a_nn * &v + &cp.b_n * &f_state);
    let btil = &vt * &cp.b_n * &p_free;
    let btil_eff = &vt * &cp.b_n * &z;

    let q_nn = cp.q_j.view((0, 0), (s, s)).into_owned();
    let r = &cp.r_j;
    let qtil = sym(&(&vt * q_nn * &v + f_state.transpose() * r * &f_state));
    let cross = f_state.transpose() * r * &z;
    let rhat = sym(&(z.transpose() * r * &z));
    let init = &vt * DVector::from_fn(s, |i, _| if i == cp.pos_in_n { 1.0 } else { 0.0 });

    Ok(DeconstrainedLqr {
        v,
        f_state,
        p_free,
        z,
        atil,
        btil,
        btil_eff,
        qtil,
        cross,
        rhat,
        init,
    })
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
