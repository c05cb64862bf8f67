use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{dare_solve, spectral_radius, DareOptions, LinalgError};

use super::deconstrain::DeconstrainedLqr;
use super::reduce::ColumnProblem;
use super::ColumnErrorKind;

/// State-space generator of one infinite-horizon CLM column.
///
/// Matrices act on the support coordinates of the column:
/// `φn[0] = e_ĵ`, `φn[k+1] = acl φn[k]`, `φu[k] = fu φn[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub j: usize,
    pub support: Vec<usize>,
    pub boundary: Vec<usize>,
    pub input_support: Vec<usize>,
    /// Position of `j` inside `support`.
    pub pos_in_n: usize,
    pub num_states: usize,
    pub num_inputs: usize,
    pub acl: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    /// Free-input feedback `K̃`, so that `fu = F + K̃` on the localizable subspace.
    pub gain: DMatrix<f64>,
    /// Riccati solution lifted to support coordinates.
    pub riccati: DMatrix<f64>,
    /// Dimension of the localizable subspace; equals `support.len()` unless
    /// some support states had to be pinned to zero.
    pub subspace_dim: usize,
    /// H2 cost contributed by this column.
    pub cost: f64,
    pub dare_iterations: usize,
    pub spectral_radius: f64,
    /// Wall time spent reducing, deconstraining and solving the column.
    pub solve_time: Duration,
}

impl ColumnSolution {
    pub fn init(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.support.len());
        e[self.pos_in_n] = 1.0;
        e
    }

    /// Successive `(φn[k], φu[k])` for `k = 0, 1, ...`.
    pub fn spectral_iter(&self) -> SpectralIter<'_> {
        SpectralIter {
            cs: self,
            cur: self.init(),
        }
    }

    /// Places reduced vectors at their global state and input indices.
    pub fn embed(&self, phi_n: &DVector<f64>, phi_u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut x = DVector::zeros(self.num_states);
        for (p, &g) in self.support.iter().enumerate() {
            x[g] = phi_n[p];
        }
        let mut u = DVector::zeros(self.num_inputs);
        for (p, &g) in self.input_support.iter().enumerate() {
            u[g] = phi_u[p];
        }
        (x, u)
    }
}

pub struct SpectralIter<'a> {
    cs: &'a ColumnSolution,
    cur: DVector<f64>,
}

impl Iterator for SpectralIter<'_> {
    type Item = (DVector<f64>, DVector<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        let phi_u = &self.cs.fu * &self.cur;
        let next = &self.cs.acl * &self.cur;
        let phi_n = std::mem::replace(&mut self.cur, next);
        Some((phi_n, phi_u))
    }
}

/// Solves the deconstrained column LQR and lifts the result back to support
/// coordinates.
///
/// The cross weight between state and free input is removed first by the
/// substitution `η = η' − R̂⁻¹ S' y`, which leaves a standard Riccati problem
/// with positive definite input weight.
pub fn solve_column(
    dc: &DeconstrainedLqr,
    cp: &ColumnProblem,
    opts: &DareOptions,
) -> Result<ColumnSolution, ColumnErrorKind> {
    let r_dim = dc.v.ncols();
    let p = dc.z.ncols();
    let shift = if p == 0 {
        DMatrix::zeros(0, r_dim)
    } else {
        let chol = dc
            .rhat
            .clone()
            .cholesky()
            .ok_or(ColumnErrorKind::Riccati(LinalgError::NotPositiveDefinite("Z'RZ")))?;
        chol.solve(&dc.cross.transpose())
    };
    let a_prime = &dc.atil - &dc.btil_eff * &shift;
    let q_prime = &dc.qtil - &dc.cross * &shift;
    let q_prime = (&q_prime + q_prime.transpose()) * 0.5;
    let sol = dare_solve(&a_prime, &dc.btil_eff, &q_prime, &dc.rhat, opts).map_err(ColumnErrorKind::Riccati)?;
    let k_eta = &sol.k - &shift;

    let acl_y = &dc.atil + &dc.btil_eff * &k_eta;
    let rho = spectral_radius(&acl_y);
    if rho >= 1.0 {
        return Err(ColumnErrorKind::Riccati(LinalgError::Unstable(rho)));
    }
    let free = &dc.z * &k_eta;
    let fu_y = &dc.f_state + &free;

    let vt = dc.v.transpose();
    let riccati = &dc.v * &sol.x * &vt;
    let cost = riccati[(cp.pos_in_n, cp.pos_in_n)];
    Ok(ColumnSolution {
        j: cp.j,
        support: cp.support.clone(),
        boundary: cp.boundary.clone(),
        input_support: cp.input_support.clone(),
        pos_in_n: cp.pos_in_n,
        num_states: cp.nx,
        num_inputs: cp.nu,
        acl: &dc.v * acl_y * &vt,
        fu: fu_y * &vt,
        gain: free * &vt,
        riccati,
        subspace_dim: r_dim,
        cost,
        dare_iterations: sol.iterations,
        spectral_radius: rho,
        solve_time: Duration::ZERO,
    })
}

/// `(φn[k], φu[k])` by `k` repeated multiplications.
pub fn clm_spectral(cs: &ColumnSolution, k: usize) -> (DVector<f64>, DVector<f64>) {
    cs.spectral_iter().nth(k).expect("iterator is infinite")
}

/// `(E_x φn[k], E_u φu[k])` as full-length state and input vectors.
pub fn embed_column(cs: &ColumnSolution, k: usize) -> (DVector<f64>, DVector<f64>) {
    let (n, u) = clm_spectral(cs, k);
    cs.embed(&n, &u)
}
