use nalgebra::DMatrix;

use crate::linalg::{kernel_basis_abs, pinv};
use crate::netmodel::{CostWeights, Pattern, Plant, SUPPORT_TOL};

use super::ColumnErrorKind;

/// Data of one column subproblem after selecting the states its
/// disturbance may reach and moving the boundary states last.
///
/// Reduced state vectors are ordered `[support..., boundary...]`, each part
/// by ascending global index. Reduced inputs follow ascending global index.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProblem {
    /// Global state index of the column.
    pub j: usize,
    pub support: Vec<usize>,
    pub boundary: Vec<usize>,
    pub input_support: Vec<usize>,
    pub a_nn: DMatrix<f64>,
    pub a_nb: DMatrix<f64>,
    pub a_bn: DMatrix<f64>,
    pub a_bb: DMatrix<f64>,
    pub b_n: DMatrix<f64>,
    pub b_b: DMatrix<f64>,
    /// Principal submatrix of `Q` in reduced state order.
    pub q_j: DMatrix<f64>,
    /// Principal submatrix of `R` on `input_support`.
    pub r_j: DMatrix<f64>,
    /// Position of `j` inside `support`.
    pub pos_in_n: usize,
    /// Global state and input counts.
    pub nx: usize,
    pub nu: usize,
}

impl ColumnProblem {
    pub fn num_support(&self) -> usize {
        self.support.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_support.len()
    }

    /// Position of global state `l` in the rearranged vector.
    pub fn pos_in_reduced(&self, l: usize) -> Option<usize> {
        self.pos_in_support(l)
            .or_else(|| self.boundary.binary_search(&l).ok().map(|p| p + self.support.len()))
    }

    /// Position of global state `l` in the non-boundary subvector.
    pub fn pos_in_support(&self, l: usize) -> Option<usize> {
        self.support.binary_search(&l).ok()
    }

    /// `A^(j)` in reduced order.
    pub fn a_reduced(&self) -> DMatrix<f64> {
        let (s, b) = (self.num_support(), self.num_boundary());
        let mut out = DMatrix::zeros(s + b, s + b);
        out.view_mut((0, 0), (s, s)).copy_from(&self.a_nn);
        out.view_mut((0, s), (s, b)).copy_from(&self.a_nb);
        out.view_mut((s, 0), (b, s)).copy_from(&self.a_bn);
        out.view_mut((s, s), (b, b)).copy_from(&self.a_bb);
        out
    }

    /// `B^(j)` in reduced order.
    pub fn b_reduced(&self) -> DMatrix<f64> {
        let (s, b) = (self.num_support(), self.num_boundary());
        let mut out = DMatrix::zeros(s + b, self.num_inputs());
        out.rows_mut(0, s).copy_from(&self.b_n);
        out.rows_mut(s, b).copy_from(&self.b_b);
        out
    }

    /// Magnitude used to turn relative tolerances into absolute ones.
    pub(crate) fn scale(&self) -> f64 {
        [&self.a_nn, &self.a_bn, &self.b_n, &self.b_b]
            .iter()
            .map(|m| m.amax())
            .fold(1.0, f64::max)
    }
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Selects the column-`j` subproblem.
///
/// The support is the localized region of `j` expanded to states. Inputs are
/// those of subsystems permitted by `comm`. The boundary is every state of
/// the extended region, plus any state the support dynamics or the permitted
/// inputs reach directly, minus the support; for block-diagonal `B` this is
/// exactly the extended region minus the localized one.
pub fn reduce_column(
    plant: &Plant,
    loc: &Pattern,
    ext: &Pattern,
    comm: &Pattern,
    weights: &CostWeights,
    j: usize,
) -> Result<ColumnProblem, ColumnErrorKind> {
    let part = plant.partition();
    let nx = plant.num_states();
    assert!(j < nx, "column {j} out of range");
    let s = part.subsystem_of_state(j);
    let support = part.states_of(|i| loc.get(i, s));
    if support.is_empty() || support.binary_search(&j).is_err() {
        return Err(ColumnErrorKind::EmptySupport);
    }
    let input_support = part.inputs_of(|i| comm.get(i, s));

    let a = plant.a();
    let b = plant.b();
    let mut in_boundary = vec![false; nx];
    for l in part.states_of(|i| ext.get(i, s)) {
        in_boundary[l] = true;
    }
    for r in 0..nx {
        if support.iter().any(|&c| a[(r, c)].abs() > SUPPORT_TOL)
            || input_support.iter().any(|&c| b[(r, c)].abs() > SUPPORT_TOL)
        {
            in_boundary[r] = true;
        }
    }
    for &l in &support {
        in_boundary[l] = false;
    }
    let boundary: Vec<usize> = (0..nx).filter(|&l| in_boundary[l]).collect();

    let mut reduced = support.clone();
    reduced.extend_from_slice(&boundary);
    let pos_in_n = support.binary_search(&j).expect("checked above");
    Ok(ColumnProblem {
        j,
        a_nn: submatrix(a, &support, &support),
        a_nb: submatrix(a, &support, &boundary),
        a_bn: submatrix(a, &boundary, &support),
        a_bb: submatrix(a, &boundary, &boundary),
        b_n: submatrix(b, &support, &input_support),
        b_b: submatrix(b, &boundary, &input_support),
        q_j: submatrix(weights.q(), &reduced, &reduced),
        r_j: submatrix(weights.r(), &input_support, &input_support),
        support,
        boundary,
        input_support,
        pos_in_n,
        nx,
        nu: plant.num_inputs(),
    })
}

/// `‖B_b B_b^† − I‖_F`; zero for an empty boundary.
pub fn localizability_residual(cp: &ColumnProblem, rank_tol: f64) -> f64 {
    let nb = cp.num_boundary();
    if nb == 0 {
        return 0.0;
    }
    let p = &cp.b_b * pinv(&cp.b_b, rank_tol);
    (p - DMatrix::<f64>::identity(nb, nb)).norm()
}

/// True when `B_b` has full row rank, so every boundary row can be
/// cancelled by the inputs.
pub fn check_localizability(cp: &ColumnProblem, tol: f64) -> bool {
    localizability_residual(cp, crate::linalg::DEFAULT_RANK_TOL) <= tol
}

/// Zeroes entries at or below `cutoff`.
pub(crate) fn chop(mut m: DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    m.iter_mut().for_each(|x| {
        if x.abs() <= cutoff {
            *x = 0.0
        }
    });
    m
}

/// Constraint pair `(M, N)` for a candidate subspace `V`: a support state
/// `V y` can be kept inside `span V` with the boundary at zero iff some
/// input solves `N u = −M y`.
pub(crate) fn subspace_constraints(cp: &ColumnProblem, v: &DMatrix<f64>, cutoff: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = cp.num_support();
    let nb = cp.num_boundary();
    let m_in = cp.num_inputs();
    let r = v.ncols();
    let full = r == s;
    let extra = if full { 0 } else { s };
    let mut m = DMatrix::zeros(nb + extra, r);
    let mut n = DMatrix::zeros(nb + extra, m_in);
    m.rows_mut(0, nb).copy_from(&(&cp.a_bn * v));
    n.rows_mut(0, nb).copy_from(&cp.b_b);
    if full {
        return (m, n);
    }
    {
        let p_perp = DMatrix::<f64>::identity(s, s) - v * v.transpose();
        m.rows_mut(nb, s).copy_from(&(&p_perp * &cp.a_nn * v));
        n.rows_mut(nb, s).copy_from(&(&p_perp * &cp.b_n));
    }
    (chop(m, cutoff), chop(n, cutoff))
}

/// Orthonormal basis `V` of the largest subspace of support states that can
/// be kept invariant while holding the boundary at zero.
///
/// When `B_b` has full row rank this is the whole support and the identity
/// is returned. Otherwise the subspace shrinks until every state in it can
/// be steered back into it with a zero boundary; the column is localizable
/// only if `e_j` lies in the result.
pub fn localizable_subspace(cp: &ColumnProblem, rank_tol: f64) -> DMatrix<f64> {
    let s = cp.num_support();
    let cutoff = rank_tol * cp.scale();
    let mut v = DMatrix::<f64>::identity(s, s);
    loop {
        let (m, n) = subspace_constraints(cp, &v, cutoff);
        // Rows of W span the left null space of N.
        let w = kernel_basis_abs(&n.transpose(), cutoff);
        let reach = w.transpose() * &m;
        let keep = kernel_basis_abs(&chop(reach, cutoff), cutoff);
        if keep.ncols() == v.ncols() {
            return v;
        }
        v = &v * keep;
        if v.ncols() == 0 {
            return v;
        }
    }
}
