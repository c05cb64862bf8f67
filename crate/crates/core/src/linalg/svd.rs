use nalgebra::DMatrix;

/// Singular values below `DEFAULT_RANK_TOL * sigma_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Moore-Penrose pseudo-inverse through the SVD.
///
/// Singular values below `rank_tol * sigma_max` are dropped. Degenerate
/// shapes return the transposed-shape zero matrix.
pub fn pinv(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    pinv_with_rank(m, rank_tol).0
}

/// [`pinv`] together with the numerical rank it used.
pub fn pinv_with_rank(m: &DMatrix<f64>, rank_tol: f64) -> (DMatrix<f64>, usize) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (DMatrix::zeros(c, r), 0);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let mut out = DMatrix::zeros(c, r);
    if smax <= 0.0 {
        return (out, 0);
    }
    let cutoff = rank_tol * smax;
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            // out += v_k * u_k^T / s
            let vk = v_t.row(k).transpose();
            let uk = u.column(k);
            out.ger(1.0 / s, &vk, &uk, 1.0);
        }
    }
    (out, rank)
}

/// Orthonormal basis of the null space of `m`, one vector per column.
///
/// A matrix with no rows has the whole space as its kernel, so the identity
/// comes back. The SVD is taken of `m` padded with zero rows up to a square
/// shape, which yields a complete right singular basis without changing the
/// kernel.
pub fn kernel_basis(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    kernel_with_cutoff(m, |smax| rank_tol * smax)
}

/// [`kernel_basis`] with an absolute singular-value cutoff instead of a
/// relative one. Used when `m` may consist entirely of rounding noise.
pub fn kernel_basis_abs(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    kernel_with_cutoff(m, |_| cutoff)
}

fn kernel_with_cutoff(m: &DMatrix<f64>, cutoff: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 || m.amax() == 0.0 {
        return DMatrix::identity(c, c);
    }
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let cutoff = cutoff(svd.singular_values.max());
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(k, _)| k)
        .collect();
    let mut z = DMatrix::zeros(c, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        z.set_column(col, &v_t.row(k).transpose());
    }
    z
}
