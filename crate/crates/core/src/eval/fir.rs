use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::column::submatrix;
use crate::linalg::{kkt_solve, KktOptions, LinalgError};
use crate::netmodel::{CostWeights, Pattern, Plant, SUPPORT_TOL};

use super::EvalError;

/// One column of a finite-impulse-response CLM, in pattern coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FirColumn {
    pub j: usize,
    pub support: Vec<usize>,
    pub input_support: Vec<usize>,
    /// `φx[k]` on `support`, `k = 0..=T`.
    pub x: Vec<DVector<f64>>,
    /// `φu[k]` on `input_support`, `k = 0..=T`.
    pub u: Vec<DVector<f64>>,
    pub cost: f64,
    /// Pattern-restricted decision variables: `|support|·T + |inputs|·(T+1)`.
    pub variables: usize,
    /// Equality constraints of the uncondensed program.
    pub constraints: usize,
    pub solve_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirClm {
    pub horizon: usize,
    pub columns: Vec<FirColumn>,
    pub num_states: usize,
    pub num_inputs: usize,
}

impl FirClm {
    /// Dense `Φx[k]`, `Φu[k]` for `k = 0..=T`.
    pub fn spectral_matrices(&self) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        let (nx, nu) = (self.num_states, self.num_inputs);
        let mut out: Vec<_> = (0..=self.horizon)
            .map(|_| (DMatrix::zeros(nx, nx), DMatrix::zeros(nu, nx)))
            .collect();
        for c in &self.columns {
            for (k, (phi_x, phi_u)) in out.iter_mut().enumerate() {
                for (p, &g) in c.support.iter().enumerate() {
                    phi_x[(g, c.j)] = c.x[k][p];
                }
                for (p, &g) in c.input_support.iter().enumerate() {
                    phi_u[(g, c.j)] = c.u[k][p];
                }
            }
        }
        out
    }

    /// Largest violation of `Φx[0] = I`, the recursion for `k < T`, and the
    /// terminal condition `AΦx[T] + BΦu[T] = 0`.
    pub fn recursion_residual(&self, plant: &Plant) -> f64 {
        let phis = self.spectral_matrices();
        let nx = self.num_states;
        let mut worst = (&phis[0].0 - DMatrix::<f64>::identity(nx, nx)).amax();
        for k in 0..=self.horizon {
            let pred = plant.a() * &phis[k].0 + plant.b() * &phis[k].1;
            let r = if k < self.horizon { pred - &phis[k + 1].0 } else { pred };
            worst = worst.max(r.amax());
        }
        worst
    }

    pub fn column_times(&self) -> Vec<Duration> {
        self.columns.iter().map(|c| c.solve_time).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirOptions {
    pub parallel: bool,
    pub kkt: KktOptions,
}

/// Finite-horizon localized SLS, one quadratic program per column.
///
/// Every column that has no deadbeat response within `horizon` steps is
/// listed in the error.
pub fn fir_synthesize(
    plant: &Plant,
    loc: &Pattern,
    comm: &Pattern,
    weights: &CostWeights,
    horizon: usize,
    opts: &FirOptions,
) -> Result<FirClm, EvalError> {
    assert!(horizon >= 1, "FIR horizon must be at least 1");
    let nx = plant.num_states();
    let solve = |j: usize| fir_column(plant, loc, comm, weights, j, horizon, &opts.kkt);
    let results: Vec<_> = if opts.parallel {
        (0..nx).into_par_iter().map(solve).collect()
    } else {
        (0..nx).map(solve).collect()
    };
    let mut columns = Vec::with_capacity(nx);
    let mut infeasible = Vec::new();
    for (j, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => columns.push(c),
            Err(LinalgError::Infeasible { .. }) => infeasible.push(j),
            Err(source) => return Err(EvalError::FirColumn { column: j, source }),
        }
    }
    if !infeasible.is_empty() {
        return Err(EvalError::FirInfeasible {
            horizon,
            columns: infeasible,
        });
    }
    Ok(FirClm {
        horizon,
        columns,
        num_states: nx,
        num_inputs: plant.num_inputs(),
    })
}

/// Column `j` of the FIR program.
///
/// States are eliminated through `x[k+1] = A_SS x[k] + B_SU u[k]`, which
/// leaves the inputs `u[0..=T]` as the only unknowns. Rows reached from the
/// support that lie outside it must stay at zero at every step, and the
/// response must vanish after step `T`.
pub fn fir_column(
    plant: &Plant,
    loc: &Pattern,
    comm: &Pattern,
    weights: &CostWeights,
    j: usize,
    horizon: usize,
    kkt: &KktOptions,
) -> Result<FirColumn, LinalgError> {
    let start = Instant::now();
    let part = plant.partition();
    let src = part.subsystem_of_state(j);
    let support = part.states_of(|i| loc.get(i, src));
    let input_support = part.inputs_of(|i| comm.get(i, src));
    let (a, b) = (plant.a(), plant.b());
    let nx = plant.num_states();
    let in_support = {
        let mut v = vec![false; nx];
        support.iter().for_each(|&l| v[l] = true);
        v
    };
    let outside: Vec<usize> = (0..nx)
        .filter(|&r| {
            !in_support[r]
                && (support.iter().any(|&c| a[(r, c)].abs() > SUPPORT_TOL)
                    || input_support.iter().any(|&c| b[(r, c)].abs() > SUPPORT_TOL))
        })
        .collect();

    let (s, m, t_max) = (support.len(), input_support.len(), horizon);
    let nvar = m * (t_max + 1);
    let a_ss = submatrix(a, &support, &support);
    let b_su = submatrix(b, &support, &input_support);
    let a_ds = submatrix(a, &outside, &support);
    let b_du = submatrix(b, &outside, &input_support);
    let q = submatrix(weights.q(), &support, &support);
    let r = submatrix(weights.r(), &input_support, &input_support);
    let pos = support.binary_search(&j).expect("j lies in its own localized region");

    let nd = outside.len();
    let rows = nd * (t_max + 1) + s;
    let mut aeq = DMatrix::zeros(rows, nvar);
    let mut beq = DVector::zeros(rows);
    let mut h = DMatrix::zeros(nvar, nvar);
    let mut f = DVector::zeros(nvar);

    // x[k] = c + G u
    let mut c = DVector::zeros(s);
    c[pos] = 1.0;
    let mut g = DMatrix::zeros(s, nvar);
    let mut cs = Vec::with_capacity(t_max + 1);
    let mut gs = Vec::with_capacity(t_max + 1);
    for k in 0..=t_max {
        if k > 0 {
            let qg = &q * &g;
            h.gemm_tr(2.0, &g, &qg, 1.0);
            f.gemv_tr(2.0, &g, &(&q * &c), 1.0);
        }
        let blk = k * m;
        let mut row = a_ds.clone() * &g;
        {
            let mut v = row.columns_mut(blk, m);
            v += &b_du;
        }
        aeq.rows_mut(k * nd, nd).copy_from(&row);
        beq.rows_mut(k * nd, nd).copy_from(&(-(&a_ds * &c)));
        if k == t_max {
            let mut term = &a_ss * &g;
            {
                let mut v = term.columns_mut(blk, m);
                v += &b_su;
            }
            aeq.rows_mut(nd * (t_max + 1), s).copy_from(&term);
            beq.rows_mut(nd * (t_max + 1), s).copy_from(&(-(&a_ss * &c)));
        }
        cs.push(c.clone());
        gs.push(g.clone());
        if k < t_max {
            let mut g_next = &a_ss * &g;
            {
                let mut v = g_next.columns_mut(blk, m);
                v += &b_su;
            }
            c = &a_ss * &c;
            g = g_next;
        }
    }
    for k in 0..=t_max {
        let mut v = h.view_mut((k * m, k * m), (m, m));
        v += &r * 2.0;
    }

    let u_all = if nvar == 0 {
        let scale = 1.0 + beq.amax();
        if beq.amax() > kkt.feas_tol * scale {
            return Err(LinalgError::Infeasible { residual: beq.amax() });
        }
        DVector::zeros(0)
    } else {
        kkt_solve(&h, &f, &aeq, &beq, kkt)?.z
    };

    let x: Vec<DVector<f64>> = cs.iter().zip(&gs).map(|(c, g)| c + g * &u_all).collect();
    let u: Vec<DVector<f64>> = (0..=t_max).map(|k| u_all.rows(k * m, m).into_owned()).collect();
    let cost = x.iter().map(|v| (v.transpose() * &q * v)[0]).sum::<f64>()
        + u.iter().map(|v| (v.transpose() * &r * v)[0]).sum::<f64>();
    let rw = s + nd;
    Ok(FirColumn {
        j,
        support,
        input_support,
        x,
        u,
        cost,
        variables: s * t_max + m * (t_max + 1),
        constraints: rw * (t_max + 1),
        solve_time: start.elapsed(),
    })
}

/// Finite sum of quadratic terms over `k = 0..=T`.
pub fn fir_cost(fir: &FirClm, weights: &CostWeights) -> f64 {
    fir.columns
        .iter()
        .map(|c| {
            let q = submatrix(weights.q(), &c.support, &c.support);
            let r = submatrix(weights.r(), &c.input_support, &c.input_support);
            c.x.iter().map(|v| (v.transpose() * &q * v)[0]).sum::<f64>()
                + c.u.iter().map(|v| (v.transpose() * &r * v)[0]).sum::<f64>()
        })
        .sum()
}
