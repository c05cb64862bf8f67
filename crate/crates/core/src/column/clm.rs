use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::json::{vector_to_vec, MatrixJson};
use crate::linalg::DareOptions;
use crate::netmodel::{
    adjacency_from_plant, expand_to_states, extended_pattern, validate_patterns, BoolMatrix, CommStrictness,
    CostWeights, NetModelError, Pattern, Plant, RowKind,
};

use super::deconstrain::{deconstrain, DeconstrainOptions};
use super::reduce::reduce_column;
use super::solve::{solve_column, ColumnSolution};
use super::{ColumnError, ColumnErrorKind, SynthesisError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Solve columns on the rayon pool.
    pub parallel: bool,
    pub dare: DareOptions,
    pub deconstrain: DeconstrainOptions,
    pub strictness: CommStrictness,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            parallel: true,
            dare: DareOptions::default(),
            deconstrain: DeconstrainOptions::default(),
            strictness: CommStrictness::default(),
        }
    }
}

/// All columns of a synthesized localized CLM together with the data they
/// were computed from.
#[derive(Debug, Clone)]
pub struct LocalizedClm {
    pub columns: Vec<ColumnSolution>,
    pub plant: Plant,
    pub weights: CostWeights,
    pub loc: Pattern,
    pub comm: Pattern,
    pub ext: Pattern,
}

impl LocalizedClm {
    pub fn num_states(&self) -> usize {
        self.plant.num_states()
    }

    pub fn num_inputs(&self) -> usize {
        self.plant.num_inputs()
    }

    /// Sum of the per-column Riccati costs.
    pub fn riccati_cost(&self) -> f64 {
        self.columns.iter().map(|c| c.cost).sum()
    }

    /// Columns solved on a strict subspace of their support.
    pub fn restricted_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .filter(|c| c.subspace_dim < c.support.len())
            .map(|c| c.j)
            .collect()
    }

    pub fn column_times(&self) -> Vec<Duration> {
        self.columns.iter().map(|c| c.solve_time).collect()
    }

    /// Dense `Φx[k]`, `Φu[k]` for `k = 0..count`.
    pub fn spectral_matrices(&self, count: usize) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        let (nx, nu) = (self.num_states(), self.num_inputs());
        let mut out: Vec<_> = (0..count)
            .map(|_| (DMatrix::zeros(nx, nx), DMatrix::zeros(nu, nx)))
            .collect();
        for cs in &self.columns {
            for (k, (phi_n, phi_u)) in cs.spectral_iter().take(count).enumerate() {
                for (p, &g) in cs.support.iter().enumerate() {
                    out[k].0[(g, cs.j)] = phi_n[p];
                }
                for (p, &g) in cs.input_support.iter().enumerate() {
                    out[k].1[(g, cs.j)] = phi_u[p];
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> LocalizedClmJson {
        LocalizedClmJson {
            schema_version: crate::netmodel::SCHEMA_VERSION,
            num_states: self.num_states(),
            num_inputs: self.num_inputs(),
            localization: self.loc.entries().to_rows(),
            communication: self.comm.entries().to_rows(),
            columns: self.columns.iter().map(ColumnSolutionJson::from).collect(),
        }
    }
}

/// Serialized form of one column generator.
///
/// `acl` and `fu` act on vectors indexed like `support`; the spectral
/// elements are `φn[k] = acl^k e_{pos_in_n}` and `φu[k] = fu φn[k]`, placed
/// at the global indices listed in `support` and `input_support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSolutionJson {
    pub j: usize,
    pub support: Vec<usize>,
    pub boundary: Vec<usize>,
    pub input_support: Vec<usize>,
    pub pos_in_n: usize,
    pub subspace_dim: usize,
    pub acl: MatrixJson,
    pub fu: MatrixJson,
    pub init: Vec<f64>,
    pub gain: MatrixJson,
    pub riccati: MatrixJson,
    pub cost: f64,
    pub spectral_radius: f64,
    pub dare_iterations: usize,
}

impl From<&ColumnSolution> for ColumnSolutionJson {
    fn from(cs: &ColumnSolution) -> Self {
        ColumnSolutionJson {
            j: cs.j,
            support: cs.support.clone(),
            boundary: cs.boundary.clone(),
            input_support: cs.input_support.clone(),
            pos_in_n: cs.pos_in_n,
            subspace_dim: cs.subspace_dim,
            acl: MatrixJson::from_matrix(&cs.acl),
            fu: MatrixJson::from_matrix(&cs.fu),
            init: vector_to_vec(&cs.init()),
            gain: MatrixJson::from_matrix(&cs.gain),
            riccati: MatrixJson::from_matrix(&cs.riccati),
            cost: cs.cost,
            spectral_radius: cs.spectral_radius,
            dare_iterations: cs.dare_iterations,
        }
    }
}

impl ColumnSolutionJson {
    pub fn to_solution(&self, num_states: usize, num_inputs: usize) -> Result<ColumnSolution, String> {
        let s = self.support.len();
        let acl = self.acl.to_matrix()?;
        let fu = self.fu.to_matrix()?;
        if acl.shape() != (s, s) || fu.shape() != (self.input_support.len(), s) || self.pos_in_n >= s {
            return Err(format!("column {}: inconsistent generator shapes", self.j));
        }
        Ok(ColumnSolution {
            j: self.j,
            support: self.support.clone(),
            boundary: self.boundary.clone(),
            input_support: self.input_support.clone(),
            pos_in_n: self.pos_in_n,
            num_states,
            num_inputs,
            acl,
            fu,
            gain: self.gain.to_matrix()?,
            riccati: self.riccati.to_matrix()?,
            subspace_dim: self.subspace_dim,
            cost: self.cost,
            dare_iterations: self.dare_iterations,
            spectral_radius: self.spectral_radius,
            solve_time: Duration::ZERO,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedClmJson {
    pub schema_version: u32,
    pub num_states: usize,
    pub num_inputs: usize,
    pub localization: Vec<Vec<u8>>,
    pub communication: Vec<Vec<u8>>,
    pub columns: Vec<ColumnSolutionJson>,
}

/// Reduces, deconstrains and solves column `j`.
pub fn synthesize_column(
    plant: &Plant,
    loc: &Pattern,
    ext: &Pattern,
    comm: &Pattern,
    weights: &CostWeights,
    j: usize,
    opts: &SynthesisOptions,
) -> Result<ColumnSolution, ColumnError> {
    let start = Instant::now();
    let run = || -> Result<ColumnSolution, ColumnErrorKind> {
        let cp = reduce_column(plant, loc, ext, comm, weights, j)?;
        let dc = deconstrain(&cp, &opts.deconstrain)?;
        solve_column(&dc, &cp, &opts.dare)
    };
    let mut cs = run().map_err(|kind| ColumnError { column: j, kind })?;
    cs.solve_time = start.elapsed();
    Ok(cs)
}

/// Solves every column and gathers them in order.
///
/// The extended pattern is derived from the plant's adjacency. Pattern
/// inclusions are validated first; column failures are collected rather
/// than stopping at the first one.
pub fn synthesize_all(
    plant: &Plant,
    loc: &Pattern,
    comm: &Pattern,
    weights: &CostWeights,
    opts: &SynthesisOptions,
) -> Result<LocalizedClm, SynthesisError> {
    weights.check_dims(plant)?;
    let n = plant.partition().num_subsystems();
    if loc.size() != n || comm.size() != n {
        return Err(NetModelError::Shape(format!(
            "patterns are {}x{} and {}x{}, plant has {} subsystems",
            loc.size(),
            loc.size(),
            comm.size(),
            comm.size(),
            n
        ))
        .into());
    }
    let adj = adjacency_from_plant(plant);
    let ext = extended_pattern(&adj, loc);
    let report = validate_patterns(loc, comm, &ext, opts.strictness)?;
    if !report.is_valid() {
        return Err(SynthesisError::Patterns(report));
    }

    let solve = |j: usize| synthesize_column(plant, loc, &ext, comm, weights, j, opts);
    let nx = plant.num_states();
    let results: Vec<_> = if opts.parallel {
        (0..nx).into_par_iter().map(solve).collect()
    } else {
        (0..nx).map(solve).collect()
    };
    let mut columns = Vec::with_capacity(nx);
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(cs) => columns.push(cs),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(SynthesisError::Columns(errors));
    }
    Ok(LocalizedClm {
        columns,
        plant: plant.clone(),
        weights: weights.clone(),
        loc: loc.clone(),
        comm: comm.clone(),
        ext,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AchievabilityReport {
    pub horizon: usize,
    /// `max |Φx[0] − I|`.
    pub initial_residual: f64,
    /// `max |Φx[k+1] − AΦx[k] − BΦu[k]|` over `k < horizon`.
    pub recursion_residual: f64,
    /// Part of the recursion residual on states outside each column's
    /// support, i.e. what would leak past the boundary.
    pub boundary_residual: f64,
    /// First `(k, column)` whose recursion residual exceeds the tolerance.
    pub first_violation: Option<(usize, usize)>,
    /// Embedded nonzeros outside the expanded localization or
    /// communication pattern.
    pub support_violations: usize,
    pub passed: bool,
}

/// Checks `Φx[0] = I`, the CLM recursion and pattern compliance of every
/// column up to `horizon`.
pub fn verify_achievability(clm: &LocalizedClm, horizon: usize, tol: f64) -> AchievabilityReport {
    let part = clm.plant.partition();
    let state_mask = expand_to_states(&clm.loc, part, RowKind::State);
    let input_mask = expand_to_states(&clm.comm, part, RowKind::Input);
    let per_column: Vec<ColumnCheck> = clm
        .columns
        .iter()
        .map(|cs| check_column(clm.plant.a(), clm.plant.b(), cs, horizon, tol, &state_mask, &input_mask))
        .collect();

    let mut report = AchievabilityReport {
        horizon,
        ..Default::default()
    };
    for (cs, c) in clm.columns.iter().zip(&per_column) {
        report.initial_residual = report.initial_residual.max(c.initial);
        report.recursion_residual = report.recursion_residual.max(c.recursion);
        report.boundary_residual = report.boundary_residual.max(c.boundary);
        report.support_violations += c.support_violations;
        if let Some(k) = c.first_bad {
            let better = match report.first_violation {
                None => true,
                Some((k0, _)) => k < k0,
            };
            if better {
                report.first_violation = Some((k, cs.j));
            }
        }
    }
    if clm.columns.len() != clm.num_states() {
        report.support_violations += 1;
    }
    report.passed = report.initial_residual <= tol
        && report.recursion_residual <= tol
        && report.first_violation.is_none()
        && report.support_violations == 0;
    report
}

struct ColumnCheck {
    initial: f64,
    recursion: f64,
    boundary: f64,
    first_bad: Option<usize>,
    support_violations: usize,
}

fn check_column(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    cs: &ColumnSolution,
    horizon: usize,
    tol: f64,
    state_mask: &BoolMatrix,
    input_mask: &BoolMatrix,
) -> ColumnCheck {
    let nx = a.nrows();
    let mut check = ColumnCheck {
        initial: 0.0,
        recursion: 0.0,
        boundary: 0.0,
        first_bad: None,
        support_violations: 0,
    };
    let mut in_support = vec![false; nx];
    for &g in &cs.support {
        in_support[g] = true;
        if !state_mask.get(g, cs.j) {
            check.support_violations += 1;
        }
    }
    for &g in &cs.input_support {
        if !input_mask.get(g, cs.j) {
            check.support_violations += 1;
        }
    }

    let mut iter = cs.spectral_iter();
    let (mut phi_n, mut phi_u) = iter.next().expect("infinite");
    let (x0, _) = cs.embed(&phi_n, &phi_u);
    for i in 0..nx {
        let target = if i == cs.j { 1.0 } else { 0.0 };
        check.initial = check.initial.max((x0[i] - target).abs());
    }
    for k in 0..horizon {
        // A Φx[k] e_j + B Φu[k] e_j using only the nonzero entries.
        let mut pred = DVector::<f64>::zeros(nx);
        for (p, &g) in cs.support.iter().enumerate() {
            pred.axpy(phi_n[p], &a.column(g), 1.0);
        }
        for (p, &g) in cs.input_support.iter().enumerate() {
            pred.axpy(phi_u[p], &b.column(g), 1.0);
        }
        let (next_n, next_u) = iter.next().expect("infinite");
        let mut worst = 0.0f64;
        for (p, &g) in cs.support.iter().enumerate() {
            pred[g] -= next_n[p];
        }
        for i in 0..nx {
            let r = pred[i].abs();
            worst = worst.max(r);
            if !in_support[i] {
                check.boundary = check.boundary.max(r);
            }
        }
        check.recursion = check.recursion.max(worst);
        if worst > tol && check.first_bad.is_none() {
            check.first_bad = Some(k);
        }
        phi_n = next_n;
        phi_u = next_u;
    }
    check
}
