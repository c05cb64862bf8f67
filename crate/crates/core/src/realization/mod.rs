//! Sub-controller realization of a localized CLM.
//!
//! Column `ℓ` of the CLM becomes a small state machine owned by state `ℓ`.
//! It keeps `ξ_ℓ = Σ_{k≥1} φn_ℓ[k] ŵ_ℓ[t−k]` in the support coordinates of
//! its column, estimates its own disturbance from the measured state and the
//! internal states of the columns whose localized regions cover it, and
//! contributes `u_ℓ` to the global input. The sum of all contributions is
//! the control law whose closed loop realizes the CLM.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::column::{ColumnSolution, LocalizedClm};
use crate::json::MatrixJson;
use crate::linalg::spectral_radius;
use crate::netmodel::{Pattern, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizationError {
    #[error("no column solution for state {0}")]
    MissingColumn(usize),
    #[error("state vector has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// A state-feedback law driven one tick at a time.
pub trait Controller {
    /// Control input for the current measured state; advances internal state.
    fn control(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, RealizationError>;

    /// Disturbance estimate formed during the last call to [`Controller::control`].
    fn disturbance_estimate(&self) -> Option<DVector<f64>> {
        None
    }

    fn reset(&mut self);
}

/// `ξ_ℓ` reads `ξ_source` at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborRead {
    pub source: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubController {
    pub ell: usize,
    pub a_k: DMatrix<f64>,
    pub b_k: DVector<f64>,
    pub c_k: DMatrix<f64>,
    pub d_k: DVector<f64>,
    pub xi: DVector<f64>,
    pub w_hat: f64,
    /// Reads that form `ŵ_ℓ`, including the read of its own `ξ_ℓ`.
    pub neighbor_reads: Vec<NeighborRead>,
    /// Global state indices of the entries of `ξ_ℓ`.
    pub support: Vec<usize>,
    /// Global input indices of the entries of `u_ℓ`.
    pub input_support: Vec<usize>,
    /// Position of `ℓ` in its own support.
    pub self_pos: usize,
}

impl SubController {
    /// `u_ℓ` impulse response to `ŵ_ℓ`: `D_K`, then `C_K A_K^{k−1} B_K`.
    pub fn input_markov(&self, count: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d_k.clone());
        let mut s = self.b_k.clone();
        for _ in 1..count {
            out.push(&self.c_k * &s);
            s = &self.a_k * s;
        }
        out
    }

    /// Internal-state impulse response to `ŵ_ℓ`: `e_ℓ̃`, then `A_K^{k−1} B_K`.
    pub fn state_markov(&self, count: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        let mut e = DVector::zeros(self.support.len());
        e[self.self_pos] = 1.0;
        out.push(e);
        let mut s = self.b_k.clone();
        for _ in 1..count {
            out.push(s.clone());
            s = &self.a_k * s;
        }
        out
    }
}

/// Builds the sub-controller of state `ell` from its column generator.
///
/// Reads come from every column whose support contains `ell`; that is the
/// set of columns `i` with `S^L(sub ℓ, sub i) ≠ 0`.
pub fn build_subcontroller(clm: &LocalizedClm, ell: usize) -> Result<SubController, RealizationError> {
    let cs = clm
        .columns
        .get(ell)
        .filter(|c| c.j == ell)
        .ok_or(RealizationError::MissingColumn(ell))?;
    let part = clm.plant.partition();
    let own = part.subsystem_of_state(ell);
    let mut reads = Vec::new();
    for other in &clm.columns {
        if !clm.loc.get(own, part.subsystem_of_state(other.j)) {
            continue;
        }
        if let Ok(position) = other.support.binary_search(&ell) {
            reads.push(NeighborRead {
                source: other.j,
                position,
            });
        }
    }
    Ok(from_column(cs, reads))
}

fn from_column(cs: &ColumnSolution, neighbor_reads: Vec<NeighborRead>) -> SubController {
    let s = cs.support.len();
    SubController {
        ell: cs.j,
        b_k: cs.acl.column(cs.pos_in_n).into_owned(),
        d_k: cs.fu.column(cs.pos_in_n).into_owned(),
        a_k: cs.acl.clone(),
        c_k: cs.fu.clone(),
        xi: DVector::zeros(s),
        w_hat: 0.0,
        neighbor_reads,
        support: cs.support.clone(),
        input_support: cs.input_support.clone(),
        self_pos: cs.pos_in_n,
    }
}

/// All sub-controllers, run with a strict two-phase tick.
#[derive(Debug, Clone)]
pub struct DistributedController {
    pub subs: Vec<SubController>,
    num_states: usize,
    num_inputs: usize,
    subsystem_of_state: Vec<usize>,
    subsystem_of_input: Vec<usize>,
}

impl DistributedController {
    pub fn new(clm: &LocalizedClm) -> Result<Self, RealizationError> {
        let subs = (0..clm.num_states())
            .map(|l| build_subcontroller(clm, l))
            .collect::<Result<Vec<_>, _>>()?;
        let part = clm.plant.partition();
        Ok(DistributedController {
            subs,
            num_states: clm.num_states(),
            num_inputs: clm.num_inputs(),
            subsystem_of_state: (0..clm.num_states()).map(|l| part.subsystem_of_state(l)).collect(),
            subsystem_of_input: (0..clm.num_inputs()).map(|l| part.subsystem_of_input(l)).collect(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    /// One tick: every `ŵ_ℓ` is formed from the states published at the
    /// previous tick, then every sub-controller advances and emits `u_ℓ`.
    pub fn step(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, RealizationError> {
        if x.len() != self.num_states {
            return Err(RealizationError::Dimension {
                got: x.len(),
                expected: self.num_states,
            });
        }
        let w_hat: Vec<f64> = self
            .subs
            .iter()
            .map(|sub| {
                let echo: f64 = sub
                    .neighbor_reads
                    .iter()
                    .map(|r| self.subs[r.source].xi[r.position])
                    .sum();
                x[sub.ell] - echo
            })
            .collect();
        let mut u = DVector::zeros(self.num_inputs);
        for (sub, w) in self.subs.iter_mut().zip(w_hat) {
            sub.w_hat = w;
            let u_l = &sub.c_k * &sub.xi + &sub.d_k * w;
            for (p, &g) in sub.input_support.iter().enumerate() {
                u[g] += u_l[p];
            }
            sub.xi = &sub.a_k * &sub.xi + &sub.b_k * w;
        }
        Ok(u)
    }

    pub fn w_hat(&self) -> DVector<f64> {
        DVector::from_iterator(self.num_states, self.subs.iter().map(|s| s.w_hat))
    }

    pub fn max_internal_spectral_radius(&self) -> f64 {
        self.subs.iter().map(|s| spectral_radius(&s.a_k)).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> ControllerJson {
        ControllerJson {
            schema_version: SCHEMA_VERSION,
            num_states: self.num_states,
            num_inputs: self.num_inputs,
            subcontrollers: self
                .subs
                .iter()
                .map(|s| SubControllerJson {
                    ell: s.ell,
                    support: s.support.clone(),
                    input_support: s.input_support.clone(),
                    a_k: MatrixJson::from_matrix(&s.a_k),
                    b_k: s.b_k.iter().copied().collect(),
                    c_k: MatrixJson::from_matrix(&s.c_k),
                    d_k: s.d_k.iter().copied().collect(),
                    neighbor_reads: s.neighbor_reads.iter().map(|r| [r.source, r.position]).collect(),
                })
                .collect(),
        }
    }
}

impl Controller for DistributedController {
    fn control(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, RealizationError> {
        self.step(x)
    }

    fn disturbance_estimate(&self) -> Option<DVector<f64>> {
        Some(self.w_hat())
    }

    fn reset(&mut self) {
        for s in &mut self.subs {
            s.xi.fill(0.0);
            s.w_hat = 0.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubControllerJson {
    pub ell: usize,
    pub support: Vec<usize>,
    pub input_support: Vec<usize>,
    pub a_k: MatrixJson,
    pub b_k: Vec<f64>,
    pub c_k: MatrixJson,
    pub d_k: Vec<f64>,
    /// `[source column, position in its internal state]`.
    pub neighbor_reads: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerJson {
    pub schema_version: u32,
    pub num_states: usize,
    pub num_inputs: usize,
    pub subcontrollers: Vec<SubControllerJson>,
}

/// The CLM controller in its direct form:
/// `ŵ[t] = x[t] − Σ_{k≥1} Φx[k] ŵ[t−k]`, `u[t] = Σ_{k≥0} Φu[k] ŵ[t−k]`.
///
/// Spectral elements are generated on demand as the history grows.
#[derive(Debug, Clone)]
pub struct MonolithicController {
    columns: Vec<ColumnSolution>,
    num_states: usize,
    num_inputs: usize,
    phi: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    history: Vec<DVector<f64>>,
}

impl MonolithicController {
    pub fn new(clm: &LocalizedClm) -> Self {
        MonolithicController {
            columns: clm.columns.clone(),
            num_states: clm.num_states(),
            num_inputs: clm.num_inputs(),
            phi: Vec::new(),
            history: Vec::new(),
        }
    }

    fn ensure(&mut self, count: usize) {
        if self.phi.len() >= count {
            return;
        }
        let target = count.max(2 * self.phi.len()).max(8);
        let (nx, nu) = (self.num_states, self.num_inputs);
        let start = self.phi.len();
        let mut fresh: Vec<_> = (start..target)
            .map(|_| (DMatrix::zeros(nx, nx), DMatrix::zeros(nu, nx)))
            .collect();
        for cs in &self.columns {
            for (k, (n, u)) in cs.spectral_iter().take(target).enumerate().skip(start) {
                let (px, pu) = &mut fresh[k - start];
                for (p, &g) in cs.support.iter().enumerate() {
                    px[(g, cs.j)] = n[p];
                }
                for (p, &g) in cs.input_support.iter().enumerate() {
                    pu[(g, cs.j)] = u[p];
                }
            }
        }
        self.phi.extend(fresh);
    }
}

impl Controller for MonolithicController {
    fn control(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, RealizationError> {
        if x.len() != self.num_states {
            return Err(RealizationError::Dimension {
                got: x.len(),
                expected: self.num_states,
            });
        }
        let t = self.history.len();
        self.ensure(t + 1);
        let mut w = x.clone();
        for k in 1..=t {
            w -= &self.phi[k].0 * &self.history[t - k];
        }
        self.history.push(w);
        let mut u = DVector::zeros(self.num_inputs);
        for k in 0..=t {
            u += &self.phi[k].1 * &self.history[t - k];
        }
        Ok(u)
    }

    fn disturbance_estimate(&self) -> Option<DVector<f64>> {
        self.history.last().cloned()
    }

    fn reset(&mut self) {
        self.history.clear();
    }
}

/// `x[t] = Σ_k Φx[k] w[t−k]`, `u[t] = Σ_k Φu[k] w[t−k]` for `t < w.len()`.
pub fn monolithic_reference(clm: &LocalizedClm, w: &[DVector<f64>]) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let horizon = w.len();
    let mut xs = vec![DVector::zeros(clm.num_states()); horizon];
    let mut us = vec![DVector::zeros(clm.num_inputs()); horizon];
    for cs in &clm.columns {
        for (k, (n, u)) in cs.spectral_iter().take(horizon).enumerate() {
            for t in k..horizon {
                let wj = w[t - k][cs.j];
                if wj == 0.0 {
                    continue;
                }
                for (p, &g) in cs.support.iter().enumerate() {
                    xs[t][g] += n[p] * wj;
                }
                for (p, &g) in cs.input_support.iter().enumerate() {
                    us[t][g] += u[p] * wj;
                }
            }
        }
    }
    (xs, us)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// Sub-controller `ell` reads the internal state of column `other`.
    Read,
    /// Sub-controller `ell` drives input `other`.
    Actuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommViolation {
    pub kind: LinkKind,
    pub ell: usize,
    pub other: usize,
    /// Subsystem receiving the information.
    pub receiver: usize,
    /// Subsystem sending it.
    pub sender: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CommAudit {
    pub cross_reads: usize,
    pub cross_actuations: usize,
    pub violations: Vec<CommViolation>,
}

impl CommAudit {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every cross-subsystem read and actuation that `comm` does not permit.
pub fn communication_audit(dc: &DistributedController, comm: &Pattern) -> CommAudit {
    let mut audit = CommAudit::default();
    for sub in &dc.subs {
        let own = dc.subsystem_of_state[sub.ell];
        for r in &sub.neighbor_reads {
            let sender = dc.subsystem_of_state[r.source];
            if sender == own {
                continue;
            }
            audit.cross_reads += 1;
            if !comm.get(own, sender) {
                audit.violations.push(CommViolation {
                    kind: LinkKind::Read,
                    ell: sub.ell,
                    other: r.source,
                    receiver: own,
                    sender,
                });
            }
        }
        for &g in &sub.input_support {
            let receiver = dc.subsystem_of_input[g];
            if receiver == own {
                continue;
            }
            audit.cross_actuations += 1;
            if !comm.get(receiver, own) {
                audit.violations.push(CommViolation {
                    kind: LinkKind::Actuation,
                    ell: sub.ell,
                    other: g,
                    receiver,
                    sender: own,
                });
            }
        }
    }
    audit
}
