//! Interconnected plants, subsystem partitions and binary sparsity patterns.

mod chain;
mod io;
mod pattern;

pub use chain::{chain_benchmark, ChainParams};
pub use io::{PartitionJson, PatternJson, PlantFile, PlantJson, WeightsJson, SCHEMA_VERSION};
pub use pattern::{
    boundary_sets, d_hop_pattern, expand_to_states, extended_pattern, validate_patterns, BoolMatrix, BoundarySet,
    CommStrictness, Pattern, PatternReport, PatternRole, PatternViolation, RowKind, ViolationKind,
};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{dare_solve, DareOptions, LinalgError};

/// Block entries with magnitude at or below this count as structural zeros.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid pattern: {0}")]
    Pattern(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid cost weights: {0}")]
    Weights(String),
    #[error("plant is not stabilizable under the given weights: {0}")]
    NotStabilizable(LinalgError),
}

/// Splits the global state and input vectors into per-subsystem blocks.
///
/// Every subsystem owns at least one state; it may own no inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemPartition {
    state_dims: Vec<usize>,
    input_dims: Vec<usize>,
    state_offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    state_owner: Vec<usize>,
    input_owner: Vec<usize>,
}

impl SubsystemPartition {
    pub fn new(state_dims: Vec<usize>, input_dims: Vec<usize>) -> Result<Self, NetModelError> {
        if state_dims.is_empty() {
            return Err(NetModelError::Shape("partition has no subsystems".into()));
        }
        if state_dims.len() != input_dims.len() {
            return Err(NetModelError::Shape(format!(
                "{} state blocks but {} input blocks",
                state_dims.len(),
                input_dims.len()
            )));
        }
        if let Some(i) = state_dims.iter().position(|&n| n == 0) {
            return Err(NetModelError::Shape(format!("subsystem {} has no states", i)));
        }
        let offsets = |dims: &[usize]| {
            let mut acc = 0;
            let mut out = Vec::with_capacity(dims.len() + 1);
            out.push(0);
            for &d in dims {
                acc += d;
                out.push(acc);
            }
            out
        };
        let owners = |dims: &[usize]| {
            dims.iter()
                .enumerate()
                .flat_map(|(i, &d)| std::iter::repeat_n(i, d))
                .collect::<Vec<_>>()
        };
        Ok(SubsystemPartition {
            state_offsets: offsets(&state_dims),
            input_offsets: offsets(&input_dims),
            state_owner: owners(&state_dims),
            input_owner: owners(&input_dims),
            state_dims,
            input_dims,
        })
    }

    /// `n` subsystems with one state and one input each.
    pub fn scalar(n: usize) -> Self {
        Self::new(vec![1; n], vec![1; n]).expect("scalar partition")
    }

    pub fn num_subsystems(&self) -> usize {
        self.state_dims.len()
    }

    pub fn num_states(&self) -> usize {
        *self.state_offsets.last().unwrap()
    }

    pub fn num_inputs(&self) -> usize {
        *self.input_offsets.last().unwrap()
    }

    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn state_range(&self, i: usize) -> std::ops::Range<usize> {
        self.state_offsets[i]..self.state_offsets[i + 1]
    }

    pub fn input_range(&self, i: usize) -> std::ops::Range<usize> {
        self.input_offsets[i]..self.input_offsets[i + 1]
    }

    /// Subsystem owning global state `l`.
    pub fn subsystem_of_state(&self, l: usize) -> usize {
        self.state_owner[l]
    }

    pub fn subsystem_of_input(&self, l: usize) -> usize {
        self.input_owner[l]
    }

    /// Global state indices of every subsystem `i` with `mask[i]`.
    pub fn states_of(&self, mask: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.num_subsystems())
            .filter(|&i| mask(i))
            .flat_map(|i| self.state_range(i))
            .collect()
    }

    pub fn inputs_of(&self, mask: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.num_subsystems())
            .filter(|&i| mask(i))
            .flat_map(|i| self.input_range(i))
            .collect()
    }
}

/// `x[t] = A x[t-1] + B u[t-1] + w[t]` over a subsystem partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    partition: SubsystemPartition,
}

impl Plant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, partition: SubsystemPartition) -> Result<Self, NetModelError> {
        let nx = partition.num_states();
        let nu = partition.num_inputs();
        if a.shape() != (nx, nx) {
            return Err(NetModelError::Shape(format!(
                "A is {}x{}, partition needs {}x{}",
                a.nrows(),
                a.ncols(),
                nx,
                nx
            )));
        }
        if b.shape() != (nx, nu) {
            return Err(NetModelError::Shape(format!(
                "B is {}x{}, partition needs {}x{}",
                b.nrows(),
                b.ncols(),
                nx,
                nu
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(NetModelError::Parameter("plant has non-finite entries".into()));
        }
        Ok(Plant { a, b, partition })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn partition(&self) -> &SubsystemPartition {
        &self.partition
    }

    pub fn num_states(&self) -> usize {
        self.partition.num_states()
    }

    pub fn num_inputs(&self) -> usize {
        self.partition.num_inputs()
    }

    /// Runs the global Riccati solver; failure means `(A, B)` is not
    /// stabilizable (or `(A, Q)` not detectable) for practical purposes.
    pub fn check_stabilizable(&self, weights: &CostWeights) -> Result<(), NetModelError> {
        dare_solve(&self.a, &self.b, weights.q(), weights.r(), &DareOptions::default())
            .map(|_| ())
            .map_err(NetModelError::NotStabilizable)
    }
}

/// State and input weights of the H2 objective.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl CostWeights {
    /// Symmetric positive definite `Q` and `R`.
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self, NetModelError> {
        let w = Self::new_semidefinite(q, r)?;
        for (name, m) in [("Q", &w.q), ("R", &w.r)] {
            if m.nrows() > 0 && m.clone().cholesky().is_none() {
                return Err(NetModelError::Weights(format!("{} is not positive definite", name)));
            }
        }
        Ok(w)
    }

    /// Symmetric positive semidefinite weights; enough for cost evaluation
    /// but not for synthesis.
    pub fn new_semidefinite(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self, NetModelError> {
        for (name, m) in [("Q", &q), ("R", &r)] {
            if !m.is_square() {
                return Err(NetModelError::Weights(format!("{} is not square", name)));
            }
            if !crate::linalg::is_symmetric(m, 1e-10) {
                return Err(NetModelError::Weights(format!("{} is not symmetric", name)));
            }
            if m.nrows() > 0 {
                let min_eig = m.clone().symmetric_eigen().eigenvalues.min();
                if min_eig < -1e-12 * (1.0 + m.amax()) {
                    return Err(NetModelError::Weights(format!(
                        "{} has negative eigenvalue {}",
                        name, min_eig
                    )));
                }
            }
        }
        let q = (&q + q.transpose()) * 0.5;
        let r = (&r + r.transpose()) * 0.5;
        Ok(CostWeights { q, r })
    }

    pub fn identity(nx: usize, nu: usize) -> Self {
        CostWeights {
            q: DMatrix::identity(nx, nx),
            r: DMatrix::identity(nu, nu),
        }
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn check_dims(&self, plant: &Plant) -> Result<(), NetModelError> {
        if self.q.nrows() != plant.num_states() || self.r.nrows() != plant.num_inputs() {
            return Err(NetModelError::Shape(format!(
                "weights are {}x{} / {}x{}, plant has {} states and {} inputs",
                self.q.nrows(),
                self.q.ncols(),
                self.r.nrows(),
                self.r.ncols(),
                plant.num_states(),
                plant.num_inputs()
            )));
        }
        Ok(())
    }
}

/// Open-loop interconnection pattern: `adj(i,j) = 1` iff block `A^{ij}` has an
/// entry above [`SUPPORT_TOL`], with the diagonal always set.
pub fn adjacency_from_plant(plant: &Plant) -> Pattern {
    let part = plant.partition();
    let n = part.num_subsystems();
    let a = plant.a();
    let m = BoolMatrix::from_fn(n, n, |i, j| {
        i == j
            || part
                .state_range(i)
                .any(|r| part.state_range(j).any(|c| a[(r, c)].abs() > SUPPORT_TOL))
    });
    Pattern::new(m, PatternRole::Adjacency).expect("unit diagonal")
}
