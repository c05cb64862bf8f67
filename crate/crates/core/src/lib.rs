//! Localized and distributed infinite-horizon H2 state-feedback synthesis.
//!
//! The crate computes closed-loop maps (CLMs) for networked linear systems
//! one state column at a time. Each column is reduced to the states its
//! disturbance is allowed to reach, the boundary states are pinned to zero
//! through an affine input parameterization, and the remaining free problem
//! is an ordinary LQR solved with a discrete algebraic Riccati equation.
//! The resulting columns are realized as communication-constrained
//! sub-controllers whose outputs superpose into the global control action.
//!
//! Module map:
//!
//! - [`netmodel`]: plants, subsystem partitions, sparsity patterns, the chain benchmark.
//! - [`linalg`]: Riccati, Stein, pseudo-inverse, kernel and KKT kernels.
//! - [`column`]: per-column reduction, de-constraining, Riccati solve, CLM assembly.
//! - [`realization`]: sub-controllers, distributed execution, monolithic reference.
//! - [`eval`]: H2 cost, simulation, localization leak, FIR baseline, sweeps.
//! - [`cli`]: configuration and command execution behind the `lsls` binary.

pub mod cli;
pub mod column;
pub mod eval;
pub mod json;
pub mod linalg;
pub mod netmodel;
pub mod realization;

pub use column::{synthesize_all, ColumnSolution, LocalizedClm, SynthesisOptions};
pub use netmodel::{chain_benchmark, ChainParams, CostWeights, Pattern, PatternRole, Plant, SubsystemPartition};
