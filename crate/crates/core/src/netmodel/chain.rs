use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CostWeights, NetModelError, Plant, SubsystemPartition};

/// Bidirectional scalar chain
/// `x_i[t+1] = rho (1 - 2 alpha) x_i[t] + rho alpha (x_{i-1}[t] + x_{i+1}[t]) + u_i[t] + w_i[t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n: usize,
    pub alpha: f64,
    pub rho: f64,
    /// Fraction of nodes carrying an actuator, spread evenly from node 0.
    pub density: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            n: 20,
            alpha: 0.4,
            rho: 1.25,
            density: 1.0,
        }
    }
}

impl ChainParams {
    /// Node `i` is actuated when `ceil((i+1) d) > ceil(i d)`; for `d = 1/2`
    /// that is every other node starting with the first.
    pub fn actuated(&self, i: usize) -> bool {
        ((i + 1) as f64 * self.density).ceil() > (i as f64 * self.density).ceil()
    }
}

/// Chain plant with identity weights.
pub fn chain_benchmark(params: &ChainParams) -> Result<(Plant, CostWeights), NetModelError> {
    let ChainParams { n, alpha, rho, density } = *params;
    if n < 2 {
        return Err(NetModelError::Parameter(format!(
            "chain needs at least 2 nodes, got {}",
            n
        )));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(NetModelError::Parameter(format!(
            "alpha must lie in [0, 0.5], got {}",
            alpha
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(NetModelError::Parameter(format!("rho must be positive, got {}", rho)));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(NetModelError::Parameter(format!(
            "actuation density must lie in (0, 1], got {}",
            density
        )));
    }
    let diag = rho * (1.0 - 2.0 * alpha);
    let off = rho * alpha;
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            0.0
        }
    });
    let input_dims: Vec<usize> = (0..n).map(|i| params.actuated(i) as usize).collect();
    let partition = SubsystemPartition::new(vec![1; n], input_dims)?;
    let nu = partition.num_inputs();
    let mut b = DMatrix::zeros(n, nu);
    for i in 0..n {
        for k in partition.input_range(i) {
            b[(i, k)] = 1.0;
        }
    }
    let plant = Plant::new(a, b, partition)?;
    Ok((plant, CostWeights::identity(n, nu)))
}
