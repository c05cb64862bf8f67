use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::json::fmt_f64;
use crate::linalg::{dare_solve, DareOptions};
use crate::netmodel::{CostWeights, NetModelError, Pattern, Plant};
use crate::realization::{Controller, RealizationError};

use super::EvalError;

/// Closed-loop state, input and (optionally) disturbance-estimate sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<DVector<f64>>,
    pub us: Vec<DVector<f64>>,
    pub w_hats: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Columns `t, x_1.., u_1.., what_1..`; `what` columns are present only
    /// when estimates were recorded.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let nx = self.xs.first().map_or(0, |x| x.len());
        let nu = self.us.first().map_or(0, |u| u.len());
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=nx).map(|i| format!("x_{i}")));
        header.extend((1..=nu).map(|i| format!("u_{i}")));
        if self.w_hats.is_some() {
            header.extend((1..=nx).map(|i| format!("what_{i}")));
        }
        wtr.write_record(&header).map_err(EvalError::io)?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.xs[t].iter().map(|&v| fmt_f64(v)));
            row.extend(self.us[t].iter().map(|&v| fmt_f64(v)));
            if let Some(w) = &self.w_hats {
                row.extend(w[t].iter().map(|&v| fmt_f64(v)));
            }
            wtr.write_record(&row).map_err(EvalError::io)?;
        }
        wtr.flush().map_err(EvalError::io)?;
        Ok(())
    }
}

/// Plant rollout `x[t+1] = A x[t] + B u[t] + w[t+1]` from `x[0] = w[0]`,
/// for `t < w.len()`.
pub fn simulate_closed_loop(
    plant: &Plant,
    controller: &mut dyn Controller,
    w: &[DVector<f64>],
) -> Result<Trajectory, EvalError> {
    let nx = plant.num_states();
    if let Some(bad) = w.iter().find(|v| v.len() != nx) {
        return Err(RealizationError::Dimension {
            got: bad.len(),
            expected: nx,
        }
        .into());
    }
    let mut xs = Vec::with_capacity(w.len());
    let mut us = Vec::with_capacity(w.len());
    let mut w_hats = Vec::with_capacity(w.len());
    let mut record_estimates = true;
    let mut x = match w.first() {
        Some(w0) => w0.clone(),
        None => DVector::zeros(nx),
    };
    for t in 0..w.len() {
        let u = controller.control(&x)?;
        match controller.disturbance_estimate() {
            Some(e) if record_estimates => w_hats.push(e),
            _ => record_estimates = false,
        }
        let next = if t + 1 < w.len() {
            Some(plant.a() * &x + plant.b() * &u + &w[t + 1])
        } else {
            None
        };
        xs.push(x);
        us.push(u);
        match next {
            Some(n) => x = n,
            None => break,
        }
    }
    Ok(Trajectory {
        xs,
        us,
        w_hats: record_estimates.then_some(w_hats),
    })
}

/// Static state feedback `u = K x`.
#[derive(Debug, Clone)]
pub struct StaticGainController {
    pub k: DMatrix<f64>,
}

impl Controller for StaticGainController {
    fn control(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, RealizationError> {
        if x.len() != self.k.ncols() {
            return Err(RealizationError::Dimension {
                got: x.len(),
                expected: self.k.ncols(),
            });
        }
        Ok(&self.k * x)
    }

    fn reset(&mut self) {}
}

/// Centralized infinite-horizon LQR gain, ignoring every pattern.
pub fn global_lqr_controller(plant: &Plant, weights: &CostWeights) -> Result<StaticGainController, EvalError> {
    let sol = dare_solve(plant.a(), plant.b(), weights.q(), weights.r(), &DareOptions::default())
        .map_err(|e| EvalError::Model(NetModelError::NotStabilizable(e)))?;
    Ok(StaticGainController { k: sol.k })
}

/// `w[0] = e_j`, zero afterwards.
pub fn impulse(nx: usize, j: usize, steps: usize) -> Vec<DVector<f64>> {
    let mut w = vec![DVector::zeros(nx); steps];
    if steps > 0 {
        w[0][j] = 1.0;
    }
    w
}

/// Unit-covariance Gaussian disturbances from a seeded ChaCha stream.
pub fn gaussian_disturbance(nx: usize, steps: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| DVector::from_fn(nx, |_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

/// Largest state magnitude outside the localized region of disturbance source `j`.
pub fn localization_leak(traj: &Trajectory, loc: &Pattern, plant: &Plant, j: usize) -> f64 {
    let part = plant.partition();
    let src = part.subsystem_of_state(j);
    let outside: Vec<usize> = (0..plant.num_states())
        .filter(|&l| !loc.get(part.subsystem_of_state(l), src))
        .collect();
    traj.xs
        .iter()
        .flat_map(|x| outside.iter().map(move |&l| x[l].abs()))
        .fold(0.0, f64::max)
}

/// Stage cost `x'Qx + u'Ru` at every step.
pub fn stage_costs(traj: &Trajectory, weights: &CostWeights) -> Vec<f64> {
    traj.xs
        .iter()
        .zip(&traj.us)
        .map(|(x, u)| (x.transpose() * weights.q() * x)[0] + (u.transpose() * weights.r() * u)[0])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub batches: usize,
    pub steps: usize,
}

/// Batch-means estimate of the average stage cost under unit white noise.
///
/// The first `burn_in` steps are discarded; the rest is split into
/// `batches` equal blocks whose means give the standard error.
pub fn monte_carlo_cost(
    plant: &Plant,
    controller: &mut dyn Controller,
    weights: &CostWeights,
    steps: usize,
    burn_in: usize,
    batches: usize,
    seed: u64,
) -> Result<MonteCarloEstimate, EvalError> {
    assert!(batches >= 2 && steps > burn_in + batches);
    controller.reset();
    let w = gaussian_disturbance(plant.num_states(), steps, seed);
    let traj = simulate_closed_loop(plant, controller, &w)?;
    let costs = stage_costs(&traj, weights);
    let tail = &costs[burn_in..];
    let size = tail.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| tail[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / batches as f64).sqrt(),
        batches,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::{synthesize_all, LocalizedClm, SynthesisOptions};
    use crate::eval::h2_cost_lyapunov;
    use crate::netmodel::testutil::chain_adjacency;
    use crate::netmodel::{chain_benchmark, d_hop_pattern, ChainParams, PatternRole};
    use crate::realization::{DistributedController, MonolithicController};

    fn chain(n: usize, d: usize) -> (LocalizedClm, CostWeights) {
        let (plant, w) = chain_benchmark(&ChainParams {
            n,
            ..Default::default()
        })
        .unwrap();
        let adj = chain_adjacency(n);
        let loc = d_hop_pattern(&adj, d).with_role(PatternRole::Localization);
        let comm = d_hop_pattern(&adj, d + 1).with_role(PatternRole::Communication);
        (
            synthesize_all(&plant, &loc, &comm, &w, &SynthesisOptions::default()).unwrap(),
            w,
        )
    }

    #[test]
    fn zero_disturbance_stays_zero() {
        let (clm, _) = chain(5, 1);
        let mut dc = DistributedController::new(&clm).unwrap();
        let traj = simulate_closed_loop(&clm.plant, &mut dc, &vec![DVector::zeros(5); 20]).unwrap();
        assert!(traj.xs.iter().chain(&traj.us).all(|v| v.amax() == 0.0));
    }

    #[test]
    fn impulse_matches_column_and_stays_local() {
        let (clm, _) = chain(5, 1);
        let phis = clm.spectral_matrices(60);
        for j in 0..5 {
            let mut dc = DistributedController::new(&clm).unwrap();
            let traj = simulate_closed_loop(&clm.plant, &mut dc, &impulse(5, j, 60)).unwrap();
            for (t, x) in traj.xs.iter().enumerate() {
                assert!((x - phis[t].0.column(j)).amax() < 1e-10);
            }
            assert!(localization_leak(&traj, &clm.loc, &clm.plant, j) <= 1e-9);
        }
    }

    #[test]
    fn global_lqr_leaks() {
        let (clm, w) = chain(20, 2);
        let mut k = global_lqr_controller(&clm.plant, &w).unwrap();
        let traj = simulate_closed_loop(&clm.plant, &mut k, &impulse(20, 10, 50)).unwrap();
        assert!(traj.w_hats.is_none());
        assert!(localization_leak(&traj, &clm.loc, &clm.plant, 10) > 1e-3);
        let dense = Pattern::ones(20, PatternRole::Localization);
        assert_eq!(localization_leak(&traj, &dense, &clm.plant, 10), 0.0);
    }

    #[test]
    fn monte_carlo_close_to_h2() {
        let (clm, w) = chain(20, 5);
        let h2 = h2_cost_lyapunov(&clm, &w).unwrap().total;
        let mut dc = DistributedController::new(&clm).unwrap();
        let est = monte_carlo_cost(&clm.plant, &mut dc, &w, 2000, 100, 19, 7).unwrap();
        assert!((est.mean - h2).abs() < 0.05 * h2, "{} vs {h2}", est.mean);
    }

    #[test]
    fn csv_layout() {
        let (clm, _) = chain(5, 1);
        let mut mono = MonolithicController::new(&clm);
        let traj = simulate_closed_loop(&clm.plant, &mut mono, &impulse(5, 0, 3)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("t,x_1,x_2,x_3,x_4,x_5,u_1,"));
        assert!(header.ends_with("what_5"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (clm, _) = chain(5, 1);
        let mut dc = DistributedController::new(&clm).unwrap();
        assert!(simulate_closed_loop(&clm.plant, &mut dc, &[DVector::zeros(3)]).is_err());
    }
}
