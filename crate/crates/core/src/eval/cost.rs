use serde::Serialize;

use crate::column::{submatrix, ColumnSolution, LocalizedClm};
use crate::linalg::dlyap_solve;
use crate::netmodel::CostWeights;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMethod {
    Lyapunov,
    Truncated { terms: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub total: f64,
    pub per_column: Vec<f64>,
    pub method: CostMethod,
}

impl CostReport {
    fn from_columns(per_column: Vec<f64>, method: CostMethod) -> Self {
        CostReport {
            total: per_column.iter().sum(),
            per_column,
            method,
        }
    }
}

fn local_weights(cs: &ColumnSolution, weights: &CostWeights) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let q = submatrix(weights.q(), &cs.support, &cs.support);
    let r = submatrix(weights.r(), &cs.input_support, &cs.input_support);
    (q, r)
}

/// Exact H2 cost: per column, `e' G e` with `G = Acl' G Acl + Q̂ + Fu' R̂ Fu`.
pub fn h2_cost_lyapunov(clm: &LocalizedClm, weights: &CostWeights) -> Result<CostReport, EvalError> {
    let per_column = clm
        .columns
        .iter()
        .map(|cs| {
            let (q, r) = local_weights(cs, weights);
            let m = &q + cs.fu.transpose() * r * &cs.fu;
            let g = dlyap_solve(&cs.acl, &((&m + m.transpose()) * 0.5)).map_err(|e| EvalError::UnstableColumn {
                column: cs.j,
                source: e,
            })?;
            Ok(g[(cs.pos_in_n, cs.pos_in_n)])
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(CostReport::from_columns(per_column, CostMethod::Lyapunov))
}

/// Partial sum of the cost series over `k = 0..terms`.
pub fn h2_cost_truncated(clm: &LocalizedClm, weights: &CostWeights, terms: usize) -> CostReport {
    let per_column = clm
        .columns
        .iter()
        .map(|cs| {
            let (q, r) = local_weights(cs, weights);
            cs.spectral_iter()
                .take(terms)
                .map(|(n, u)| (n.transpose() * &q * &n)[0] + (u.transpose() * &r * &u)[0])
                .sum()
        })
        .collect();
    CostReport::from_columns(per_column, CostMethod::Truncated { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::{synthesize_all, SynthesisOptions};
    use crate::netmodel::testutil::chain_adjacency;
    use crate::netmodel::{
        chain_benchmark, extended_pattern, ChainParams, Pattern, PatternRole, Plant, SubsystemPartition,
    };
    use nalgebra::DMatrix;

    fn five_chain() -> (LocalizedClm, CostWeights) {
        let (plant, w) = chain_benchmark(&ChainParams {
            n: 5,
            ..Default::default()
        })
        .unwrap();
        let adj = chain_adjacency(5);
        let loc = adj.clone().with_role(PatternRole::Localization);
        let comm = extended_pattern(&adj, &loc).with_role(PatternRole::Communication);
        (
            synthesize_all(&plant, &loc, &comm, &w, &SynthesisOptions::default()).unwrap(),
            w,
        )
    }

    #[test]
    fn scalar_cost_is_riccati_solution() {
        let plant = Plant::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            SubsystemPartition::scalar(1),
        )
        .unwrap();
        let w = CostWeights::identity(1, 1);
        let one = Pattern::ones(1, PatternRole::Localization);
        let clm = synthesize_all(&plant, &one, &one, &w, &SynthesisOptions::default()).unwrap();
        let rep = h2_cost_lyapunov(&clm, &w).unwrap();
        let x = (0.25 + 4.0625f64.sqrt()) / 2.0;
        assert!((rep.total - x).abs() < 1e-12);
        assert!((rep.total - 1.1327822).abs() < 1e-7);
    }

    #[test]
    fn zero_weights_zero_cost() {
        let (clm, _) = five_chain();
        let zero = CostWeights::new_semidefinite(DMatrix::zeros(5, 5), DMatrix::zeros(5, 5)).unwrap();
        assert_eq!(h2_cost_lyapunov(&clm, &zero).unwrap().total, 0.0);
    }

    #[test]
    fn lyapunov_matches_truncation_and_riccati() {
        let (clm, w) = five_chain();
        let ly = h2_cost_lyapunov(&clm, &w).unwrap();
        let tr = h2_cost_truncated(&clm, &w, 500);
        assert!((ly.total - tr.total).abs() <= 1e-6 * ly.total);
        assert!((ly.total - clm.riccati_cost()).abs() <= 1e-9 * ly.total);
        assert!((ly.total - ly.per_column.iter().sum::<f64>()).abs() <= 1e-12);
        assert!(ly.per_column.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn truncated_first_term_and_monotone() {
        let (clm, w) = five_chain();
        let one = h2_cost_truncated(&clm, &w, 1);
        let phis = clm.spectral_matrices(1);
        let pu = &phis[0].1;
        let expected = w.q().trace() + (pu.transpose() * w.r() * pu).trace();
        assert!((one.total - expected).abs() < 1e-12);
        let mut last = 0.0;
        for k in 1..30 {
            let c = h2_cost_truncated(&clm, &w, k).total;
            assert!(c >= last);
            last = c;
        }
    }
}
