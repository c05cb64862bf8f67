//! JSON helpers shared by the file formats.
//!
//! Dense matrices are written as `{"rows": r, "cols": c, "data": [[..], ..]}`
//! with `data` in row-major order. Zero-sized matrices keep their shape in
//! `rows`/`cols` and carry an empty (or row-of-empty) `data` array.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>, String> {
        if self.data.len() != self.rows {
            return Err(format!(
                "matrix declares {} rows but carries {}",
                self.rows,
                self.data.len()
            ));
        }
        for (i, row) in self.data.iter().enumerate() {
            if row.len() != self.cols {
                return Err(format!("row {} has {} entries, expected {}", i, row.len(), self.cols));
            }
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| self.data[i][j]))
    }
}

pub fn vector_to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Formats a float with 17 significant digits so that it round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{:.16e}", x)
    }
}
