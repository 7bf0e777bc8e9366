use super::{FeatureError, TrainSet};
use crate::autodiff::Matrix;
use crate::graph::NodeId;

/// Per-column z-score with population statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on `rows` of `values`; every row must belong to `train`.
    pub fn fit(values: &Matrix, rows: &[NodeId], train: &TrainSet) -> Result<Self, FeatureError> {
        train.check(rows)?;
        let d = values.cols();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (m, x) in mean.iter_mut().zip(values.row(r as usize)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &r in rows {
            for ((v, x), m) in var.iter_mut().zip(values.row(r as usize)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    /// Columns with zero spread map to 0.
    pub fn apply(&self, values: &Matrix) -> Matrix {
        let mut out = values.clone();
        for r in 0..out.rows() {
            for (c, x) in out.row_mut(r).iter_mut().enumerate() {
                *x = if self.std[c] > 0.0 {
                    (*x - self.mean[c]) / self.std[c]
                } else {
                    0.0
                };
            }
        }
        out
    }
}
