use nalgebra::{DMatrix, SymmetricEigen};

use super::FeatureError;
use crate::autodiff::Matrix;

/// Principal-component projection fit by eigendecomposition of the
/// `d x d` covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `d x target`, columns are unit components by descending eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(data: &Matrix, target: usize) -> Result<Self, FeatureError> {
        let (n, d) = data.shape();
        if target > d {
            return Err(FeatureError::DimensionMismatch {
                expected: d,
                found: target,
            });
        }
        if n < 2 {
            return Err(FeatureError::DegenerateInput(format!("{n} rows")));
        }
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, x) in mean.iter_mut().zip(data.row(r)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut centered = data.clone();
        for r in 0..n {
            for (x, m) in centered.row_mut(r).iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        if centered.as_slice().iter().all(|&x| x == 0.0) {
            return Err(FeatureError::DegenerateInput("all rows identical".into()));
        }
        let cov = centered.transpose().matmul(&centered);
        let cov = DMatrix::from_row_slice(d, d, cov.as_slice()).map(|x| x / n as f64);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut components = Matrix::zeros(d, target);
        let mut eigenvalues = Vec::with_capacity(target);
        for (j, &k) in order.iter().take(target).enumerate() {
            let col = eig.eigenvectors.column(k);
            let pivot =
                col.iter().copied().fold(
                    0.0f64,
                    |best, x| if x.abs() > best.abs() { x } else { best },
                );
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for i in 0..d {
                components.set(i, j, sign * col[i]);
            }
            eigenvalues.push(eig.eigenvalues[k].max(0.0));
        }
        Ok(Pca {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn transform(&self, data: &Matrix) -> Matrix {
        let mut centered = data.clone();
        for r in 0..centered.rows() {
            for (x, m) in centered.row_mut(r).iter_mut().zip(&self.mean) {
                *x -= m;
            }
        }
        centered.matmul(&self.components)
    }

    pub fn inverse(&self, projected: &Matrix) -> Matrix {
        let mut out = projected.matmul(&self.components.transpose());
        for r in 0..out.rows() {
            for (x, m) in out.row_mut(r).iter_mut().zip(&self.mean) {
                *x += m;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(m: &Matrix, c: usize) -> f64 {
        let n = m.rows() as f64;
        let mean = (0..m.rows()).map(|r| m.get(r, c)).sum::<f64>() / n;
        (0..m.rows())
            .map(|r| (m.get(r, c) - mean).powi(2))
            .sum::<f64>()
            / n
    }

    #[test]
    fn line_y_equals_x() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [-3.0, -3.0], [0.5, 0.5]]);
        let p = Pca::fit(&m, 1).unwrap();
        let proj = p.transform(&m);
        let total = variance(&m, 0) + variance(&m, 1);
        assert!((variance(&proj, 0) - total).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.components.get(0, 0) - h).abs() < 1e-12);
        assert!((p.components.get(1, 0) - h).abs() < 1e-12);
    }

    #[test]
    fn exact_subspace_reconstructs() {
        let basis = Matrix::from_rows(&[[1.0, 0.0, 2.0, -1.0], [0.0, 1.0, 1.0, 3.0]]);
        let coef =
            Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5], [3.0, -2.0], [0.0, 1.0], [2.0, 2.0]]);
        let data = coef.matmul(&basis);
        let p = Pca::fit(&data, 2).unwrap();
        let back = p.inverse(&p.transform(&data));
        assert!(back.max_abs_diff(&data) < 1e-9);
        let gram = p.components.transpose().matmul(&p.components);
        assert!(gram.max_abs_diff(&Matrix::identity(2)) < 1e-9);
        assert!(p.eigenvalues[0] >= p.eigenvalues[1]);
    }

    #[test]
    fn identical_rows_rejected() {
        let m = Matrix::filled(3, 2, 1.0);
        assert!(matches!(
            Pca::fit(&m, 1),
            Err(FeatureError::DegenerateInput(_))
        ));
        assert!(Pca::fit(&Matrix::zeros(3, 2), 3).is_err());
    }
}
