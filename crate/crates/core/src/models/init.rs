use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Matrix, ParamId, ParamStore};
use crate::rng::Rng;

/// Registers parameters in order, drawing from one seeded stream.
pub(crate) struct Init<'a> {
    pub store: &'a mut ParamStore,
    pub rng: Rng,
}

impl<'a> Init<'a> {
    pub fn new(store: &'a mut ParamStore, seed: u64) -> Self {
        Init {
            store,
            rng: crate::rng::rng_from(&[seed, 0x1417]),
        }
    }

    /// Glorot-uniform `fan_in x fan_out` matrix.
    pub fn glorot(&mut self, name: &str, fan_in: usize, fan_out: usize) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| self.rng.random_range(-bound..=bound))
            .collect();
        self.store
            .add(name, Matrix::from_vec(fan_in, fan_out, data))
    }

    pub fn zeros(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.store.add(name, Matrix::zeros(rows, cols))
    }

    /// Rows drawn from N(0, 0.1^2).
    pub fn embedding(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        let m = normal_rows(&mut self.rng, rows, cols);
        self.store.add(name, m)
    }
}

pub(crate) fn normal_rows(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let normal = Normal::new(0.0, 0.1).expect("valid std");
    let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data)
}
