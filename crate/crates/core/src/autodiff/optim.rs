//! Adam with coupled L2 weight decay, and learning-rate schedules.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::params::ParamStore;
use super::AutodiffError;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub t: u64,
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl Adam {
    pub fn new(params: &ParamStore, weight_decay: f64) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect()
        };
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// One update at learning rate `lr`; gradients are zeroed afterwards.
    /// A non-finite gradient aborts before any parameter changes.
    pub fn step(&mut self, params: &mut ParamStore, lr: f64) -> Result<(), AutodiffError> {
        if let Some(p) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(AutodiffError::NonFiniteGradient {
                name: p.name.clone(),
            });
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let wd = if p.decay { self.weight_decay } else { 0.0 };
            let val = p.value.as_mut_slice();
            let grad = p.grad.as_mut_slice();
            for (((x, g), m), v) in val
                .iter_mut()
                .zip(grad.iter_mut())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                let g_eff = *g + wd * *x;
                *m = self.beta1 * *m + (1.0 - self.beta1) * g_eff;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g_eff * g_eff;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *x -= lr * mhat / (vhat.sqrt() + self.eps);
                *g = 0.0;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LrSchedule {
    #[default]
    Constant,
    Multistep {
        milestones: Vec<u32>,
        gamma: f64,
    },
    Cosine {
        t_max: u32,
        lr_min: f64,
    },
}

impl LrSchedule {
    pub fn lr_at(&self, base: f64, epoch: u32) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Multistep { milestones, gamma } => {
                let k = milestones.iter().filter(|&&m| m <= epoch).count();
                base * gamma.powi(k as i32)
            }
            LrSchedule::Cosine { t_max, lr_min } => {
                let e = epoch.min(*t_max) as f64;
                let t = (*t_max).max(1) as f64;
                lr_min + (base - lr_min) * (1.0 + (std::f64::consts::PI * e / t).cos()) / 2.0
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            LrSchedule::Constant => Ok(()),
            LrSchedule::Multistep { gamma, .. } if !(*gamma > 0.0) => {
                Err(format!("multistep gamma must be > 0, got {gamma}"))
            }
            LrSchedule::Multistep { .. } => Ok(()),
            LrSchedule::Cosine { t_max, lr_min } => {
                if *t_max == 0 {
                    Err("cosine t_max must be >= 1".into())
                } else if !(*lr_min > 0.0) {
                    Err(format!("cosine lr_min must be > 0, got {lr_min}"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(x: f64, g: f64) -> ParamStore {
        let mut s = ParamStore::new();
        let id = s.add("x", Matrix::scalar(x));
        s.iter_mut().next().unwrap().grad = Matrix::scalar(g);
        let _ = id;
        s
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = scalar_store(1.0, 1.0);
        let mut opt = Adam::new(&s, 0.0);
        opt.step(&mut s, 0.1).unwrap();
        let x = s.iter().next().unwrap().value.item();
        assert!((x - 0.9).abs() < 1e-6, "{x}");
        assert_eq!(s.iter().next().unwrap().grad.item(), 0.0);
    }

    #[test]
    fn zero_grad_no_decay_is_noop() {
        let mut s = scalar_store(0.37, 0.0);
        let mut opt = Adam::new(&s, 0.0);
        opt.step(&mut s, 0.1).unwrap();
        assert_eq!(s.iter().next().unwrap().value.item(), 0.37);
    }

    #[test]
    fn zero_lr_leaves_params_bitwise() {
        let mut s = scalar_store(-1.2345, 3.0);
        let mut opt = Adam::new(&s, 1e-3);
        opt.step(&mut s, 0.0).unwrap();
        assert_eq!(
            s.iter().next().unwrap().value.item().to_bits(),
            (-1.2345f64).to_bits()
        );
    }

    #[test]
    fn weight_decay_pulls_toward_zero() {
        let mut s = scalar_store(2.0, 0.0);
        let mut opt = Adam::new(&s, 1e-3);
        opt.step(&mut s, 0.01).unwrap();
        assert!(s.iter().next().unwrap().value.item() < 2.0);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut s = scalar_store(1.0, f64::NAN);
        let mut opt = Adam::new(&s, 0.0);
        match opt.step(&mut s, 0.1) {
            Err(AutodiffError::NonFiniteGradient { name }) => assert_eq!(name, "x"),
            other => panic!("{other:?}"),
        }
        assert_eq!(opt.t, 0);
    }

    #[test]
    fn schedules() {
        let ms = LrSchedule::Multistep {
            milestones: vec![60, 100, 140],
            gamma: 0.1,
        };
        assert!((ms.lr_at(0.005, 70) - 0.0005).abs() < 1e-15);
        assert_eq!(ms.lr_at(0.005, 59), 0.005);
        let cos = LrSchedule::Cosine {
            t_max: 50,
            lr_min: 1e-4,
        };
        assert_eq!(cos.lr_at(0.01, 0), 0.01);
        assert!((cos.lr_at(0.01, 50) - 1e-4).abs() < 1e-15);
        assert!(cos.lr_at(0.01, 500) > 0.0);
        assert_eq!(LrSchedule::Constant.lr_at(0.3, 1000), 0.3);
    }

    #[test]
    fn schedule_json_shape() {
        let s: LrSchedule =
            serde_json::from_str(r#"{"kind":"multistep","milestones":[60],"gamma":0.5}"#).unwrap();
        assert_eq!(s.lr_at(1.0, 60), 0.5);
    }
}
