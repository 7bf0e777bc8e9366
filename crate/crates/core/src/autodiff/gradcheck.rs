//! Central finite-difference gradient oracle.

use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::AutodiffError;

/// Worst error between analytic and numeric gradients, measured as
/// `|a - n| / max(1, |a|, |n|)`.
///
/// `f` builds a scalar on a fresh eval-mode tape from leaves holding
/// `inputs`. Step size is `h * max(1, |x|)` per coordinate.
pub fn max_gradient_error<F>(inputs: &[Matrix], h: f64, f: F) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let eval = |xs: &[Matrix]| -> Result<f64, AutodiffError> {
        let mut t = Tape::eval();
        let vars: Vec<Var> = xs.iter().map(|m| t.leaf(m.clone())).collect();
        let out = f(&mut t, &vars)?;
        Ok(t.value(out).item())
    };

    let mut tape = Tape::eval();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.leaf(m.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut worst = 0.0f64;
    let mut xs = inputs.to_vec();
    for (k, v) in vars.iter().enumerate() {
        let zero = Matrix::zeros(inputs[k].rows(), inputs[k].cols());
        let analytic = grads.get(*v).unwrap_or(&zero).clone();
        for i in 0..inputs[k].len() {
            let x0 = inputs[k].as_slice()[i];
            let step = h * x0.abs().max(1.0);
            xs[k].as_mut_slice()[i] = x0 + step;
            let fp = eval(&xs)?;
            xs[k].as_mut_slice()[i] = x0 - step;
            let fm = eval(&xs)?;
            xs[k].as_mut_slice()[i] = x0;
            let numeric = (fp - fm) / (2.0 * step);
            let a = analytic.as_slice()[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Same measure as [`max_gradient_error`], taken over every scalar of the
/// parameters in `store`. `f` receives the (possibly perturbed) store.
pub fn max_param_gradient_error<S, F>(
    state: &mut S,
    h: f64,
    store_of: fn(&mut S) -> &mut ParamStore,
    f: F,
) -> Result<f64, AutodiffError>
where
    F: Fn(&S, &mut Tape) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::eval();
    let out = f(state, &mut tape)?;
    let grads = tape.backward(out)?;
    let store = store_of(state);
    store.zero_grad();
    store.accumulate(&tape, &grads);
    let ids: Vec<ParamId> = store.ids().collect();
    let analytic: Vec<Matrix> = ids.iter().map(|&id| store.grad(id).clone()).collect();
    store.zero_grad();

    let eval = |s: &S| -> Result<f64, AutodiffError> {
        let mut t = Tape::eval();
        let out = f(s, &mut t)?;
        Ok(t.value(out).item())
    };
    let mut worst = 0.0f64;
    for (k, &id) in ids.iter().enumerate() {
        for i in 0..analytic[k].len() {
            let x0 = store_of(state).value(id).as_slice()[i];
            let step = h * x0.abs().max(1.0);
            store_of(state).value_mut(id).as_mut_slice()[i] = x0 + step;
            let fp = eval(state)?;
            store_of(state).value_mut(id).as_mut_slice()[i] = x0 - step;
            let fm = eval(state)?;
            store_of(state).value_mut(id).as_mut_slice()[i] = x0;
            let numeric = (fp - fm) / (2.0 * step);
            let a = analytic[k].as_slice()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0));
        }
    }
    Ok(worst)
}
