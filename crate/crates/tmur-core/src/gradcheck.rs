//! Central-difference gradient verification.
//!
//! Used by the test suites to validate every analytic gradient in the crate
//! against `(f(x+h) - f(x-h)) / 2h`, parameter entry by parameter entry.

use crate::autodiff::{ParamId, ParamStore};
use crate::error::{Result, TmurError};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest relative discrepancy seen over all checked entries.
    pub max_rel_err: f64,
    /// Number of scalar entries compared.
    pub checked: usize,
    /// Description of the worst entry (`name[i]: analytic vs numeric`).
    pub worst: String,
}

/// Compare analytic gradients against central differences for every entry of
/// every parameter in `ids`.
///
/// `eval` runs a forward pass only; `eval_grad` runs forward plus backward,
/// accumulating gradients into the store. An entry passes when
/// `|analytic - numeric| <= abs_floor + rel_tol * max(|analytic|, |numeric|)`.
pub fn check_params(
    store: &mut ParamStore,
    ids: &[ParamId],
    h: f64,
    rel_tol: f64,
    abs_floor: f64,
    eval: impl Fn(&ParamStore) -> Result<f64>,
    eval_grad: impl Fn(&mut ParamStore) -> Result<f64>,
) -> Result<GradCheckReport> {
    store.zero_grads();
    eval_grad(store)?;
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| store.get(id).grad.data().to_vec())
        .collect();

    let mut max_rel_err: f64 = 0.0;
    let mut checked = 0;
    let mut worst = String::new();
    // Relative error is measured against this floor so that near-zero
    // gradients are compared absolutely at `abs_floor`.
    let denom_floor = abs_floor / rel_tol;

    for (slot, &id) in ids.iter().enumerate() {
        for k in 0..analytic[slot].len() {
            let orig = store.get(id).value.data()[k];
            store.get_mut(id).value.data_mut()[k] = orig + h;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[k] = orig - h;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[k] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[slot][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(denom_floor);
            checked += 1;
            if rel > max_rel_err {
                max_rel_err = rel;
                worst = format!(
                    "{}[{k}]: analytic {a:.9e} vs numeric {numeric:.9e}",
                    store.get(id).name
                );
            }
        }
    }

    if max_rel_err > rel_tol {
        return Err(TmurError::check(format!(
            "gradient mismatch beyond rel_tol={rel_tol}: {worst} (rel err {max_rel_err:.3e}, {checked} entries checked)"
        )));
    }
    Ok(GradCheckReport {
        max_rel_err,
        checked,
        worst,
    })
}
