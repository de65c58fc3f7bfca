use super::params::ParamStore;
use crate::error::{Error, Result};

/// Maximum relative error per trainable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_param: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.per_param.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    /// Parameters whose error exceeds `tol`.
    pub fn flagged(&self, tol: f64) -> Vec<&str> {
        self.per_param
            .iter()
            .filter(|(_, e)| *e > tol)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// Compares the analytic gradients stored in `params` (the `grad` field) to
/// central differences of `loss` for every trainable scalar.
///
/// Relative error is `|a − n| / max(1, |a| + |n|)`. `loss` must be
/// deterministic (dropout off).
pub fn grad_check<F>(params: &ParamStore, mut loss: F, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut probe = params.clone();
    let mut per_param = Vec::new();
    for (id, name, p) in params.iter() {
        if !p.trainable {
            continue;
        }
        let mut worst: f64 = 0.0;
        for k in 0..p.value.len() {
            let orig = p.value.data()[k];
            probe.value_mut(id).data_mut()[k] = orig + eps;
            let up = loss(&probe);
            probe.value_mut(id).data_mut()[k] = orig - eps;
            let down = loss(&probe);
            probe.value_mut(id).data_mut()[k] = orig;
            let analytic = p.grad.data()[k];
            let numeric = (up - down) / (2.0 * eps);
            if !(up.is_finite() && down.is_finite() && analytic.is_finite()) {
                return Err(Error::NonFinite(format!("grad check of {name}[{k}]")));
            }
            let err = (analytic - numeric).abs() / f64::max(1.0, analytic.abs() + numeric.abs());
            worst = worst.max(err);
        }
        per_param.push((name.to_string(), worst));
    }
    Ok(GradCheckReport { per_param })
}
