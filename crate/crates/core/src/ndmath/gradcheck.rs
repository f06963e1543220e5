use super::{Grads, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `f` for every entry of
/// every parameter. Relative error per entry is `|a−n| / max(1e-8, |a|+|n|)`.
///
/// `f` must be deterministic. Parameters are restored before returning.
pub fn grad_check<F>(mut f: F, params: &mut ParamStore, analytic: &Grads, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Config(format!("grad_check eps must be > 0, got {eps}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Dimension {
            expected: params.len(),
            found: analytic.len(),
            context: "gradient buffers".into(),
        });
    }
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let n = params.value(id).len();
        for i in 0..n {
            let original = params.value(id).data()[i];
            params.value_mut(id).data_mut()[i] = original + eps;
            let plus = f(params);
            params.value_mut(id).data_mut()[i] = original - eps;
            let minus = f(params);
            params.value_mut(id).data_mut()[i] = original;
            let (plus, minus) = (plus?, minus?);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "objective while perturbing {}[{i}]",
                    params.name(id)
                )));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.get(id).data()[i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((params.name(id).to_string(), i));
            }
        }
    }
    Ok(report)
}
