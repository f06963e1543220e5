use crate::error::{Error, Result};
use crate::ndmath::{Grads, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers mirroring the parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Grads,
    pub v: Grads,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        Self {
            m: params.zero_grads(),
            v: params.zero_grads(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of every trainable parameter.
pub fn adam_step(params: &mut ParamStore, grads: &Grads, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::Dimension {
            expected: params.len(),
            found: grads.len(),
            context: "adam gradient buffers".into(),
        });
    }
    let ids: Vec<_> = params.ids().collect();
    for &id in &ids {
        if params.is_trainable(id) && !grads.get(id).is_finite() {
            return Err(Error::Numeric(format!("gradient of '{}'", params.name(id))));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for id in ids {
        if !params.is_trainable(id) {
            continue;
        }
        let g = grads.get(id).data();
        let m = state.m.get_mut(id).data_mut();
        let v = state.v.get_mut(id).data_mut();
        let p = params.value_mut(id).data_mut();
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
