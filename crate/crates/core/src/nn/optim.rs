use serde::{Deserialize, Serialize};

use super::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// One AdamW update over every trainable parameter, reading `Param::grad`.
///
/// Weight decay is decoupled: `value -= lr·wd·value` happens before the
/// bias-corrected Adam step.
pub fn adamw_step(params: &mut ParamStore, lr: f64, cfg: &AdamWConfig) {
    let t = params.advance_step() as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (_, p) in params.iter_mut() {
        if !p.trainable {
            continue;
        }
        let decay = lr * cfg.weight_decay;
        let value = p.value.data_mut();
        let (m, v) = (p.m.data_mut(), p.v.data_mut());
        for (k, &g) in p.grad.data().iter().enumerate() {
            value[k] -= decay * value[k];
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            value[k] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// What the learning rate does after warmup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    #[default]
    Linear,
    Constant,
}

/// Linear warmup from 0 to `peak` over the first `⌈warmup·total⌉` steps, then
/// linear decay to 0 at `total` (or flat, for [`DecayShape::Constant`]).
pub fn lr_schedule(step: usize, total: usize, peak: f64, warmup: f64, shape: DecayShape) -> f64 {
    let step = step.min(total);
    let warmup_steps = (warmup * total as f64).ceil() as usize;
    if step < warmup_steps {
        return peak * step as f64 / warmup_steps as f64;
    }
    match shape {
        DecayShape::Constant => peak,
        DecayShape::Linear => {
            let span = total - warmup_steps;
            if span == 0 {
                peak
            } else {
                peak * (total - step) as f64 / span as f64
            }
        }
    }
}
