use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams};

pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            v: params.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of a single tensor at step `t` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn adam_update(param: &mut [f32], grad: &[f64], m: &mut [f64], v: &mut [f64], t: u64, lr: f64, cfg: &TrainConfig) {
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    for i in 0..param.len() {
        let p = param[i] as f64;
        let g = grad[i] + cfg.weight_decay * p;
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] = (p - lr * m_hat / (v_hat.sqrt() + ADAM_EPS)) as f32;
    }
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.values.len() != params.tensors.len() || state.m.len() != params.tensors.len() {
        return Err(Error::Shape("optimizer state does not mirror parameters".into()));
    }
    for (i, t) in params.tensors.iter().enumerate() {
        if grads.values[i].len() != t.len() || state.m[i].len() != t.len() {
            return Err(Error::Shape(format!("gradient for `{}` has the wrong size", t.name)));
        }
    }
    state.t += 1;
    for (i, tensor) in params.tensors.iter_mut().enumerate() {
        adam_update(
            &mut tensor.data,
            &grads.values[i],
            &mut state.m[i],
            &mut state.v[i],
            state.t,
            lr,
            cfg,
        );
    }
    Ok(())
}
