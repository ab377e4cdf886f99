use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float as _;

use super::NetworkWeights;
use crate::error::{shape_err, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const DEFAULT_STEP_SIZE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub step_size: f64,
}

impl OptimizerState {
    pub fn new(n_params: usize, step_size: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            step_size,
        }
    }
}

/// Bias-corrected Adam: `w ← w − δ·m̂/(√v̂ + ε)`.
pub fn adam_step(weights: &mut NetworkWeights, grads: &[f64], state: &mut OptimizerState) -> Result<()> {
    let n = weights.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(shape_err("gradient or optimizer state does not match the weights"));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let lr = state.step_size;
    let params = weights.params_mut();
    for i in 0..n {
        let g = grads[i];
        let m = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        let v = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        params[i] -= lr * (m / c1) / ((v / c2).sqrt() + ADAM_EPS);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetworkConfig;

    fn cfg() -> NetworkConfig {
        NetworkConfig::desk(2, 8, 8, 5)
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut w = NetworkWeights::init(&cfg()).unwrap();
        let before = w.params().to_vec();
        let mut st = OptimizerState::new(w.len(), 0.01);
        adam_step(&mut w, &vec![0.0; before.len()], &mut st).unwrap();
        assert_eq!(w.params(), &before[..]);
    }

    #[test]
    fn first_step_closed_form() {
        let mut w = NetworkWeights::init(&cfg()).unwrap();
        let before = w.params().to_vec();
        let g: Vec<f64> = (0..before.len()).map(|i| (i as f64 - 300.0) * 1e-3).collect();
        let mut st = OptimizerState::new(w.len(), 0.01);
        adam_step(&mut w, &g, &mut st).unwrap();
        for i in 0..g.len() {
            let want = 0.01 * g[i].abs() / (g[i].abs() + ADAM_EPS);
            assert!(((before[i] - w.params()[i]).abs() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let mut w = NetworkWeights::init(&cfg()).unwrap();
        let mut st = OptimizerState::new(3, 0.01);
        assert!(adam_step(&mut w, &[0.0; 3], &mut st).is_err());
    }
}
