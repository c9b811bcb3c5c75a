//! Bias-corrected Adam over [`ModelParams`]-shaped tensors.

use crate::error::{Error, Result};
use crate::nn::model::ModelParams;

/// Optimizer state: step count plus first/second moment accumulators shaped
/// exactly like the parameters they update.
#[derive(Clone, Debug)]
pub struct AdamState {
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: ModelParams,
    v: ModelParams,
}

impl AdamState {
    /// Fresh state with zero moments and the standard β1 = 0.9, β2 = 0.999,
    /// ε = 1e-8.
    #[must_use]
    pub fn new(lr: f64, params: &ModelParams) -> AdamState {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// Number of updates applied so far.
    #[must_use]
    pub fn step_count(&self) -> u64 {
        self.step
    }

    #[must_use]
    pub fn learning_rate(&self) -> f64 {
        self.lr
    }
}

/// One in-place Adam update:
/// `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`,
/// `p ← p − lr · (m / (1−β1^t)) / (√(v / (1−β2^t)) + ε)`.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
) -> Result<()> {
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (lr, b1, b2, eps) = (state.lr, state.beta1, state.beta2, state.eps);

    let p_tensors = params.tensors_mut();
    let g_tensors = grads.tensors();
    let m_tensors = state.m.tensors_mut();
    let v_tensors = state.v.tensors_mut();
    if p_tensors.len() != g_tensors.len()
        || p_tensors.len() != m_tensors.len()
        || p_tensors.len() != v_tensors.len()
    {
        return Err(Error::Shape(format!(
            "optimizer saw {} parameter tensors but {} gradient tensors",
            p_tensors.len(),
            g_tensors.len()
        )));
    }

    for (((p, g), m), v) in p_tensors
        .into_iter()
        .zip(g_tensors)
        .zip(m_tensors)
        .zip(v_tensors)
    {
        if p.rows() != g.rows() || p.cols() != g.cols() {
            return Err(Error::Shape(format!(
                "gradient tensor is {}x{} but the parameter is {}x{}",
                g.rows(),
                g.cols(),
                p.rows(),
                p.cols()
            )));
        }
        for ((pv, &gv), (mv, vv)) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Mat;
    use approx::assert_abs_diff_eq;

    fn scalar_params(value: f64) -> ModelParams {
        ModelParams {
            embed: None,
            layers: vec![Mat::from_vec(1, 1, vec![value]).unwrap()],
            mlp_link: None,
            mlp_node: None,
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = scalar_params(1.25);
        let grads = params.zeros_like();
        let mut state = AdamState::new(0.1, &params);
        adam_step(&mut params, &grads, &mut state).unwrap();
        assert_abs_diff_eq!(params.layers[0][(0, 0)], 1.25);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_about_lr_against_the_gradient() {
        // Bias correction makes m̂ = g and v̂ = g² on step one, so the update
        // is lr·g/(|g| + ε) ≈ lr·sign(g).
        for &g in &[3.0, -0.004] {
            let mut params = scalar_params(0.0);
            let grads = scalar_params(g);
            let mut state = AdamState::new(0.05, &params);
            adam_step(&mut params, &grads, &mut state).unwrap();
            let update = params.layers[0][(0, 0)];
            assert_abs_diff_eq!(update, -0.05 * g.signum(), epsilon = 1e-5);
        }
    }

    #[test]
    fn two_constant_steps_follow_the_hand_recurrence() {
        let g = 0.7;
        let (lr, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);
        let mut params = scalar_params(2.0);
        let grads = scalar_params(g);
        let mut state = AdamState::new(lr, &params);
        adam_step(&mut params, &grads, &mut state).unwrap();
        adam_step(&mut params, &grads, &mut state).unwrap();

        // Hand recurrence for a single scalar.
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        let mut p = 2.0f64;
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        assert_abs_diff_eq!(params.layers[0][(0, 0)], p, epsilon = 1e-15);
        assert_eq!(state.step_count(), 2);
    }

    #[test]
    fn tensor_count_and_shape_mismatches_are_rejected() {
        let mut params = scalar_params(0.0);
        let mut state = AdamState::new(0.1, &params);
        let missing = ModelParams {
            embed: None,
            layers: vec![],
            mlp_link: None,
            mlp_node: None,
        };
        assert!(adam_step(&mut params, &missing, &mut state).is_err());
        let wrong_shape = ModelParams {
            embed: None,
            layers: vec![Mat::zeros(2, 1)],
            mlp_link: None,
            mlp_node: None,
        };
        assert!(adam_step(&mut params, &wrong_shape, &mut state).is_err());
    }
}
