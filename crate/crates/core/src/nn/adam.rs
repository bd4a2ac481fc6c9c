use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam step in place.
pub fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState) {
    assert_eq!(params.len(), grads.len(), "adam: params/grads length mismatch");
    assert_eq!(params.len(), state.m.len(), "adam: state does not match params");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[k] / bc1;
        let v_hat = state.v[k] / bc2;
        params[k] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

/// Rescales `grads` so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![0.5, -1.0];
        let mut st = AdamState::new(2, 0.01);
        adam_update(&mut p, &[0.0, 0.0], &mut st);
        assert_eq!(p, vec![0.5, -1.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = v̂ = 1 at t = 1, so Δ = -lr / (1 + ε)
        let mut p = vec![0.0];
        let mut st = AdamState::new(1, 0.001);
        adam_update(&mut p, &[1.0], &mut st);
        assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((p[0] + 0.001).abs() < 1e-10);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = vec![0.1, 0.2, 0.3];
            let mut st = AdamState::new(3, 0.01);
            for k in 0..5 {
                adam_update(&mut p, &[0.3 * k as f64, -1.0, 0.01], &mut st);
            }
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![3.0, 4.0];
        let before = clip_global_norm(&mut g, 1.0);
        assert_eq!(before, 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1];
        clip_global_norm(&mut small, 5.0);
        assert_eq!(small, vec![0.1]);
    }
}
