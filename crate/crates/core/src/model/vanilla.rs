//! Baseline: one 32-unit LSTM over the window, then a linear head mapping the
//! final hidden state to all `H` outputs at once. No regularization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::dense::{DenseGrads, DenseParams};
use crate::nn::lstm::{step_backward, step_cached, LstmGrads, LstmParams};
use crate::nn::{Activation, Matrix, Network, NnError};

pub const VANILLA_HIDDEN_UNITS: usize = 32;
pub const VANILLA_LEARNING_RATE: f64 = 0.001;
pub const VANILLA_BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanillaLstm {
    pub lstm: LstmParams,
    pub head: DenseParams,
    pub window_len: usize,
}

pub fn build_vanilla_lstm(window_len: usize, n_features: usize, horizon: usize, seed: u64) -> VanillaLstm {
    VanillaLstm::new(window_len, n_features, horizon, VANILLA_HIDDEN_UNITS, seed)
}

impl VanillaLstm {
    pub fn new(window_len: usize, n_features: usize, horizon: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lstm = LstmParams::init(n_features, hidden, &mut rng);
        let head = DenseParams::init(hidden, horizon, Activation::Identity, &mut rng);
        Self { lstm, head, window_len }
    }

    pub fn zeroed(window_len: usize, n_features: usize, horizon: usize, hidden: usize) -> Self {
        Self {
            lstm: LstmParams::zeros(n_features, hidden),
            head: DenseParams::zeros(hidden, horizon, Activation::Identity),
            window_len,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size
    }

    fn check(&self, input: &Matrix) -> Result<(), NnError> {
        if input.shape() != (self.window_len, self.lstm.input_size) {
            return Err(NnError::Dimension(format!(
                "vanilla LSTM expects a {}x{} window, got {}x{}",
                self.window_len,
                self.lstm.input_size,
                input.rows(),
                input.cols()
            )));
        }
        Ok(())
    }
}

impl Network for VanillaLstm {
    fn param_blocks(&self) -> Vec<(String, usize)> {
        let mut blocks = self.lstm.block_names("lstm");
        blocks.extend(self.head.block_names("dense"));
        blocks
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.lstm.write_flat(&mut out);
        self.head.write_flat(&mut out);
        out
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let at = self.lstm.read_flat(flat);
        self.head.read_flat(&flat[at..]);
    }

    fn output_len(&self) -> usize {
        self.head.output_size()
    }

    fn forward(&self, input: &Matrix) -> Result<Vec<f64>, NnError> {
        self.check(input)?;
        let out = crate::nn::lstm_forward(&self.lstm, input)?;
        let y = self.head.linear(&out.h_last);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("vanilla LSTM output".into()));
        }
        Ok(y)
    }

    fn accumulate_gradient(
        &self,
        input: &Matrix,
        target: &[f64],
        _dropout: Option<&mut ChaCha8Rng>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64, NnError> {
        self.check(input)?;
        if target.len() != self.output_len() {
            return Err(NnError::Dimension(format!(
                "target has {} entries, horizon is {}",
                target.len(),
                self.output_len()
            )));
        }
        let d = self.hidden_size();
        let mut h = vec![0.0; d];
        let mut c = vec![0.0; d];
        let mut caches = Vec::with_capacity(self.window_len);
        for t in 0..self.window_len {
            let cache = step_cached(&self.lstm, input.row(t), &h, &c);
            h.copy_from_slice(&cache.h);
            c.copy_from_slice(&cache.c);
            caches.push(cache);
        }
        let y = self.head.linear(&h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("vanilla LSTM output".into()));
        }
        let mut sse = 0.0;
        let dy: Vec<f64> = y
            .iter()
            .zip(target)
            .map(|(a, b)| {
                sse += (a - b) * (a - b);
                2.0 * (a - b) * scale
            })
            .collect();

        let mut g_lstm = LstmGrads::zeros_like(&self.lstm);
        let mut g_head = DenseGrads::zeros_like(&self.head);
        let mut dh = vec![0.0; d];
        self.head.backward(&h, &y, &y, &dy, &mut g_head, &mut dh);
        let mut dc = vec![0.0; d];
        for cache in caches.iter().rev() {
            let (_, dh_prev, dc_prev) = step_backward(&self.lstm, cache, &dh, &dc, &mut g_lstm);
            dh = dh_prev;
            dc = dc_prev;
        }
        let mut flat = Vec::with_capacity(grad.len());
        g_lstm.write_flat(&mut flat);
        g_head.write_flat(&mut flat);
        for (a, b) in grad.iter_mut().zip(&flat) {
            *a += b;
        }
        Ok(sse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_size_is_32() {
        let m = build_vanilla_lstm(14, 10, 14, 0);
        assert_eq!(m.hidden_size(), 32);
        assert_eq!(m.output_len(), 14);
        assert_eq!(m.param_count(), 4 * (10 * 32 + 32 * 32 + 32) + 32 * 14 + 14);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(build_vanilla_lstm(14, 10, 14, 5), build_vanilla_lstm(14, 10, 14, 5));
        assert_ne!(
            build_vanilla_lstm(14, 10, 14, 5).params_flat(),
            build_vanilla_lstm(14, 10, 14, 6).params_flat()
        );
    }

    #[test]
    fn dropout_rng_is_ignored() {
        let m = build_vanilla_lstm(3, 2, 2, 1);
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.3, -0.1], vec![0.0, 0.5]]).unwrap();
        let t = [0.4, 0.6];
        let mut g1 = vec![0.0; m.param_count()];
        let mut g2 = vec![0.0; m.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = m.accumulate_gradient(&x, &t, None, 1.0, &mut g1).unwrap();
        let b = m.accumulate_gradient(&x, &t, Some(&mut rng), 1.0, &mut g2).unwrap();
        assert_eq!(a, b);
        assert_eq!(g1, g2);
    }
}
