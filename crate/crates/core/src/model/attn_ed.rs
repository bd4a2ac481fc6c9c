//! Encoder–decoder LSTM with self-attention over the encoder states.
//!
//! The encoder runs over the `L x F` window. Self-attention re-weights its
//! hidden states and the attended rows are mean-pooled into one context
//! vector. The decoder starts from the encoder's final `(h, c)` and unrolls
//! `H` steps; step `t` reads `[context, ŷ_{t-1}]`, where `ŷ_0` is the last
//! observed value of the feedback feature (daily usage). Each decoder state
//! maps through a one-unit dense layer to the prediction for that day.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hyper::HyperParams;
use super::ModelError;
use crate::nn::attention::{self_attention, self_attention_backward, self_attention_cached, AttentionCache};
use crate::nn::dense::{DenseGrads, DenseParams};
use crate::nn::dropout::dropout_mask;
use crate::nn::lstm::{step_backward, step_cached, step_in_place, LstmGrads, LstmParams, LstmStepCache};
use crate::nn::matrix::{dot, Matrix};
use crate::nn::{Network, NnError};

/// Shape of an attn-ED instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttnEdShape {
    pub window_len: usize,
    pub horizon: usize,
    pub n_features: usize,
    /// Column of the input window fed back as the first decoder input.
    pub feedback_feature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttnEdModel {
    pub encoder: LstmParams,
    pub decoder: LstmParams,
    pub output: DenseParams,
    pub hyper: HyperParams,
    pub shape: AttnEdShape,
}

/// Validates `hp` against the tuning grid, then initializes from `seed`.
pub fn build_attn_ed(
    hp: &HyperParams,
    window_len: usize,
    horizon: usize,
    n_features: usize,
    seed: u64,
) -> Result<AttnEdModel, ModelError> {
    hp.validate()?;
    AttnEdModel::new(
        *hp,
        AttnEdShape {
            window_len,
            horizon,
            n_features,
            feedback_feature: 0,
        },
        seed,
    )
}

#[derive(Debug, Clone)]
struct Masks {
    enc_input: Vec<f64>,
    enc_recurrent: Vec<f64>,
    context: Vec<f64>,
    dec_input: Vec<f64>,
    dec_recurrent: Vec<f64>,
}

impl Masks {
    fn draw(model: &AttnEdModel, rng: &mut ChaCha8Rng) -> Self {
        let d = model.hidden_size();
        let hp = &model.hyper;
        Self {
            enc_input: dropout_mask(model.shape.n_features, hp.lstm_dropout, rng),
            enc_recurrent: dropout_mask(d, hp.recurrent_dropout, rng),
            context: dropout_mask(d, hp.layer_dropout, rng),
            dec_input: dropout_mask(d + 1, hp.lstm_dropout, rng),
            dec_recurrent: dropout_mask(d, hp.recurrent_dropout, rng),
        }
    }
}

struct Trace {
    enc: Vec<LstmStepCache>,
    hidden: Matrix,
    attention: AttentionCache,
    dec: Vec<LstmStepCache>,
    z: Vec<f64>,
    y: Vec<f64>,
}

fn apply_mask(v: &[f64], mask: Option<&Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => v.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => v.to_vec(),
    }
}

fn mask_in_place(v: &mut [f64], mask: Option<&Vec<f64>>) {
    if let Some(m) = mask {
        v.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
    }
}

impl AttnEdModel {
    /// Builds without grid validation; only structural checks apply.
    pub fn new(hyper: HyperParams, shape: AttnEdShape, seed: u64) -> Result<Self, ModelError> {
        Self::check_structure(&hyper, &shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = hyper.hidden_units;
        let encoder = LstmParams::init(shape.n_features, d, &mut rng);
        let decoder = LstmParams::init(d + 1, d, &mut rng);
        let output = DenseParams::init(d, 1, hyper.dense_activation, &mut rng);
        Ok(Self {
            encoder,
            decoder,
            output,
            hyper,
            shape,
        })
    }

    /// All-zero weights, for debugging propagation.
    pub fn zeroed(hyper: HyperParams, shape: AttnEdShape) -> Result<Self, ModelError> {
        Self::check_structure(&hyper, &shape)?;
        let d = hyper.hidden_units;
        Ok(Self {
            encoder: LstmParams::zeros(shape.n_features, d),
            decoder: LstmParams::zeros(d + 1, d),
            output: DenseParams::zeros(d, 1, hyper.dense_activation),
            hyper,
            shape,
        })
    }

    fn check_structure(hyper: &HyperParams, shape: &AttnEdShape) -> Result<(), ModelError> {
        if hyper.hidden_units == 0 || shape.window_len == 0 || shape.horizon == 0 || shape.n_features == 0 {
            return Err(ModelError::Config(format!(
                "hidden units, window length, horizon and feature count must be positive (got {}, {}, {}, {})",
                hyper.hidden_units, shape.window_len, shape.horizon, shape.n_features
            )));
        }
        if shape.feedback_feature >= shape.n_features {
            return Err(ModelError::Config(format!(
                "feedback feature {} out of range for {} features",
                shape.feedback_feature, shape.n_features
            )));
        }
        for (name, rate) in [
            ("lstm_dropout", hyper.lstm_dropout),
            ("recurrent_dropout", hyper.recurrent_dropout),
            ("layer_dropout", hyper.layer_dropout),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(ModelError::Config(format!("{name} must lie in [0, 1), got {rate}")));
            }
        }
        Ok(())
    }

    pub fn hidden_size(&self) -> usize {
        self.encoder.hidden_size
    }

    /// Encoder `4(F·d + d² + d)`, decoder `4((d+1)·d + d² + d)`, dense `d + 1`.
    pub fn closed_form_param_count(hidden: usize, n_features: usize) -> usize {
        let d = hidden;
        4 * (n_features * d + d * d + d) + 4 * ((d + 1) * d + d * d + d) + (d + 1)
    }

    /// Inference without caches or masks; matches `run(input, None).y`
    /// bit for bit.
    fn infer(&self, input: &Matrix) -> Result<Vec<f64>, NnError> {
        let AttnEdShape {
            window_len,
            horizon,
            n_features,
            feedback_feature,
        } = self.shape;
        if input.shape() != (window_len, n_features) {
            return Err(NnError::Dimension(format!(
                "attn-ED expects a {window_len}x{n_features} window, got {}x{}",
                input.rows(),
                input.cols()
            )));
        }
        let d = self.hidden_size();
        let mut h = vec![0.0; d];
        let mut c = vec![0.0; d];
        let mut z = vec![0.0; 4 * d];
        let mut hidden = Matrix::zeros(window_len, d);
        for t in 0..window_len {
            step_in_place(&self.encoder, input.row(t), &mut h, &mut c, &mut z);
            hidden.row_mut(t).copy_from_slice(&h);
        }
        let mut step_input = self_attention(&hidden)?.column_means();
        step_input.push(0.0);
        let mut y = Vec::with_capacity(horizon);
        let mut y_prev = input.get(window_len - 1, feedback_feature);
        for _ in 0..horizon {
            step_input[d] = y_prev;
            step_in_place(&self.decoder, &step_input, &mut h, &mut c, &mut z);
            let yt = self.output.activation.apply(dot(self.output.weight.as_slice(), &h) + self.output.bias[0]);
            y.push(yt);
            y_prev = yt;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("attn-ED output".into()));
        }
        Ok(y)
    }

    fn run(&self, input: &Matrix, masks: Option<&Masks>) -> Result<Trace, NnError> {
        let AttnEdShape {
            window_len,
            horizon,
            n_features,
            feedback_feature,
        } = self.shape;
        if input.shape() != (window_len, n_features) {
            return Err(NnError::Dimension(format!(
                "attn-ED expects a {window_len}x{n_features} window, got {}x{}",
                input.rows(),
                input.cols()
            )));
        }
        let d = self.hidden_size();

        let mut h = vec![0.0; d];
        let mut c = vec![0.0; d];
        let mut enc = Vec::with_capacity(window_len);
        let mut hidden = Matrix::zeros(window_len, d);
        for t in 0..window_len {
            let x = apply_mask(input.row(t), masks.map(|m| &m.enc_input));
            let h_in = apply_mask(&h, masks.map(|m| &m.enc_recurrent));
            let cache = step_cached(&self.encoder, &x, &h_in, &c);
            h.copy_from_slice(&cache.h);
            c.copy_from_slice(&cache.c);
            hidden.row_mut(t).copy_from_slice(&h);
            enc.push(cache);
        }

        let attention = self_attention_cached(&hidden)?;
        let mut context = attention.output.column_means();
        mask_in_place(&mut context, masks.map(|m| &m.context));

        let mut dec = Vec::with_capacity(horizon);
        let mut z = Vec::with_capacity(horizon);
        let mut y = Vec::with_capacity(horizon);
        let mut y_prev = input.get(window_len - 1, feedback_feature);
        let mut step_input = context.clone();
        step_input.push(0.0);
        for _ in 0..horizon {
            step_input[d] = y_prev;
            let x = apply_mask(&step_input, masks.map(|m| &m.dec_input));
            let h_in = apply_mask(&h, masks.map(|m| &m.dec_recurrent));
            let cache = step_cached(&self.decoder, &x, &h_in, &c);
            h.copy_from_slice(&cache.h);
            c.copy_from_slice(&cache.c);
            let zt = dot(self.output.weight.as_slice(), &cache.h) + self.output.bias[0];
            let yt = self.output.activation.apply(zt);
            z.push(zt);
            y.push(yt);
            y_prev = yt;
            dec.push(cache);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("attn-ED output".into()));
        }
        Ok(Trace {
            enc,
            hidden,
            attention,
            dec,
            z,
            y,
        })
    }

    fn backward(&self, trace: &Trace, masks: Option<&Masks>, dy: &[f64]) -> (LstmGrads, LstmGrads, DenseGrads) {
        let d = self.hidden_size();
        let window_len = self.shape.window_len;
        let mut g_enc = LstmGrads::zeros_like(&self.encoder);
        let mut g_dec = LstmGrads::zeros_like(&self.decoder);
        let mut g_out = DenseGrads::zeros_like(&self.output);
        let w_out = self.output.weight.as_slice();

        let mut d_context = vec![0.0; d];
        let mut dh_next = vec![0.0; d];
        let mut dc_next = vec![0.0; d];
        let mut dy_carry = 0.0;
        for t in (0..trace.dec.len()).rev() {
            let cache = &trace.dec[t];
            let dyt = dy[t] + dy_carry;
            let dz = dyt * self.output.activation.derivative(trace.z[t], trace.y[t]);
            for k in 0..d {
                g_out.weight[k] += dz * cache.h[k];
                dh_next[k] += dz * w_out[k];
            }
            g_out.bias[0] += dz;
            let (mut dx, mut dh_prev, dc_prev) = step_backward(&self.decoder, cache, &dh_next, &dc_next, &mut g_dec);
            mask_in_place(&mut dx, masks.map(|m| &m.dec_input));
            for k in 0..d {
                d_context[k] += dx[k];
            }
            dy_carry = dx[d];
            mask_in_place(&mut dh_prev, masks.map(|m| &m.dec_recurrent));
            dh_next = dh_prev;
            dc_next = dc_prev;
        }

        mask_in_place(&mut d_context, masks.map(|m| &m.context));
        let inv = 1.0 / window_len as f64;
        let mut d_attn = Matrix::zeros(window_len, d);
        for t in 0..window_len {
            for (o, g) in d_attn.row_mut(t).iter_mut().zip(&d_context) {
                *o = g * inv;
            }
        }
        let d_hidden = self_attention_backward(&trace.hidden, &trace.attention, &d_attn);

        for t in (0..window_len).rev() {
            for (a, b) in dh_next.iter_mut().zip(d_hidden.row(t)) {
                *a += b;
            }
            let (_, mut dh_prev, dc_prev) = step_backward(&self.encoder, &trace.enc[t], &dh_next, &dc_next, &mut g_enc);
            mask_in_place(&mut dh_prev, masks.map(|m| &m.enc_recurrent));
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        (g_enc, g_dec, g_out)
    }
}

impl Network for AttnEdModel {
    fn param_blocks(&self) -> Vec<(String, usize)> {
        let mut blocks = self.encoder.block_names("encoder");
        blocks.extend(self.decoder.block_names("decoder"));
        blocks.extend(self.output.block_names("dense"));
        blocks
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.encoder.write_flat(&mut out);
        self.decoder.write_flat(&mut out);
        self.output.write_flat(&mut out);
        out
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut at = self.encoder.read_flat(flat);
        at += self.decoder.read_flat(&flat[at..]);
        self.output.read_flat(&flat[at..]);
    }

    fn output_len(&self) -> usize {
        self.shape.horizon
    }

    fn forward(&self, input: &Matrix) -> Result<Vec<f64>, NnError> {
        self.infer(input)
    }

    fn accumulate_gradient(
        &self,
        input: &Matrix,
        target: &[f64],
        dropout: Option<&mut ChaCha8Rng>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64, NnError> {
        if target.len() != self.shape.horizon {
            return Err(NnError::Dimension(format!(
                "target has {} entries, horizon is {}",
                target.len(),
                self.shape.horizon
            )));
        }
        let masks = dropout.map(|rng| Masks::draw(self, rng));
        let trace = self.run(input, masks.as_ref())?;
        let mut sse = 0.0;
        let dy: Vec<f64> = trace
            .y
            .iter()
            .zip(target)
            .map(|(y, t)| {
                sse += (y - t) * (y - t);
                2.0 * (y - t) * scale
            })
            .collect();
        let (g_enc, g_dec, g_out) = self.backward(&trace, masks.as_ref(), &dy);
        let mut flat = Vec::with_capacity(grad.len());
        g_enc.write_flat(&mut flat);
        g_dec.write_flat(&mut flat);
        g_out.write_flat(&mut flat);
        for (a, b) in grad.iter_mut().zip(&flat) {
            *a += b;
        }
        Ok(sse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    fn small_hp(hidden: usize) -> HyperParams {
        HyperParams {
            hidden_units: hidden,
            lstm_dropout: 0.0,
            recurrent_dropout: 0.0,
            layer_dropout: 0.0,
            dense_activation: Activation::Tanh,
            learning_rate: 0.001,
            batch_size: 16,
        }
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        let m = build_attn_ed(&HyperParams::optimal_evotion(), 14, 14, 10, 0).unwrap();
        // 4(10·128 + 128² + 128) + 4(129·128 + 128² + 128) + 129
        assert_eq!(m.param_count(), 71_168 + 132_096 + 129);
        assert_eq!(m.param_count(), AttnEdModel::closed_form_param_count(128, 10));
        assert_eq!(m.params_flat().len(), m.param_count());
    }

    #[test]
    fn seeded_initialization_is_reproducible() {
        let hp = HyperParams::optimal_evotion();
        let a = build_attn_ed(&hp, 14, 14, 10, 7).unwrap();
        let b = build_attn_ed(&hp, 14, 14, 10, 7).unwrap();
        let c = build_attn_ed(&hp, 14, 14, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params_flat(), c.params_flat());
    }

    #[test]
    fn invalid_grid_values_rejected() {
        let mut hp = HyperParams::optimal_evotion();
        hp.batch_size = 7;
        assert!(matches!(build_attn_ed(&hp, 14, 14, 10, 0), Err(ModelError::Config(_))));
    }

    #[test]
    fn zero_model_predicts_activation_of_zero() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            let mut hp = small_hp(4);
            hp.dense_activation = act;
            let shape = AttnEdShape {
                window_len: 5,
                horizon: 3,
                n_features: 2,
                feedback_feature: 0,
            };
            let m = AttnEdModel::zeroed(hp, shape).unwrap();
            let out = m.forward(&Matrix::zeros(5, 2)).unwrap();
            assert_eq!(out, vec![act.apply(0.0); 3]);
        }
    }

    #[test]
    fn window_shape_checked() {
        let shape = AttnEdShape {
            window_len: 4,
            horizon: 2,
            n_features: 3,
            feedback_feature: 0,
        };
        let m = AttnEdModel::new(small_hp(3), shape, 1).unwrap();
        assert!(matches!(m.forward(&Matrix::zeros(4, 2)), Err(NnError::Dimension(_))));
    }

    #[test]
    fn flat_round_trip() {
        let shape = AttnEdShape {
            window_len: 3,
            horizon: 2,
            n_features: 2,
            feedback_feature: 1,
        };
        let a = AttnEdModel::new(small_hp(5), shape, 3).unwrap();
        let mut b = AttnEdModel::zeroed(small_hp(5), shape).unwrap();
        b.set_params_flat(&a.params_flat());
        assert_eq!(a, b);
    }

    #[test]
    fn inference_path_matches_training_trace() {
        let hp = HyperParams {
            hidden_units: 6,
            ..HyperParams::optimal_evotion()
        };
        let shape = AttnEdShape {
            window_len: 5,
            horizon: 4,
            n_features: 3,
            feedback_feature: 1,
        };
        let m = AttnEdModel::new(hp, shape, 21).unwrap();
        let x = Matrix::from_vec(5, 3, (0..15).map(|i| ((i * 7) % 11) as f64 / 11.0).collect()).unwrap();
        let a: Vec<u64> = m.infer(&x).unwrap().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = m.run(&x, None).unwrap().y.iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }
}
