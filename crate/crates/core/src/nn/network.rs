use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::matrix::Matrix;
use super::NnError;
use crate::seed::mix_seed;

/// Examples per parallel work unit. Partial gradients are summed in chunk
/// order, so results do not depend on the thread count.
const CHUNK: usize = 8;

/// A sequence-to-vector regressor with a flat parameter view.
///
/// The flat layout is the concatenation of [`Network::param_blocks`] in order;
/// gradients use the same layout.
pub trait Network: Clone + Send + Sync {
    fn param_blocks(&self) -> Vec<(String, usize)>;

    fn param_count(&self) -> usize {
        self.param_blocks().iter().map(|(_, n)| n).sum()
    }

    fn params_flat(&self) -> Vec<f64>;

    fn set_params_flat(&mut self, flat: &[f64]);

    fn output_len(&self) -> usize;

    /// Inference forward pass, no dropout.
    fn forward(&self, input: &Matrix) -> Result<Vec<f64>, NnError>;

    /// Forward and backward for one example. Adds `scale · ∂SSE/∂θ` into
    /// `grad` and returns the example's sum of squared errors. Dropout masks
    /// are drawn from `dropout` when given, otherwise disabled.
    fn accumulate_gradient(
        &self,
        input: &Matrix,
        target: &[f64],
        dropout: Option<&mut ChaCha8Rng>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64, NnError>;
}

/// Borrowed `(input window, target vector)` pair.
pub type Example<'a> = (&'a Matrix, &'a [f64]);

/// Mean squared error over the batch and its analytic gradient.
///
/// With `dropout_seed`, example `k` draws its masks from a generator seeded by
/// `(dropout_seed, k)`, which makes the loss a deterministic function of the
/// parameters.
pub fn loss_and_gradient<N: Network>(
    net: &N,
    batch: &[Example<'_>],
    dropout_seed: Option<u64>,
) -> Result<(f64, Vec<f64>), NnError> {
    let n_params = net.param_count();
    if batch.is_empty() {
        return Ok((0.0, vec![0.0; n_params]));
    }
    let n_points = (batch.len() * net.output_len()) as f64;
    let scale = 1.0 / n_points;

    let partials: Vec<Result<(f64, Vec<f64>), NnError>> = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(chunk_idx, chunk)| {
            let mut grad = vec![0.0; n_params];
            let mut sse = 0.0;
            for (offset, (input, target)) in chunk.iter().enumerate() {
                let index = (chunk_idx * CHUNK + offset) as u64;
                let mut rng = dropout_seed.map(|s| ChaCha8Rng::seed_from_u64(mix_seed(s, index)));
                sse += net.accumulate_gradient(input, target, rng.as_mut(), scale, &mut grad)?;
            }
            Ok((sse, grad))
        })
        .collect();

    let mut total = 0.0;
    let mut grad = vec![0.0; n_params];
    for part in partials {
        let (sse, g) = part?;
        total += sse;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((total * scale, grad))
}

/// Mean squared error of the inference forward pass.
pub fn mean_squared_error<N: Network>(net: &N, batch: &[Example<'_>]) -> Result<f64, NnError> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let sums: Vec<Result<f64, NnError>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sse = 0.0;
            for (input, target) in chunk {
                let out = net.forward(input)?;
                sse += out.iter().zip(target.iter()).map(|(y, t)| (y - t) * (y - t)).sum::<f64>();
            }
            Ok(sse)
        })
        .collect();
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    Ok(total / (batch.len() * net.output_len()) as f64)
}
