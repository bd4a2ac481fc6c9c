//! Parameter-free scaled dot-product self-attention over a hidden-state
//! sequence: `softmax(H Hᵀ / √d) H`, softmax taken row-wise.

use super::activation::softmax_in_place;
use super::matrix::{axpy, dot, Matrix};
use super::NnError;

/// Forward values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub weights: Matrix,
    pub output: Matrix,
}

pub fn self_attention(h: &Matrix) -> Result<Matrix, NnError> {
    Ok(self_attention_cached(h)?.output)
}

/// Row-stochastic attention weights `softmax(H Hᵀ / √d)`.
pub fn attention_weights(h: &Matrix) -> Result<Matrix, NnError> {
    let (n, d) = h.shape();
    if n == 0 || d == 0 {
        return Err(NnError::Dimension(format!(
            "self-attention needs a non-empty sequence, got {n}x{d}"
        )));
    }
    if !h.is_finite() {
        return Err(NnError::NonFinite("self-attention input".into()));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        let hi = h.row(i);
        let row = weights.row_mut(i);
        for (j, w) in row.iter_mut().enumerate() {
            *w = dot(hi, h.row(j)) * scale;
        }
        softmax_in_place(row);
    }
    Ok(weights)
}

pub fn self_attention_cached(h: &Matrix) -> Result<AttentionCache, NnError> {
    let weights = attention_weights(h)?;
    let output = weights.matmul(h)?;
    Ok(AttentionCache { weights, output })
}

/// Gradient with respect to `H` given the upstream gradient `d_out` of the
/// attention output.
pub fn self_attention_backward(h: &Matrix, cache: &AttentionCache, d_out: &Matrix) -> Matrix {
    let (n, d) = h.shape();
    let a = &cache.weights;
    let scale = 1.0 / (d as f64).sqrt();

    // Direct path through the value term: dH += Aᵀ dO.
    let mut dh = Matrix::zeros(n, d);
    for i in 0..n {
        let d_oi = d_out.row(i);
        for j in 0..n {
            axpy(a.get(i, j), d_oi, dh.row_mut(j));
        }
    }

    // dA = dO Hᵀ, then softmax backward row-wise into score gradients dS.
    let mut ds = Matrix::zeros(n, n);
    for i in 0..n {
        let d_oi = d_out.row(i);
        let mut da_row = vec![0.0; n];
        for (j, da) in da_row.iter_mut().enumerate() {
            *da = dot(d_oi, h.row(j));
        }
        let a_row = a.row(i);
        let inner = dot(&da_row, a_row);
        let ds_row = ds.row_mut(i);
        for j in 0..n {
            ds_row[j] = a_row[j] * (da_row[j] - inner) * scale;
        }
    }

    // S = H Hᵀ, so dH += (dS + dSᵀ) H.
    for i in 0..n {
        for j in 0..n {
            let g = ds.get(i, j) + ds.get(j, i);
            if g != 0.0 {
                axpy(g, h.row(j), dh.row_mut(i));
            }
        }
    }
    dh
}
