//! Single-layer LSTM with distinct per-gate weights.
//!
//! Gate blocks are stored fused, in the order forget, input, candidate,
//! output: `w_x` is `4·hidden x input`, `w_h` is `4·hidden x hidden`, `b` has
//! `4·hidden` entries. Block `g` occupies rows `g·hidden..(g+1)·hidden`.
//!
//! ```text
//! f = σ(W_xf x + W_hf h' + b_f)      i = σ(W_xi x + W_hi h' + b_i)
//! s = tanh(W_xs x + W_hs h' + b_s)   o = σ(W_xo x + W_ho h' + b_o)
//! c = f ⊙ c' + i ⊙ s                 h = tanh(c) ⊙ o
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::matrix::{matvec_acc, matvec_t_acc, outer_acc, Matrix};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            w_x: Matrix::zeros(4 * hidden_size, input_size),
            w_h: Matrix::zeros(4 * hidden_size, hidden_size),
            b: vec![0.0; 4 * hidden_size],
        }
    }

    /// Glorot-uniform weights per gate block, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let limit_x = (6.0 / (input_size + hidden_size) as f64).sqrt();
        let limit_h = (6.0 / (2 * hidden_size) as f64).sqrt();
        for w in p.w_x.as_mut_slice() {
            *w = rng.gen_range(-limit_x..=limit_x);
        }
        for w in p.w_h.as_mut_slice() {
            *w = rng.gen_range(-limit_h..=limit_h);
        }
        p.b[..hidden_size].iter_mut().for_each(|b| *b = 1.0);
        p
    }

    pub fn param_count(&self) -> usize {
        self.w_x.as_slice().len() + self.w_h.as_slice().len() + self.b.len()
    }

    /// Input weights of one gate, `hidden x input`, row-major.
    pub fn gate_w_x(&self, gate: Gate) -> &[f64] {
        let n = self.hidden_size * self.input_size;
        &self.w_x.as_slice()[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn gate_w_h(&self, gate: Gate) -> &[f64] {
        let n = self.hidden_size * self.hidden_size;
        &self.w_h.as_slice()[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn gate_b(&self, gate: Gate) -> &[f64] {
        &self.b[gate as usize * self.hidden_size..(gate as usize + 1) * self.hidden_size]
    }

    pub(crate) fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.w_x.as_slice());
        out.extend_from_slice(self.w_h.as_slice());
        out.extend_from_slice(&self.b);
    }

    pub(crate) fn read_flat(&mut self, src: &[f64]) -> usize {
        let nx = self.w_x.as_slice().len();
        let nh = self.w_h.as_slice().len();
        let nb = self.b.len();
        self.w_x.as_mut_slice().copy_from_slice(&src[..nx]);
        self.w_h.as_mut_slice().copy_from_slice(&src[nx..nx + nh]);
        self.b.copy_from_slice(&src[nx + nh..nx + nh + nb]);
        nx + nh + nb
    }

    pub(crate) fn block_names(&self, prefix: &str) -> Vec<(String, usize)> {
        vec![
            (format!("{prefix}.w_x"), self.w_x.as_slice().len()),
            (format!("{prefix}.w_h"), self.w_h.as_slice().len()),
            (format!("{prefix}.b"), self.b.len()),
        ]
    }

    fn check(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_size
            || h_prev.len() != self.hidden_size
            || c_prev.len() != self.hidden_size
        {
            return Err(NnError::Dimension(format!(
                "lstm step expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
                self.input_size,
                self.hidden_size,
                self.hidden_size,
                x.len(),
                h_prev.len(),
                c_prev.len()
            )));
        }
        Ok(())
    }
}

/// Everything one step needs to run backward.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub s: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn lstm_step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    params.check(x, h_prev, c_prev)?;
    let cache = step_cached(params, x, h_prev, c_prev);
    Ok((cache.h, cache.c))
}

/// Allocation-free inference step. Updates `h` and `c` in place; `z` is
/// scratch of length `4d`. Same arithmetic as [`step_cached`].
pub(crate) fn step_in_place(params: &LstmParams, x: &[f64], h: &mut [f64], c: &mut [f64], z: &mut [f64]) {
    let d = params.hidden_size;
    z.copy_from_slice(&params.b);
    matvec_acc(params.w_x.as_slice(), 4 * d, params.input_size, x, z);
    matvec_acc(params.w_h.as_slice(), 4 * d, d, h, z);
    for k in 0..d {
        let f = sigmoid(z[k]);
        let i = sigmoid(z[d + k]);
        let s = z[2 * d + k].tanh();
        let o = sigmoid(z[3 * d + k]);
        c[k] = f * c[k] + i * s;
        h[k] = c[k].tanh() * o;
    }
}

/// Forward step keeping intermediates. `x` and `h_prev` are the values the
/// gates actually see (after any dropout masks).
pub(crate) fn step_cached(params: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmStepCache {
    let d = params.hidden_size;
    let mut z = params.b.clone();
    matvec_acc(params.w_x.as_slice(), 4 * d, params.input_size, x, &mut z);
    matvec_acc(params.w_h.as_slice(), 4 * d, d, h_prev, &mut z);

    let f: Vec<f64> = z[..d].iter().map(|&v| sigmoid(v)).collect();
    let i: Vec<f64> = z[d..2 * d].iter().map(|&v| sigmoid(v)).collect();
    let s: Vec<f64> = z[2 * d..3 * d].iter().map(|v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * d..].iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = (0..d).map(|k| f[k] * c_prev[k] + i[k] * s[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..d).map(|k| tanh_c[k] * o[k]).collect();

    LstmStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        f,
        i,
        s,
        o,
        c,
        tanh_c,
        h,
    }
}

/// Gradient accumulators shaped like [`LstmParams`].
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl LstmGrads {
    pub fn zeros_like(p: &LstmParams) -> Self {
        Self {
            w_x: vec![0.0; p.w_x.as_slice().len()],
            w_h: vec![0.0; p.w_h.as_slice().len()],
            b: vec![0.0; p.b.len()],
        }
    }

    pub(crate) fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.w_x);
        out.extend_from_slice(&self.w_h);
        out.extend_from_slice(&self.b);
    }
}

/// Backward through one step.
///
/// `dh` is the total gradient reaching `h_t`, `dc_next` the gradient reaching
/// `c_t` from step `t+1`. Returns `(dx, dh_prev, dc_prev)` with respect to the
/// values the gates saw.
pub(crate) fn step_backward(
    params: &LstmParams,
    cache: &LstmStepCache,
    dh: &[f64],
    dc_next: &[f64],
    grads: &mut LstmGrads,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = params.hidden_size;
    let mut dz = vec![0.0; 4 * d];
    let mut dc_prev = vec![0.0; d];
    for k in 0..d {
        let d_o = dh[k] * cache.tanh_c[k];
        let dc = dc_next[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
        let d_f = dc * cache.c_prev[k];
        let d_i = dc * cache.s[k];
        let d_s = dc * cache.i[k];
        dc_prev[k] = dc * cache.f[k];
        dz[k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
        dz[d + k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
        dz[2 * d + k] = d_s * (1.0 - cache.s[k] * cache.s[k]);
        dz[3 * d + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
    }
    outer_acc(&mut grads.w_x, 4 * d, params.input_size, &dz, &cache.x);
    outer_acc(&mut grads.w_h, 4 * d, d, &dz, &cache.h_prev);
    for (g, v) in grads.b.iter_mut().zip(&dz) {
        *g += v;
    }
    let mut dx = vec![0.0; params.input_size];
    matvec_t_acc(params.w_x.as_slice(), 4 * d, params.input_size, &dz, &mut dx);
    let mut dh_prev = vec![0.0; d];
    matvec_t_acc(params.w_h.as_slice(), 4 * d, d, &dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Output of [`lstm_forward`]: every hidden state plus the final `(h, c)`.
#[derive(Debug, Clone)]
pub struct LstmOutput {
    pub hidden: Matrix,
    pub h_last: Vec<f64>,
    pub c_last: Vec<f64>,
}

/// Runs the recurrence from a zero state over the rows of `xs`.
pub fn lstm_forward(params: &LstmParams, xs: &Matrix) -> Result<LstmOutput, NnError> {
    if xs.rows() == 0 {
        return Err(NnError::EmptySequence);
    }
    if xs.cols() != params.input_size {
        return Err(NnError::Dimension(format!(
            "sequence has {} features, lstm expects {}",
            xs.cols(),
            params.input_size
        )));
    }
    let d = params.hidden_size;
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut hidden = Matrix::zeros(xs.rows(), d);
    for t in 0..xs.rows() {
        let cache = step_cached(params, xs.row(t), &h, &c);
        h = cache.h;
        c = cache.c;
        hidden.row_mut(t).copy_from_slice(&h);
    }
    Ok(LstmOutput {
        hidden,
        h_last: h,
        c_last: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_zero_state() {
        let p = LstmParams::zeros(3, 2);
        let (h, c) = lstm_step(&p, &[1.0, -2.0, 0.5], &[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_weights_carry_half_the_cell() {
        // gates are σ(0) = 0.5 and the candidate tanh(0) = 0
        let p = LstmParams::zeros(1, 1);
        let (h, c) = lstm_step(&p, &[0.0], &[0.0], &[2.0]).unwrap();
        assert_eq!(c, vec![1.0]);
        assert!((h[0] - 0.380_797_078).abs() < 1e-9);
        assert!((h[0] - 0.5 * 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn hidden_state_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = LstmParams::init(4, 5, &mut rng);
        p.w_x.as_mut_slice().iter_mut().for_each(|w| *w *= 50.0);
        let (h, _) = lstm_step(&p, &[0.3, -0.2, 0.7, 0.1], &[0.9; 5], &[1.5; 5]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1.0));
        // saturated gates round to exactly ±1 in double precision
        let (h, _) = lstm_step(&p, &[1e3, -1e3, 7.0, 0.1], &[0.9; 5], &[40.0; 5]).unwrap();
        assert!(h.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = LstmParams::zeros(3, 2);
        assert!(matches!(
            lstm_step(&p, &[1.0], &[0.0; 2], &[0.0; 2]),
            Err(NnError::Dimension(_))
        ));
    }

    #[test]
    fn forward_prefix_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = LstmParams::init(3, 4, &mut rng);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|t| vec![t as f64 * 0.1, -0.3, (t as f64).sin()])
            .collect();
        let full = lstm_forward(&p, &Matrix::from_rows(&rows).unwrap()).unwrap();
        let prefix = lstm_forward(&p, &Matrix::from_rows(&rows[..3]).unwrap()).unwrap();
        for t in 0..3 {
            assert_eq!(full.hidden.row(t), prefix.hidden.row(t));
        }
        let single = lstm_forward(&p, &Matrix::from_rows(&rows[..1]).unwrap()).unwrap();
        let (h1, _) = lstm_step(&p, &rows[0], &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(single.hidden.row(0), h1.as_slice());
    }

    #[test]
    fn empty_sequence_rejected() {
        let p = LstmParams::zeros(2, 2);
        assert!(matches!(
            lstm_forward(&p, &Matrix::zeros(0, 2)),
            Err(NnError::EmptySequence)
        ));
    }

    #[test]
    fn gate_views_cover_fused_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = LstmParams::init(3, 2, &mut rng);
        assert_eq!(p.gate_w_x(Gate::Output).len(), 6);
        assert_eq!(p.gate_w_x(Gate::Forget), &p.w_x.as_slice()[..6]);
        assert_eq!(p.gate_b(Gate::Forget), &[1.0, 1.0]);
        assert_eq!(p.gate_b(Gate::Candidate), &[0.0, 0.0]);
        assert_eq!(p.gate_w_h(Gate::Input).len(), 4);
    }
}
