use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::matrix::{matvec_acc, matvec_t_acc, outer_acc, Matrix};
use super::NnError;

/// Fully connected layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, output, activation);
        let limit = (6.0 / (input + output) as f64).sqrt();
        for w in p.weight.as_mut_slice() {
            *w = rng.gen_range(-limit..=limit);
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }

    /// Pre-activations.
    pub(crate) fn linear(&self, input: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        matvec_acc(self.weight.as_slice(), self.output_size(), self.input_size(), input, &mut z);
        z
    }

    pub(crate) fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weight.as_slice());
        out.extend_from_slice(&self.bias);
    }

    pub(crate) fn read_flat(&mut self, src: &[f64]) -> usize {
        let nw = self.weight.as_slice().len();
        self.weight.as_mut_slice().copy_from_slice(&src[..nw]);
        let nb = self.bias.len();
        self.bias.copy_from_slice(&src[nw..nw + nb]);
        nw + nb
    }

    pub(crate) fn block_names(&self, prefix: &str) -> Vec<(String, usize)> {
        vec![
            (format!("{prefix}.weight"), self.weight.as_slice().len()),
            (format!("{prefix}.bias"), self.bias.len()),
        ]
    }

    /// Backward for `y = act(z)` given upstream `dy`; accumulates into `grads`
    /// and adds the input gradient into `dx`.
    pub(crate) fn backward(&self, input: &[f64], z: &[f64], y: &[f64], dy: &[f64], grads: &mut DenseGrads, dx: &mut [f64]) {
        let dz: Vec<f64> = (0..z.len())
            .map(|k| dy[k] * self.activation.derivative(z[k], y[k]))
            .collect();
        outer_acc(&mut grads.weight, self.output_size(), self.input_size(), &dz, input);
        for (g, v) in grads.bias.iter_mut().zip(&dz) {
            *g += v;
        }
        matvec_t_acc(self.weight.as_slice(), self.output_size(), self.input_size(), &dz, dx);
    }
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros_like(p: &DenseParams) -> Self {
        Self {
            weight: vec![0.0; p.weight.as_slice().len()],
            bias: vec![0.0; p.bias.len()],
        }
    }

    pub(crate) fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weight);
        out.extend_from_slice(&self.bias);
    }
}

pub fn dense_forward(params: &DenseParams, input: &[f64]) -> Result<Vec<f64>, NnError> {
    if input.len() != params.input_size() {
        return Err(NnError::Dimension(format!(
            "dense layer expects {} inputs, got {}",
            params.input_size(),
            input.len()
        )));
    }
    Ok(params
        .linear(input)
        .into_iter()
        .map(|z| params.activation.apply(z))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_dense_gradient_is_least_squares_gradient() {
        // loss = Σ (w·x + b − y)² over rows; closed form dL/dw = 2 Xᵀ r, dL/db = 2 Σ r
        let xs = [[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let ys = [1.0, -0.5, 2.0];
        let mut p = DenseParams::zeros(2, 1, Activation::Identity);
        p.weight.as_mut_slice().copy_from_slice(&[0.3, -0.2]);
        p.bias[0] = 0.1;

        let mut grads = DenseGrads::zeros_like(&p);
        let mut expect_w = [0.0; 2];
        let mut expect_b = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let z = p.linear(x);
            let r = z[0] - y;
            let mut dx = vec![0.0; 2];
            p.backward(x, &z, &z, &[2.0 * r], &mut grads, &mut dx);
            expect_w[0] += 2.0 * r * x[0];
            expect_w[1] += 2.0 * r * x[1];
            expect_b += 2.0 * r;
        }
        assert!((grads.weight[0] - expect_w[0]).abs() < 1e-12);
        assert!((grads.weight[1] - expect_w[1]).abs() < 1e-12);
        assert!((grads.bias[0] - expect_b).abs() < 1e-12);
    }

    #[test]
    fn forward_applies_activation() {
        let mut p = DenseParams::zeros(1, 2, Activation::Relu);
        p.weight.as_mut_slice().copy_from_slice(&[1.0, -1.0]);
        assert_eq!(dense_forward(&p, &[2.0]).unwrap(), vec![2.0, 0.0]);
        assert!(dense_forward(&p, &[1.0, 1.0]).is_err());
    }
}
