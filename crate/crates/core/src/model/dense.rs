use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    Linear,
    ReLU,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::ReLU => z.max(0.0),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected layer `y = act(W·x + b)` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(contract("dense layer needs at least one input and one output"));
        }
        let n_in = weights[0].len();
        if weights.iter().any(|row| row.len() != n_in) {
            return Err(contract("dense layer weight rows have unequal lengths"));
        }
        if bias.len() != weights.len() {
            return Err(contract(format!("bias length {} != {} outputs", bias.len(), weights.len())));
        }
        Ok(DenseLayer { weights, bias, activation })
    }

    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        DenseLayer { weights: vec![vec![0.0; n_in]; n_out], bias: vec![0.0; n_out], activation }
    }

    /// Weights and biases uniform on `[−1/√n_in, 1/√n_in]`.
    pub fn init<R: Rng>(n_in: usize, n_out: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        let mut draw = || rng.gen_range(-bound..=bound);
        let weights = (0..n_out).map(|_| (0..n_in).map(|_| draw()).collect()).collect();
        let bias = (0..n_out).map(|_| draw()).collect();
        DenseLayer { weights, bias, activation }
    }

    pub fn identity(n: usize) -> Self {
        let weights = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        DenseLayer { weights, bias: vec![0.0; n], activation: Activation::Linear }
    }

    pub fn n_in(&self) -> usize {
        self.weights[0].len()
    }

    pub fn n_out(&self) -> usize {
        self.weights.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_out() * (self.n_in() + 1)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in() {
            return Err(contract(format!("dense layer expects {} inputs, got {}", self.n_in(), x.len())));
        }
        Ok(())
    }

    pub(crate) fn preactivation(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }

    pub(crate) fn activate(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.activation.apply(v)).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activate(&self.preactivation(x)?))
    }

    /// Given input `x`, pre-activation `z` and `∂L/∂y`, returns the parameter
    /// gradient (weights row-major, then biases) and `∂L/∂x`.
    pub(crate) fn backward(&self, x: &[f64], z: &[f64], grad_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gz: Vec<f64> = grad_out.iter().zip(z).map(|(g, &zi)| g * self.activation.derivative(zi)).collect();
        let mut grads = Vec::with_capacity(self.n_params());
        for &g in &gz {
            grads.extend(x.iter().map(|v| g * v));
        }
        grads.extend_from_slice(&gz);
        let mut gx = vec![0.0; self.n_in()];
        for (row, &g) in self.weights.iter().zip(&gz) {
            for (acc, w) in gx.iter_mut().zip(row) {
                *acc += g * w;
            }
        }
        (grads, gx)
    }

    pub(crate) fn write_params(&self, out: &mut Vec<f64>) {
        for row in &self.weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.bias);
    }

    pub(crate) fn read_params(&mut self, src: &mut &[f64]) {
        let n_in = self.n_in();
        for row in &mut self.weights {
            row.copy_from_slice(&src[..n_in]);
            *src = &src[n_in..];
        }
        let n_out = self.bias.len();
        self.bias.copy_from_slice(&src[..n_out]);
        *src = &src[n_out..];
    }
}
