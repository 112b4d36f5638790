//! The three-stage regressor `[dense in, middle, dense out]` and its training loop.
//!
//! The middle stage is a quantum circuit layer, a photonic layer, a classical
//! dense layer of matching width, or a pass-through used as a test rig. All
//! variants share the same forward, gradient and training code.

mod dense;
mod quantum;
mod train;

use serde::{Deserialize, Serialize};

pub use dense::{Activation, DenseLayer};
pub use quantum::{
    GradientMethod, PhotonicBounds, PhotonicLayer, PhotonicLayerConfig, QuantumLayer, QuantumLayerConfig,
};
pub use train::{
    fit, hybrid_loss_gradient, mse_loss, pearson, predict, predict_sampled, sgd_step, Dataset, Prediction, TrainConfig,
    TrainReport,
};

use crate::descriptors::draw_rng;
use crate::error::{contract, Result};
use crate::gradients::QuantumJacobian;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    Hybrid,
    ClassicalOnly,
    Photonic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MiddleLayer {
    Quantum(QuantumLayer),
    Photonic(PhotonicLayer),
    Dense(DenseLayer),
    Identity(usize),
}

impl MiddleLayer {
    pub fn width(&self) -> usize {
        match self {
            MiddleLayer::Quantum(q) => q.n_wires(),
            MiddleLayer::Photonic(p) => p.n_modes(),
            MiddleLayer::Dense(d) => d.n_in(),
            MiddleLayer::Identity(n) => *n,
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            MiddleLayer::Dense(d) => d.n_out(),
            other => other.width(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            MiddleLayer::Quantum(q) => q.theta.len(),
            MiddleLayer::Photonic(p) => p.params.len(),
            MiddleLayer::Dense(d) => d.n_params(),
            MiddleLayer::Identity(_) => 0,
        }
    }

    pub fn forward(&self, h: &[f64]) -> Result<Vec<f64>> {
        match self {
            MiddleLayer::Quantum(q) => q.forward(h),
            MiddleLayer::Photonic(p) => p.forward(h),
            MiddleLayer::Dense(d) => d.forward(h),
            MiddleLayer::Identity(n) => {
                if h.len() != *n {
                    return Err(contract(format!("identity layer expects {n} inputs, got {}", h.len())));
                }
                Ok(h.to_vec())
            }
        }
    }

    /// Parameter gradient and input gradient for upstream gradient `g`.
    fn backward(&self, h: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let vjp = |j: QuantumJacobian| j.transpose_mul(g);
        match self {
            MiddleLayer::Quantum(q) => Ok(vjp(q.jacobian(h)?)),
            MiddleLayer::Photonic(p) => Ok(vjp(p.jacobian(h)?)),
            MiddleLayer::Dense(d) => Ok(d.backward(h, &d.preactivation(h)?, g)),
            MiddleLayer::Identity(_) => Ok((Vec::new(), g.to_vec())),
        }
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        match self {
            MiddleLayer::Quantum(q) => out.extend_from_slice(&q.theta),
            MiddleLayer::Photonic(p) => out.extend_from_slice(&p.params),
            MiddleLayer::Dense(d) => d.write_params(out),
            MiddleLayer::Identity(_) => {}
        }
    }

    fn read_params(&mut self, src: &mut &[f64]) {
        let take = |dst: &mut Vec<f64>, src: &mut &[f64]| {
            let n = dst.len();
            dst.copy_from_slice(&src[..n]);
            *src = &src[n..];
        };
        match self {
            MiddleLayer::Quantum(q) => take(&mut q.theta, src),
            MiddleLayer::Photonic(p) => take(&mut p.params, src),
            MiddleLayer::Dense(d) => d.read_params(src),
            MiddleLayer::Identity(_) => {}
        }
    }
}

/// Fixed affine map from the network output to target units: `ŷ = mean + std·out`.
///
/// Training minimizes squared error measured in units of `std`, so the step
/// size does not depend on the scale of the targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl Default for TargetScale {
    fn default() -> Self {
        TargetScale { mean: 0.0, std: 1.0 }
    }
}

impl TargetScale {
    /// Mean and population standard deviation of `targets`.
    pub fn fit(targets: &[f64]) -> Result<Self> {
        if targets.is_empty() {
            return Err(contract("cannot fit a target scale to no targets"));
        }
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let std = (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(std > 0.0 && std.is_finite()) {
            return Err(crate::error::QnnError::ZeroVariance { column: "target".into() });
        }
        Ok(TargetScale { mean, std })
    }

    pub(crate) fn to_target(self, out: f64) -> f64 {
        self.mean + self.std * out
    }

    pub(crate) fn to_output(self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }
}

/// Fixed per-feature affine map applied before the input layer, sending the
/// fitted range of each feature onto `[-1, 1]`. Empty means identity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputScale {
    pub center: Vec<f64>,
    pub half_range: Vec<f64>,
}

impl InputScale {
    /// Midpoint and half-width of every column; constant columns are only centered.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 {
            return Err(contract("cannot fit an input scale to no features"));
        }
        let (mut center, mut half_range) = (Vec::with_capacity(width), Vec::with_capacity(width));
        for j in 0..width {
            let (lo, hi) =
                rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(crate::error::QnnError::NonFinite(format!("feature {j} range")));
            }
            center.push(0.5 * (lo + hi));
            half_range.push(if hi > lo { 0.5 * (hi - lo) } else { 1.0 });
        }
        Ok(InputScale { center, half_range })
    }

    pub fn is_identity(&self) -> bool {
        self.center.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.is_identity() {
            return Ok(x.to_vec());
        }
        if x.len() != self.center.len() {
            return Err(contract(format!("input scale covers {} features, row has {}", self.center.len(), x.len())));
        }
        Ok(x.iter().zip(&self.center).zip(&self.half_range).map(|((v, c), h)| (v - c) / h).collect())
    }
}

/// `ŷ = clayer_out(middle(clayer_in(x)))` with a single output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridRegressor {
    pub variant: ModelVariant,
    pub clayer_in: DenseLayer,
    pub middle: MiddleLayer,
    pub clayer_out: DenseLayer,
    #[serde(default)]
    pub input_scale: InputScale,
    #[serde(default)]
    pub target_scale: TargetScale,
}

pub(crate) struct ForwardTrace {
    pub x: Vec<f64>,
    pub z_in: Vec<f64>,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub z_out: Vec<f64>,
}

impl HybridRegressor {
    pub fn new(
        variant: ModelVariant,
        clayer_in: DenseLayer,
        middle: MiddleLayer,
        clayer_out: DenseLayer,
    ) -> Result<Self> {
        if clayer_in.n_out() != middle.width() {
            return Err(contract(format!(
                "input layer width {} does not match middle layer width {}",
                clayer_in.n_out(),
                middle.width()
            )));
        }
        if middle.n_outputs() != clayer_out.n_in() {
            return Err(contract(format!(
                "middle layer emits {} values but output layer takes {}",
                middle.n_outputs(),
                clayer_out.n_in()
            )));
        }
        if clayer_out.n_out() != 1 {
            return Err(contract("output layer must produce a single value"));
        }
        Ok(HybridRegressor {
            variant,
            clayer_in,
            middle,
            clayer_out,
            input_scale: InputScale::default(),
            target_scale: TargetScale::default(),
        })
    }

    /// `n_features → n_wires` dense, quantum layer, `n_wires → 1` dense.
    pub fn hybrid(n_features: usize, config: QuantumLayerConfig, seed: u64) -> Result<Self> {
        let mut rng = draw_rng(seed, 0);
        let n = config.n_wires;
        let clayer_in = DenseLayer::init(n_features, n, Activation::Linear, &mut rng);
        let q = QuantumLayer::init(config, &mut rng)?;
        let clayer_out = DenseLayer::init(n, 1, Activation::Linear, &mut rng);
        Self::new(ModelVariant::Hybrid, clayer_in, MiddleLayer::Quantum(q), clayer_out)
    }

    /// The hybrid shape with the quantum layer replaced by a linear dense layer of the same width.
    pub fn classical(n_features: usize, width: usize, seed: u64) -> Result<Self> {
        if n_features == 0 || width == 0 {
            return Err(contract("classical model needs nonzero feature count and width"));
        }
        let mut rng = draw_rng(seed, 0);
        let clayer_in = DenseLayer::init(n_features, width, Activation::Linear, &mut rng);
        let middle = DenseLayer::init(width, width, Activation::Linear, &mut rng);
        let clayer_out = DenseLayer::init(width, 1, Activation::Linear, &mut rng);
        Self::new(ModelVariant::ClassicalOnly, clayer_in, MiddleLayer::Dense(middle), clayer_out)
    }

    pub fn photonic(n_features: usize, config: PhotonicLayerConfig, seed: u64) -> Result<Self> {
        if n_features == 0 || config.n_modes == 0 {
            return Err(contract("photonic model needs nonzero feature count and mode count"));
        }
        let mut rng = draw_rng(seed, 0);
        let m = config.n_modes;
        let clayer_in = DenseLayer::init(n_features, m, Activation::Linear, &mut rng);
        let p = PhotonicLayer::init(config, &mut rng)?;
        let clayer_out = DenseLayer::init(m, 1, Activation::Linear, &mut rng);
        Self::new(ModelVariant::Photonic, clayer_in, MiddleLayer::Photonic(p), clayer_out)
    }

    pub fn n_features(&self) -> usize {
        self.clayer_in.n_in()
    }

    pub fn n_params(&self) -> usize {
        self.clayer_in.n_params() + self.middle.n_params() + self.clayer_out.n_params()
    }

    /// Every trainable value: input layer, middle layer, output layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        self.clayer_in.write_params(&mut out);
        self.middle.write_params(&mut out);
        self.clayer_out.write_params(&mut out);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(contract(format!("model has {} parameters, got {}", self.n_params(), params.len())));
        }
        let mut src = params;
        self.clayer_in.read_params(&mut src);
        self.middle.read_params(&mut src);
        self.clayer_out.read_params(&mut src);
        Ok(())
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.n_features() {
            return Err(contract(format!("model takes {} features, got {}", self.n_features(), x.len())));
        }
        let x = self.input_scale.apply(x)?;
        let z_in = self.clayer_in.preactivation(&x)?;
        let h = self.clayer_in.activate(&z_in);
        let m = self.middle.forward(&h)?;
        let z_out = self.clayer_out.preactivation(&m)?;
        Ok(ForwardTrace { x, z_in, h, m, z_out })
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let t = self.trace(x)?;
        Ok(self.target_scale.to_target(self.clayer_out.activate(&t.z_out)[0]))
    }

    /// Forward pass with the quantum layer read out from `shots` samples.
    ///
    /// Other middle layers have no sampling model and are evaluated exactly.
    pub fn forward_sampled(&self, x: &[f64], shots: usize, seed: u64) -> Result<f64> {
        let h = self.clayer_in.forward(&self.input_scale.apply(x)?)?;
        let m = match &self.middle {
            MiddleLayer::Quantum(q) => q.forward_sampled(&h, shots, seed)?,
            other => other.forward(&h)?,
        };
        Ok(self.target_scale.to_target(self.clayer_out.forward(&m)?[0]))
    }

    /// Parameter gradient, in [`Self::params`] order, for upstream `∂L/∂out`.
    pub(crate) fn backward(&self, t: &ForwardTrace, grad_y: f64) -> Result<Vec<f64>> {
        let (g_out, g_m) = self.clayer_out.backward(&t.m, &t.z_out, &[grad_y]);
        let (g_mid, g_h) = self.middle.backward(&t.h, &g_m)?;
        let (g_in, _) = self.clayer_in.backward(&t.x, &t.z_in, &g_h);
        let mut g = g_in;
        g.extend(g_mid);
        g.extend(g_out);
        Ok(g)
    }
}
