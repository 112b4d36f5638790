use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{param_count, strongly_entangling_layers, AnsatzSpec, Entangler};
use crate::circuit::{CircuitProgram, ObservableSpec};
use crate::encodings::{angle_encoding_template, EncodingSpec, RotationAxis};
use crate::error::{contract, Result};
use crate::fock::{cv_layer, displacement_embedding, quadratures, CVLayerParams, FockConfig};
use crate::gradients::{expectations, finite_diff_jacobian, param_shift_jacobian, FiniteDiffConfig, QuantumJacobian};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum GradientMethod {
    #[default]
    ParameterShift,
    FiniteDifference(FiniteDiffConfig),
}

/// Angle encoding, strongly-entangling ansatz and per-wire `⟨Z⟩` on every wire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumLayerConfig {
    pub n_wires: usize,
    /// Zero means the encoded state is measured directly.
    pub n_layers: usize,
    pub entangler: Entangler,
    pub rotation_axis: RotationAxis,
    pub gradient: GradientMethod,
}

impl QuantumLayerConfig {
    pub fn new(n_wires: usize, n_layers: usize) -> Self {
        QuantumLayerConfig {
            n_wires,
            n_layers,
            entangler: Entangler::CNOT,
            rotation_axis: RotationAxis::Y,
            gradient: GradientMethod::ParameterShift,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumLayer {
    pub config: QuantumLayerConfig,
    pub circuit: CircuitProgram,
    pub observables: ObservableSpec,
    pub theta: Vec<f64>,
}

impl QuantumLayer {
    pub fn new(config: QuantumLayerConfig, theta: Vec<f64>) -> Result<Self> {
        let n = config.n_wires;
        let mut circuit = angle_encoding_template(n, &EncodingSpec::angle(n, config.rotation_axis))?;
        if config.n_layers > 0 {
            let spec = AnsatzSpec { n_wires: n, n_layers: config.n_layers, entangler: config.entangler };
            circuit.append(&strongly_entangling_layers(&spec)?)?;
        }
        if theta.len() != circuit.n_params() {
            return Err(contract(format!("quantum layer takes {} angles, got {}", circuit.n_params(), theta.len())));
        }
        Ok(QuantumLayer { config, circuit, observables: ObservableSpec::all(n), theta })
    }

    /// Angles uniform on `[0, 2π)`.
    pub fn init<R: Rng>(config: QuantumLayerConfig, rng: &mut R) -> Result<Self> {
        let spec = AnsatzSpec { n_wires: config.n_wires, n_layers: config.n_layers, entangler: config.entangler };
        let theta = (0..param_count(&spec)).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        Self::new(config, theta)
    }

    pub fn n_wires(&self) -> usize {
        self.config.n_wires
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        expectations(&self.circuit, &self.theta, x, &self.observables)
    }

    /// Per-wire `⟨Z⟩` estimated from `shots` measurement samples.
    pub fn forward_sampled(&self, x: &[f64], shots: usize, seed: u64) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let state = self.circuit.run(&self.theta, x)?;
        self.observables
            .wires
            .iter()
            .map(|&w| state.sample_expectation_z(w, shots, seed.wrapping_add(w as u64)))
            .collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<QuantumJacobian> {
        self.check_input(x)?;
        match self.config.gradient {
            GradientMethod::ParameterShift => param_shift_jacobian(&self.circuit, &self.theta, x, &self.observables),
            GradientMethod::FiniteDifference(cfg) => {
                finite_diff_jacobian(&self.circuit, &self.theta, x, &self.observables, &cfg)
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_wires() {
            return Err(contract(format!("quantum layer expects {} inputs, got {}", self.n_wires(), x.len())));
        }
        Ok(())
    }
}

/// Soft limits keeping displacements and squeezing small enough for the cutoff.
///
/// Each bounded amplitude is `b·tanh(p/b)`: the identity near zero, never above `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonicBounds {
    pub embedding: f64,
    pub displacement: f64,
    pub squeeze: f64,
}

impl Default for PhotonicBounds {
    fn default() -> Self {
        PhotonicBounds { embedding: 0.3, displacement: 0.2, squeeze: 0.1 }
    }
}

fn soft_bound(p: f64, b: f64) -> f64 {
    b * (p / b).tanh()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonicLayerConfig {
    pub n_modes: usize,
    pub fock: FockConfig,
    pub bounds: PhotonicBounds,
    pub finite_diff: FiniteDiffConfig,
}

impl PhotonicLayerConfig {
    pub fn new(n_modes: usize) -> Self {
        PhotonicLayerConfig {
            n_modes,
            fock: FockConfig::default(),
            bounds: PhotonicBounds::default(),
            finite_diff: FiniteDiffConfig::default(),
        }
    }
}

/// Displacement embedding, one CV layer, and `⟨x̂⟩` on every mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonicLayer {
    pub config: PhotonicLayerConfig,
    /// Raw parameters in [`CVLayerParams::to_vec`] order, before bounding.
    pub params: Vec<f64>,
}

impl PhotonicLayer {
    pub fn new(config: PhotonicLayerConfig, params: Vec<f64>) -> Result<Self> {
        // Allocating once up front surfaces budget errors at construction.
        crate::fock::FockState::from_config(config.n_modes, &config.fock)?;
        CVLayerParams::from_vec(config.n_modes, &params)?;
        Ok(PhotonicLayer { config, params })
    }

    /// Angles uniform on `[0, 2π)`; magnitudes and Kerr strengths uniform on `[−0.1, 0.1]`.
    pub fn init<R: Rng>(config: PhotonicLayerConfig, rng: &mut R) -> Result<Self> {
        let m = config.n_modes;
        let mut p = CVLayerParams::zeros(m);
        let mut angle = |v: &mut Vec<f64>| v.iter_mut().for_each(|a| *a = rng.gen_range(0.0..std::f64::consts::TAU));
        angle(&mut p.interferometer1.theta);
        angle(&mut p.interferometer1.phi);
        angle(&mut p.interferometer1.rotations);
        angle(&mut p.interferometer2.theta);
        angle(&mut p.interferometer2.phi);
        angle(&mut p.interferometer2.rotations);
        angle(&mut p.displacement_phi);
        for v in [&mut p.squeeze, &mut p.displacement_r, &mut p.kerr] {
            v.iter_mut().for_each(|a| *a = rng.gen_range(-0.1..=0.1));
        }
        Self::new(config, p.to_vec())
    }

    pub fn n_modes(&self) -> usize {
        self.config.n_modes
    }

    fn evaluate(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let b = self.config.bounds;
        let mut p = CVLayerParams::from_vec(self.n_modes(), params)?;
        p.squeeze.iter_mut().for_each(|r| *r = soft_bound(*r, b.squeeze));
        p.displacement_r.iter_mut().for_each(|r| *r = soft_bound(*r, b.displacement));
        let embedded: Vec<f64> = x.iter().map(|&v| soft_bound(v, b.embedding)).collect();
        let mut state = displacement_embedding(&embedded, self.n_modes(), &self.config.fock)?;
        cv_layer(&mut state, &p)?;
        quadratures(&state)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.evaluate(&self.params, x)
    }

    /// Central finite differences over parameters and inputs.
    pub fn jacobian(&self, x: &[f64]) -> Result<QuantumJacobian> {
        self.check_input(x)?;
        self.config.finite_diff.validate()?;
        let eps = self.config.finite_diff.epsilon;
        let n_p = self.params.len();
        let joint: Vec<f64> = self.params.iter().chain(x).copied().collect();
        let eval = |coord: usize, delta: f64| {
            let mut v = joint.clone();
            v[coord] += delta;
            self.evaluate(&v[..n_p], &v[n_p..])
        };
        let columns: Vec<Vec<f64>> = (0..joint.len())
            .into_par_iter()
            .map(|coord| {
                let plus = eval(coord, eps)?;
                let minus = eval(coord, -eps)?;
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * eps)).collect())
            })
            .collect::<Result<_>>()?;
        let n_out = self.n_modes();
        let mut jac =
            QuantumJacobian { wrt_params: vec![vec![0.0; n_p]; n_out], wrt_inputs: vec![vec![0.0; x.len()]; n_out] };
        for (coord, col) in columns.iter().enumerate() {
            for (j, &d) in col.iter().enumerate() {
                if coord < n_p {
                    jac.wrt_params[j][coord] = d;
                } else {
                    jac.wrt_inputs[j][coord - n_p] = d;
                }
            }
        }
        Ok(jac)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_modes() {
            return Err(contract(format!("photonic layer expects {} inputs, got {}", self.n_modes(), x.len())));
        }
        Ok(())
    }
}
