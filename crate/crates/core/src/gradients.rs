//! Derivatives of quantum-layer outputs.
//!
//! Two independent routes are provided: finite differences (forward or
//! central) on any scalar function, and the parameter-shift rule on circuit
//! expectations. The shift rule is exact for rotation gates whose generator has
//! eigenvalues ±1/2, which covers every parameterized gate in [`GateKind`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitProgram, GateKind, ObservableSpec, Param, Shift};
use crate::error::{contract, QnnError, Result};

pub use crate::model::hybrid_loss_gradient;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffScheme {
    Forward,
    #[default]
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffConfig {
    pub epsilon: f64,
    pub scheme: DiffScheme,
}

impl Default for FiniteDiffConfig {
    fn default() -> Self {
        FiniteDiffConfig { epsilon: 1e-6, scheme: DiffScheme::Central }
    }
}

impl FiniteDiffConfig {
    pub fn new(epsilon: f64, scheme: DiffScheme) -> Result<Self> {
        let cfg = FiniteDiffConfig { epsilon, scheme };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(contract(format!("finite-difference epsilon {} not in (0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

/// Finite-difference gradient of a scalar function, one coordinate at a time.
pub fn finite_diff_gradient<F>(f: F, theta: &[f64], cfg: &FiniteDiffConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let eps = cfg.epsilon;
    let eval = |p: &[f64], i: usize| {
        let v = f(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QnnError::NonFinite(format!("function value {v} while differentiating coordinate {i}")))
        }
    };
    let base = match cfg.scheme {
        DiffScheme::Forward => Some(eval(theta, 0)?),
        DiffScheme::Central => None,
    };
    let mut p = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = eval(&p, i)?;
        let g = match base {
            Some(f0) => (plus - f0) / eps,
            None => {
                p[i] = orig - eps;
                let minus = eval(&p, i)?;
                (plus - minus) / (2.0 * eps)
            }
        };
        p[i] = orig;
        grad.push(g);
    }
    Ok(grad)
}

/// `∂⟨Z_j⟩/∂θ_i` and `∂⟨Z_j⟩/∂x_k`, one row per measured wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumJacobian {
    pub wrt_params: Vec<Vec<f64>>,
    pub wrt_inputs: Vec<Vec<f64>>,
}

impl QuantumJacobian {
    fn zeros(n_outputs: usize, n_params: usize, n_inputs: usize) -> Self {
        QuantumJacobian {
            wrt_params: vec![vec![0.0; n_params]; n_outputs],
            wrt_inputs: vec![vec![0.0; n_inputs]; n_outputs],
        }
    }

    /// Vector-Jacobian products `(Jθᵀ·v, Jxᵀ·v)`.
    pub fn transpose_mul(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_params = self.wrt_params.first().map_or(0, Vec::len);
        let n_inputs = self.wrt_inputs.first().map_or(0, Vec::len);
        let mut gp = vec![0.0; n_params];
        let mut gx = vec![0.0; n_inputs];
        for (j, &vj) in v.iter().enumerate() {
            for (g, d) in gp.iter_mut().zip(&self.wrt_params[j]) {
                *g += vj * d;
            }
            for (g, d) in gx.iter_mut().zip(&self.wrt_inputs[j]) {
                *g += vj * d;
            }
        }
        (gp, gx)
    }
}

fn check_observables(circuit: &CircuitProgram, observables: &ObservableSpec) -> Result<()> {
    if let Some(&w) = observables.wires.iter().find(|&&w| w >= circuit.n_qubits()) {
        return Err(contract(format!("observable wire {w} outside a {}-qubit circuit", circuit.n_qubits())));
    }
    Ok(())
}

/// Per-wire `⟨Z⟩` of the circuit output.
pub fn expectations(
    circuit: &CircuitProgram,
    theta: &[f64],
    x: &[f64],
    observables: &ObservableSpec,
) -> Result<Vec<f64>> {
    check_observables(circuit, observables)?;
    let state = circuit.run(theta, x)?;
    observables.wires.iter().map(|&w| state.expectation_z(w)).collect()
}

fn shifted_expectations(
    circuit: &CircuitProgram,
    theta: &[f64],
    x: &[f64],
    observables: &ObservableSpec,
    shift: Shift,
) -> Result<Vec<f64>> {
    let state = circuit.run_shifted(theta, x, Some(shift))?;
    observables.wires.iter().map(|&w| state.expectation_z(w)).collect()
}

/// Exact Jacobian by the two-term parameter-shift rule.
///
/// A slot or input referenced by several gates receives the sum of the
/// per-occurrence shift terms (product rule).
pub fn param_shift_jacobian(
    circuit: &CircuitProgram,
    theta: &[f64],
    x: &[f64],
    observables: &ObservableSpec,
) -> Result<QuantumJacobian> {
    check_observables(circuit, observables)?;
    let occurrences = circuit.occurrences();
    for (occ, _) in &occurrences {
        let kind = circuit.instructions()[occ.instruction].kind;
        if !matches!(kind, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::Rot) {
            return Err(contract(format!("parameter shift does not support {kind:?}")));
        }
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let terms: Vec<Vec<f64>> = occurrences
        .par_iter()
        .map(|&(at, _)| {
            let plus = shifted_expectations(circuit, theta, x, observables, Shift { at, delta: half_pi })?;
            let minus = shifted_expectations(circuit, theta, x, observables, Shift { at, delta: -half_pi })?;
            Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect())
        })
        .collect::<Result<_>>()?;

    let mut jac = QuantumJacobian::zeros(observables.len(), circuit.n_params(), circuit.n_inputs());
    for ((_, param), term) in occurrences.iter().zip(&terms) {
        for (j, &t) in term.iter().enumerate() {
            match *param {
                Param::Slot(i) => jac.wrt_params[j][i] += t,
                Param::Input(k) => jac.wrt_inputs[j][k] += t,
                Param::Fixed(_) => unreachable!("occurrences are symbolic"),
            }
        }
    }
    Ok(jac)
}

/// Jacobian by finite differences on the bound slot and input vectors.
pub fn finite_diff_jacobian(
    circuit: &CircuitProgram,
    theta: &[f64],
    x: &[f64],
    observables: &ObservableSpec,
    cfg: &FiniteDiffConfig,
) -> Result<QuantumJacobian> {
    cfg.validate()?;
    check_observables(circuit, observables)?;
    let n_params = theta.len();
    let eps = cfg.epsilon;
    let base = match cfg.scheme {
        DiffScheme::Forward => Some(expectations(circuit, theta, x, observables)?),
        DiffScheme::Central => None,
    };
    let eval = |coord: usize, delta: f64| -> Result<Vec<f64>> {
        let mut t = theta.to_vec();
        let mut xx = x.to_vec();
        if coord < n_params {
            t[coord] += delta;
        } else {
            xx[coord - n_params] += delta;
        }
        expectations(circuit, &t, &xx, observables)
    };
    let columns: Vec<Vec<f64>> = (0..n_params + x.len())
        .into_par_iter()
        .map(|coord| {
            let plus = eval(coord, eps)?;
            Ok(match &base {
                Some(f0) => plus.iter().zip(f0).map(|(p, b)| (p - b) / eps).collect(),
                None => {
                    let minus = eval(coord, -eps)?;
                    plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut jac = QuantumJacobian::zeros(observables.len(), n_params, x.len());
    for (coord, col) in columns.iter().enumerate() {
        for (j, &d) in col.iter().enumerate() {
            if coord < n_params {
                jac.wrt_params[j][coord] = d;
            } else {
                jac.wrt_inputs[j][coord - n_params] = d;
            }
        }
    }
    Ok(jac)
}
