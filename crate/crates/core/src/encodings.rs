//! Classical-to-quantum feature maps: basis, angle and amplitude encoding.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitProgram, GateInstruction, Param};
use crate::error::{contract, Result};
use crate::statevector::{StateVector, DEFAULT_MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingScheme {
    Basis,
    Angle,
    Amplitude,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    #[default]
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub scheme: EncodingScheme,
    /// Only meaningful for [`EncodingScheme::Angle`].
    pub rotation_axis: RotationAxis,
    pub n_wires: usize,
}

impl EncodingSpec {
    pub fn angle(n_wires: usize, rotation_axis: RotationAxis) -> Self {
        EncodingSpec { scheme: EncodingScheme::Angle, rotation_axis, n_wires }
    }
}

/// Parses a ket label such as `"011"` into bits.
pub fn parse_bitstring(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(contract(format!("invalid bit {other:?} in {s:?}"))),
        })
        .collect()
}

/// Uniform superposition over the distinct input bitstrings.
pub fn basis_encode(bitstrings: &[Vec<bool>]) -> Result<StateVector> {
    let first = bitstrings.first().ok_or_else(|| contract("basis encoding needs at least one bitstring"))?;
    let len = first.len();
    if len == 0 || len > DEFAULT_MAX_QUBITS {
        return Err(contract(format!("bitstring length {len} outside 1..={DEFAULT_MAX_QUBITS}")));
    }
    if let Some(b) = bitstrings.iter().find(|b| b.len() != len) {
        return Err(contract(format!("ragged bitstrings: lengths {len} and {}", b.len())));
    }
    let indices: BTreeSet<usize> =
        bitstrings.iter().map(|bits| bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)).collect();
    let amp = Complex64::new(1.0 / (indices.len() as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << len];
    for i in indices {
        amps[i] = amp;
    }
    StateVector::from_amplitudes(amps)
}

fn check_angle_spec(n_features: usize, spec: &EncodingSpec) -> Result<()> {
    if spec.scheme != EncodingScheme::Angle {
        return Err(contract(format!("angle encoding requested with {:?} spec", spec.scheme)));
    }
    if n_features > spec.n_wires {
        return Err(contract(format!("{n_features} features do not fit on {} wires", spec.n_wires)));
    }
    Ok(())
}

fn push_rotation(c: &mut CircuitProgram, axis: RotationAxis, wire: usize, p: Param) -> Result<()> {
    match axis {
        RotationAxis::X => c.push(GateInstruction::rx(wire, p)),
        RotationAxis::Y => c.push(GateInstruction::ry(wire, p)),
        RotationAxis::Z => {
            c.push(GateInstruction::h(wire))?;
            c.push(GateInstruction::rz(wire, p))
        }
    }
}

/// One rotation per feature with the feature value as the angle (radians).
pub fn angle_encode(x: &[f64], spec: &EncodingSpec) -> Result<CircuitProgram> {
    check_angle_spec(x.len(), spec)?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(contract(format!("feature {i} is not finite ({})", x[i])));
    }
    let mut c = CircuitProgram::new(spec.n_wires);
    for (wire, &v) in x.iter().enumerate() {
        push_rotation(&mut c, spec.rotation_axis, wire, Param::Fixed(v))?;
    }
    Ok(c)
}

/// Same gate layout as [`angle_encode`] but with [`Param::Input`] references,
/// so one program serves every sample.
pub fn angle_encoding_template(n_features: usize, spec: &EncodingSpec) -> Result<CircuitProgram> {
    check_angle_spec(n_features, spec)?;
    let mut c = CircuitProgram::new(spec.n_wires);
    for wire in 0..n_features {
        push_rotation(&mut c, spec.rotation_axis, wire, Param::Input(wire))?;
    }
    Ok(c)
}

/// Normalized features as amplitudes, zero-padded to `2^n_wires`.
pub fn amplitude_encode(x: &[f64], n_wires: usize) -> Result<StateVector> {
    if n_wires == 0 || n_wires > DEFAULT_MAX_QUBITS {
        return Err(contract(format!("amplitude encoding on {n_wires} wires")));
    }
    let dim = 1usize << n_wires;
    if x.len() > dim {
        return Err(contract(format!("{} features exceed 2^{n_wires} amplitudes", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(contract("amplitude encoding of non-finite features"));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(contract("cannot amplitude-encode an all-zero vector"));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (a, &v) in amps.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    StateVector::from_amplitudes(amps)
}
