//! Exact statevector simulation.
//!
//! Wire 0 is the most significant bit of the basis-state index, so the ket
//! `|q0 q1 … q(n-1)⟩` lives at index `q0·2^(n-1) + … + q(n-1)`. Gates are applied
//! in place by strided index arithmetic; no `2^n × 2^n` matrix is ever formed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{GateInstruction, GateKind};
use crate::error::{contract, QnnError, Result};

pub const DEFAULT_MAX_QUBITS: usize = 14;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` wires, bounded by [`DEFAULT_MAX_QUBITS`].
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        Self::init_zero_with_limit(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn init_zero_with_limit(n_qubits: usize, max_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits, max_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps a raw amplitude vector. The length must be a power of two and the
    /// vector must be normalized within `1e-10`.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(contract(format!("amplitude vector length {len} is not a power of two ≥ 2")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits, DEFAULT_MAX_QUBITS)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(contract(format!("amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.n_qubits {
            return Err(contract(format!("wire {wire} out of range for {} qubits", self.n_qubits)));
        }
        Ok(())
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    /// Applies one gate, resolving symbolic angles from `slots` and `inputs`.
    pub fn apply_gate(&mut self, gate: &GateInstruction, slots: &[f64], inputs: &[f64]) -> Result<()> {
        let angles = gate.resolve_params(slots, inputs)?;
        self.apply_resolved(gate.kind, &gate.wires, &angles)
    }

    pub(crate) fn apply_resolved(&mut self, kind: GateKind, wires: &[usize], angles: &[f64]) -> Result<()> {
        if wires.len() != kind.n_wires() || angles.len() != kind.arity() {
            return Err(contract(format!("malformed {kind:?} instruction")));
        }
        for &w in wires {
            self.check_wire(w)?;
        }
        match kind {
            GateKind::RX => self.apply_single(wires[0], &rx(angles[0])),
            GateKind::RY => self.apply_single(wires[0], &ry(angles[0])),
            GateKind::RZ => self.apply_single(wires[0], &rz(angles[0])),
            GateKind::Rot => self.apply_single(wires[0], &rot(angles[0], angles[1], angles[2])),
            GateKind::H => self.apply_single(wires[0], &hadamard()),
            GateKind::CNOT => self.apply_cnot(wires[0], wires[1])?,
            GateKind::CZ => self.apply_cz(wires[0], wires[1])?,
        }
        Ok(())
    }

    fn apply_single(&mut self, wire: usize, m: &Mat2) {
        let mask = self.mask(wire);
        let dim = self.amps.len();
        // Enumerate indices with the target bit clear: blocks of `mask` entries
        // separated by strides of `2·mask`.
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let j = i | mask;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
            base += mask << 1;
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(contract("CNOT control equals target"));
        }
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(contract("CZ wires must differ"));
        }
        let both = self.mask(a) | self.mask(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & both == both {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// `⟨ψ|Z_wire|ψ⟩`.
    pub fn expectation_z(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        let mask = self.mask(wire);
        let (p0, p1) = self.amps.iter().enumerate().fold((0.0, 0.0), |(p0, p1), (i, a)| {
            if i & mask == 0 {
                (p0 + a.norm_sqr(), p1)
            } else {
                (p0, p1 + a.norm_sqr())
            }
        });
        Ok(p0 - p1)
    }

    /// Mean of `shots` seeded ±1 Z-basis outcomes on `wire`.
    pub fn sample_expectation_z(&self, wire: usize, shots: usize, seed: u64) -> Result<f64> {
        if shots == 0 {
            return Err(contract("shots must be at least 1"));
        }
        let z = self.expectation_z(wire)?;
        let p_plus = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plus = (0..shots).filter(|_| rng.gen::<f64>() < p_plus).count();
        Ok((2 * plus) as f64 / shots as f64 - 1.0)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(contract(format!("dimension mismatch: {} vs {} qubits", self.n_qubits, other.n_qubits)));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Purity `Tr(ρ²)` of the reduced density matrix of one wire.
    pub fn single_qubit_purity(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        let mask = self.mask(wire);
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        let mut coh = ZERO;
        for i in (0..self.amps.len()).filter(|i| i & mask == 0) {
            let a = self.amps[i];
            let b = self.amps[i | mask];
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
            coh += a * b.conj();
        }
        Ok(p0 * p0 + p1 * p1 + 2.0 * coh.norm_sqr())
    }
}

/// `|⟨a|b⟩|²`, symmetric in its arguments.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(contract(format!("dimension mismatch: {} vs {} qubits", a.n_qubits, b.n_qubits)));
    }
    // Real and imaginary parts are accumulated so that swapping the arguments
    // only flips the sign of the imaginary sum.
    let (re, im) = a
        .amps
        .iter()
        .zip(&b.amps)
        .fold((0.0, 0.0), |(re, im), (x, y)| (re + (x.re * y.re + x.im * y.im), im + (x.re * y.im - x.im * y.re)));
    Ok(re * re + im * im)
}

fn check_qubits(n_qubits: usize, max_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > max_qubits {
        return Err(QnnError::ResourceLimit {
            what: "statevector qubit count".into(),
            required: n_qubits as u128,
            limit: max_qubits as u128,
        });
    }
    Ok(())
}

fn rx(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    [[Complex64::new(c, 0.0), mis], [mis, Complex64::new(c, 0.0)]]
}

fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
}

fn rz(theta: f64) -> Mat2 {
    [[Complex64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, theta / 2.0)]]
}

fn hadamard() -> Mat2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rot(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    matmul(&rz(gamma), &matmul(&ry(beta), &rz(alpha)))
}
