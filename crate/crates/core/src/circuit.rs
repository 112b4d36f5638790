//! Gate instructions and parameterized circuit programs.
//!
//! A [`CircuitProgram`] is an ordered list of gates whose angles are either
//! fixed numbers or symbolic references. Two kinds of symbolic reference
//! exist: trainable slots ([`Param::Slot`]) and encoded classical inputs
//! ([`Param::Input`]). Binding a slot vector and an input vector makes the
//! program concrete.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::statevector::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    /// `RZ(γ)·RY(β)·RZ(α)` with parameters `(α, β, γ)`.
    Rot,
    H,
    CNOT,
    CZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::Rot => 3,
            GateKind::H | GateKind::CNOT | GateKind::CZ => 0,
        }
    }

    pub fn n_wires(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::CZ => 2,
            _ => 1,
        }
    }
}

/// An angle: either a concrete value in radians or a symbolic reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Fixed(f64),
    /// Index into the trainable parameter vector.
    Slot(usize),
    /// Index into the encoded input vector.
    Input(usize),
}

impl Param {
    pub fn resolve(self, slots: &[f64], inputs: &[f64]) -> Result<f64> {
        match self {
            Param::Fixed(v) => Ok(v),
            Param::Slot(i) => slots.get(i).copied().ok_or_else(|| contract(format!("unbound parameter slot {i}"))),
            Param::Input(i) => inputs.get(i).copied().ok_or_else(|| contract(format!("unbound input {i}"))),
        }
    }

    pub fn is_symbolic(self) -> bool {
        !matches!(self, Param::Fixed(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateInstruction {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub params: Vec<Param>,
}

impl GateInstruction {
    pub fn new(kind: GateKind, wires: Vec<usize>, params: Vec<Param>) -> Result<Self> {
        if wires.len() != kind.n_wires() {
            return Err(contract(format!("{kind:?} acts on {} wire(s), got {}", kind.n_wires(), wires.len())));
        }
        if params.len() != kind.arity() {
            return Err(contract(format!("{kind:?} takes {} parameter(s), got {}", kind.arity(), params.len())));
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(contract(format!("{kind:?} wires must be distinct, got {wires:?}")));
        }
        Ok(GateInstruction { kind, wires, params })
    }

    pub fn rx(wire: usize, p: Param) -> Self {
        GateInstruction { kind: GateKind::RX, wires: vec![wire], params: vec![p] }
    }

    pub fn ry(wire: usize, p: Param) -> Self {
        GateInstruction { kind: GateKind::RY, wires: vec![wire], params: vec![p] }
    }

    pub fn rz(wire: usize, p: Param) -> Self {
        GateInstruction { kind: GateKind::RZ, wires: vec![wire], params: vec![p] }
    }

    pub fn rot(wire: usize, alpha: Param, beta: Param, gamma: Param) -> Self {
        GateInstruction { kind: GateKind::Rot, wires: vec![wire], params: vec![alpha, beta, gamma] }
    }

    pub fn h(wire: usize) -> Self {
        GateInstruction { kind: GateKind::H, wires: vec![wire], params: vec![] }
    }

    /// Panics if `control == target`; use [`GateInstruction::new`] for checked construction.
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control and target must differ");
        GateInstruction { kind: GateKind::CNOT, wires: vec![control, target], params: vec![] }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "CZ wires must differ");
        GateInstruction { kind: GateKind::CZ, wires: vec![a, b], params: vec![] }
    }

    pub fn resolve_params(&self, slots: &[f64], inputs: &[f64]) -> Result<Vec<f64>> {
        self.params.iter().map(|p| p.resolve(slots, inputs)).collect()
    }

    /// The inverse gate: negated angles in reverse order for rotations,
    /// the gate itself for H, CNOT and CZ.
    pub fn inverse(&self) -> Result<Self> {
        let neg = |p: &Param| match p {
            Param::Fixed(v) => Ok(Param::Fixed(-v)),
            _ => Err(contract("cannot invert a gate with symbolic parameters")),
        };
        let params = match self.kind {
            GateKind::Rot => {
                vec![neg(&self.params[2])?, neg(&self.params[1])?, neg(&self.params[0])?]
            }
            _ => self.params.iter().map(neg).collect::<Result<_>>()?,
        };
        Ok(GateInstruction { kind: self.kind, wires: self.wires.clone(), params })
    }
}

/// Selects which wires are measured in the Pauli-Z basis, one output per wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub wires: Vec<usize>,
}

impl ObservableSpec {
    pub fn new(wires: Vec<usize>, n_qubits: usize) -> Result<Self> {
        for (i, &w) in wires.iter().enumerate() {
            if w >= n_qubits {
                return Err(contract(format!("observable wire {w} out of range for {n_qubits} qubits")));
            }
            if wires[..i].contains(&w) {
                return Err(contract(format!("observable wire {w} listed twice")));
            }
        }
        Ok(ObservableSpec { wires })
    }

    pub fn all(n_qubits: usize) -> Self {
        ObservableSpec { wires: (0..n_qubits).collect() }
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }
}

/// Identifies one symbolic angle inside a program: instruction index and
/// parameter position within that instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub instruction: usize,
    pub position: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Shift {
    pub at: Occurrence,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitProgram {
    n_qubits: usize,
    instructions: Vec<GateInstruction>,
    n_params: usize,
    n_inputs: usize,
}

impl CircuitProgram {
    pub fn new(n_qubits: usize) -> Self {
        CircuitProgram { n_qubits, instructions: Vec::new(), n_params: 0, n_inputs: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn instructions(&self) -> &[GateInstruction] {
        &self.instructions
    }

    pub fn push(&mut self, gate: GateInstruction) -> Result<()> {
        let gate = GateInstruction::new(gate.kind, gate.wires, gate.params)?;
        if let Some(&w) = gate.wires.iter().find(|&&w| w >= self.n_qubits) {
            return Err(contract(format!("wire {w} out of range for a {}-qubit circuit", self.n_qubits)));
        }
        for p in &gate.params {
            match *p {
                Param::Slot(i) => self.n_params = self.n_params.max(i + 1),
                Param::Input(i) => self.n_inputs = self.n_inputs.max(i + 1),
                Param::Fixed(v) if !v.is_finite() => {
                    return Err(contract(format!("non-finite angle {v} in {:?}", gate.kind)))
                }
                Param::Fixed(_) => {}
            }
        }
        self.instructions.push(gate);
        Ok(())
    }

    /// Appends all instructions of `other`. Slot and input indices are kept as-is,
    /// so fragments built against the same index space compose directly.
    pub fn append(&mut self, other: &CircuitProgram) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(contract(format!(
                "cannot append a {}-qubit fragment to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        for g in &other.instructions {
            self.push(g.clone())?;
        }
        self.n_params = self.n_params.max(other.n_params);
        self.n_inputs = self.n_inputs.max(other.n_inputs);
        Ok(())
    }

    /// Every symbolic angle in program order.
    pub fn occurrences(&self) -> Vec<(Occurrence, Param)> {
        self.instructions
            .iter()
            .enumerate()
            .flat_map(|(gi, g)| {
                g.params
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.is_symbolic())
                    .map(move |(pi, p)| (Occurrence { instruction: gi, position: pi }, *p))
            })
            .collect()
    }

    fn check_binding(&self, slots: &[f64], inputs: &[f64]) -> Result<()> {
        if slots.len() != self.n_params {
            return Err(contract(format!("circuit has {} parameter slots, got {} values", self.n_params, slots.len())));
        }
        if inputs.len() != self.n_inputs {
            return Err(contract(format!("circuit has {} inputs, got {} values", self.n_inputs, inputs.len())));
        }
        Ok(())
    }

    /// Replaces every symbolic reference with its bound value.
    pub fn bind(&self, slots: &[f64], inputs: &[f64]) -> Result<CircuitProgram> {
        self.check_binding(slots, inputs)?;
        let instructions = self
            .instructions
            .iter()
            .map(|g| {
                Ok(GateInstruction {
                    kind: g.kind,
                    wires: g.wires.clone(),
                    params: g.resolve_params(slots, inputs)?.into_iter().map(Param::Fixed).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(CircuitProgram { n_qubits: self.n_qubits, instructions, n_params: 0, n_inputs: 0 })
    }

    /// Evolves `|0…0⟩` through the program.
    pub fn run(&self, slots: &[f64], inputs: &[f64]) -> Result<StateVector> {
        self.run_shifted(slots, inputs, None)
    }

    /// Applies the program to an existing state.
    pub fn apply_to(&self, state: &mut StateVector, slots: &[f64], inputs: &[f64]) -> Result<()> {
        self.check_binding(slots, inputs)?;
        if state.n_qubits() != self.n_qubits {
            return Err(contract(format!(
                "{}-qubit circuit applied to a {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        for g in &self.instructions {
            state.apply_gate(g, slots, inputs)?;
        }
        Ok(())
    }

    pub(crate) fn run_shifted(&self, slots: &[f64], inputs: &[f64], shift: Option<Shift>) -> Result<StateVector> {
        self.check_binding(slots, inputs)?;
        let mut state = StateVector::init_zero(self.n_qubits)?;
        for (gi, g) in self.instructions.iter().enumerate() {
            let mut angles = g.resolve_params(slots, inputs)?;
            if let Some(s) = shift.filter(|s| s.at.instruction == gi) {
                angles[s.at.position] += s.delta;
            }
            state.apply_resolved(g.kind, &g.wires, &angles)?;
        }
        Ok(state)
    }
}
