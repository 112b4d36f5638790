//! Strongly-entangling layers: a `Rot` on every wire followed by a ring of
//! two-qubit entanglers whose range cycles from layer to layer.

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitProgram, GateInstruction, Param};
use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entangler {
    #[default]
    CNOT,
    CZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_wires: usize,
    pub n_layers: usize,
    pub entangler: Entangler,
}

impl AnsatzSpec {
    pub fn new(n_wires: usize, n_layers: usize) -> Self {
        AnsatzSpec { n_wires, n_layers, entangler: Entangler::CNOT }
    }
}

/// Number of trainable angles: `3 · layers · wires`.
pub fn param_count(spec: &AnsatzSpec) -> usize {
    3 * spec.n_layers * spec.n_wires
}

/// Slot index of angle `k` (0 = α, 1 = β, 2 = γ) of the `Rot` on `wire` in `layer`.
pub fn slot_index(spec: &AnsatzSpec, layer: usize, wire: usize, k: usize) -> usize {
    (layer * spec.n_wires + wire) * 3 + k
}

/// Entangler range for a 0-indexed layer.
pub fn layer_range(layer: usize, n_wires: usize) -> usize {
    layer % (n_wires - 1) + 1
}

pub fn strongly_entangling_layers(spec: &AnsatzSpec) -> Result<CircuitProgram> {
    if spec.n_wires == 0 || spec.n_layers == 0 {
        return Err(contract(format!(
            "ansatz needs at least one wire and one layer, got {} wires and {} layers",
            spec.n_wires, spec.n_layers
        )));
    }
    let n = spec.n_wires;
    rotation_layers(n, spec.n_layers, |c, layer| {
        if n < 2 {
            return Ok(());
        }
        let r = layer_range(layer, n);
        for i in 0..n {
            let target = (i + r) % n;
            let gate = match spec.entangler {
                Entangler::CNOT => GateInstruction::cnot(i, target),
                Entangler::CZ => GateInstruction::cz(i, target),
            };
            c.push(gate)?;
        }
        Ok(())
    })
}

/// The same `Rot` layers with no entanglers at all: every output is a product state.
pub fn rotations_only(n_wires: usize, n_layers: usize) -> Result<CircuitProgram> {
    if n_wires == 0 || n_layers == 0 {
        return Err(contract("rotation layers need at least one wire and one layer"));
    }
    rotation_layers(n_wires, n_layers, |_, _| Ok(()))
}

fn rotation_layers(
    n_wires: usize,
    n_layers: usize,
    mut after_layer: impl FnMut(&mut CircuitProgram, usize) -> Result<()>,
) -> Result<CircuitProgram> {
    let mut c = CircuitProgram::new(n_wires);
    for layer in 0..n_layers {
        for wire in 0..n_wires {
            let base = (layer * n_wires + wire) * 3;
            c.push(GateInstruction::rot(wire, Param::Slot(base), Param::Slot(base + 1), Param::Slot(base + 2)))?;
        }
        after_layer(&mut c, layer)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::descriptors::meyer_wallach_q;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn entanglers(c: &CircuitProgram) -> Vec<(usize, usize)> {
        c.instructions()
            .iter()
            .filter(|g| matches!(g.kind, GateKind::CNOT | GateKind::CZ))
            .map(|g| (g.wires[0], g.wires[1]))
            .collect()
    }

    #[test]
    fn structure_examples() {
        let c = strongly_entangling_layers(&AnsatzSpec::new(2, 1)).unwrap();
        assert_eq!(c.n_params(), 6);
        assert_eq!(c.instructions().iter().filter(|g| g.kind == GateKind::Rot).count(), 2);
        assert_eq!(entanglers(&c), vec![(0, 1), (1, 0)]);

        let c = strongly_entangling_layers(&AnsatzSpec::new(1, 1)).unwrap();
        assert_eq!(c.n_params(), 3);
        assert_eq!(c.instructions().len(), 1);
        assert!(entanglers(&c).is_empty());

        let c = strongly_entangling_layers(&AnsatzSpec::new(3, 2)).unwrap();
        assert_eq!(c.n_params(), 18);
        assert_eq!(entanglers(&c), vec![(0, 1), (1, 2), (2, 0), (0, 2), (1, 0), (2, 1)]);
    }

    #[test]
    fn cz_entangler() {
        let spec = AnsatzSpec { entangler: Entangler::CZ, ..AnsatzSpec::new(3, 1) };
        let c = strongly_entangling_layers(&spec).unwrap();
        assert!(c.instructions().iter().filter(|g| g.kind == GateKind::CZ).count() == 3);
    }

    #[test]
    fn range_cycles() {
        let ranges: Vec<usize> = (0..5).map(|l| layer_range(l, 3)).collect();
        assert_eq!(ranges, vec![1, 2, 1, 2, 1]);
        assert_eq!(layer_range(3, 5), 4);
    }

    #[test]
    fn param_count_examples() {
        assert_eq!(param_count(&AnsatzSpec::new(9, 1)), 27);
        assert_eq!(param_count(&AnsatzSpec::new(1, 1)), 3);
        assert_eq!(param_count(&AnsatzSpec::new(4, 3)), 36);
        assert_eq!(slot_index(&AnsatzSpec::new(4, 3), 1, 2, 1), 19);
    }

    #[test]
    fn zero_layers_rejected() {
        assert!(strongly_entangling_layers(&AnsatzSpec::new(3, 0)).is_err());
        assert!(strongly_entangling_layers(&AnsatzSpec::new(0, 1)).is_err());
    }

    #[test]
    fn zero_parameters_give_identity() {
        for n in 1..=5 {
            for l in 1..=3 {
                let spec = AnsatzSpec::new(n, l);
                let c = strongly_entangling_layers(&spec).unwrap();
                let s = c.run(&vec![0.0; param_count(&spec)], &[]).unwrap();
                assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
                assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binding_requires_exact_length() {
        let spec = AnsatzSpec::new(3, 2);
        let c = strongly_entangling_layers(&spec).unwrap();
        assert!(c.run(&[0.1; 17], &[]).is_err());
        assert!(c.run(&[0.1; 19], &[]).is_err());
        assert!(c.run(&[0.1; 18], &[]).is_ok());
    }

    #[test]
    fn entanglers_are_live() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=4 {
            let spec = AnsatzSpec::new(n, 1);
            let c = strongly_entangling_layers(&spec).unwrap();
            let entangled = (0..100)
                .filter(|_| {
                    let theta: Vec<f64> =
                        (0..param_count(&spec)).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
                    meyer_wallach_q(&c.run(&theta, &[]).unwrap()) > 1e-9
                })
                .count();
            assert!(entangled >= 95, "n={n}: {entangled}");
        }
    }
}
