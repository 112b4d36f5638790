//! Circuit descriptors: expressibility, entangling capability and
//! gradient-variance scans.
//!
//! Every sampling loop derives one ChaCha stream per draw from `(seed, draw)`,
//! so results do not depend on thread scheduling. Reductions run in draw order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{slot_index, strongly_entangling_layers, AnsatzSpec, Entangler};
use crate::circuit::{CircuitProgram, Param, Shift};
use crate::error::{contract, Result};
use crate::statevector::{fidelity, StateVector};

pub const DEFAULT_BINS: usize = 75;
const SMOOTHING: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressibilityConfig {
    pub n_samples: usize,
    pub n_bins: usize,
    pub seed: u64,
}

impl ExpressibilityConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        ExpressibilityConfig { n_samples, n_bins: DEFAULT_BINS, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 100 {
            return Err(contract(format!("expressibility needs at least 100 samples, got {}", self.n_samples)));
        }
        if self.n_bins < 2 {
            return Err(contract(format!("at least 2 histogram bins required, got {}", self.n_bins)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorReport {
    pub expressibility_kl: f64,
    pub entangling_capability: f64,
    pub gradient_variance_by_qubits: BTreeMap<usize, f64>,
}

pub(crate) fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw as u64);
    rng
}

fn uniform_angles(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
}

fn require_slots(circuit: &CircuitProgram) -> Result<()> {
    if circuit.n_params() == 0 {
        return Err(contract("circuit has no parameter slots; its state distribution is degenerate"));
    }
    Ok(())
}

/// Normalized density of Haar-random state fidelities in dimension `n`:
/// `(n−1)(1−F)^(n−2)`.
pub fn haar_fidelity_pdf(f: f64, hilbert_dim: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(contract(format!("fidelity {f} outside [0, 1]")));
    }
    if hilbert_dim < 2 {
        return Err(contract(format!("Hilbert dimension {hilbert_dim} < 2")));
    }
    let n = hilbert_dim as f64;
    Ok((n - 1.0) * (1.0 - f).powi(hilbert_dim as i32 - 2))
}

/// Haar probability mass of each uniform bin on `[0, 1]`, from the CDF
/// `1 − (1−F)^(n−1)`.
pub fn haar_bin_masses(n_bins: usize, hilbert_dim: usize) -> Vec<f64> {
    let tail = |f: f64| (1.0 - f).powi(hilbert_dim as i32 - 1);
    (0..n_bins)
        .map(|b| {
            let lo = b as f64 / n_bins as f64;
            let hi = (b + 1) as f64 / n_bins as f64;
            tail(lo) - tail(hi)
        })
        .collect()
}

/// `S` fidelities between circuit outputs at independent uniform parameter draws.
pub fn sample_fidelities(circuit: &CircuitProgram, cfg: &ExpressibilityConfig) -> Result<Vec<f64>> {
    require_slots(circuit)?;
    let inputs = vec![0.0; circuit.n_inputs()];
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|draw| {
            let mut rng = draw_rng(cfg.seed, draw);
            let theta = uniform_angles(&mut rng, circuit.n_params());
            let phi = uniform_angles(&mut rng, circuit.n_params());
            let a = circuit.run(&theta, &inputs)?;
            let b = circuit.run(&phi, &inputs)?;
            Ok(fidelity(&a, &b)?.clamp(0.0, 1.0))
        })
        .collect()
}

/// KL divergence (nats) between the binned empirical fidelity distribution and
/// the Haar distribution for the given Hilbert dimension.
pub fn fidelity_kl(fidelities: &[f64], hilbert_dim: usize, n_bins: usize) -> Result<f64> {
    if fidelities.is_empty() || n_bins < 2 || hilbert_dim < 2 {
        return Err(contract("fidelity KL needs samples, ≥ 2 bins and dimension ≥ 2"));
    }
    let mut counts = vec![0usize; n_bins];
    for &f in fidelities {
        if !(0.0..=1.0).contains(&f) {
            return Err(contract(format!("fidelity {f} outside [0, 1]")));
        }
        let b = ((f * n_bins as f64) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let total = fidelities.len() as f64 + SMOOTHING * n_bins as f64;
    let haar = haar_bin_masses(n_bins, hilbert_dim);
    let kl = counts
        .iter()
        .zip(&haar)
        .map(|(&c, &q)| {
            let p = (c as f64 + SMOOTHING) / total;
            p * (p / q).ln()
        })
        .sum::<f64>();
    Ok(kl.max(0.0))
}

/// Expressibility as `D_KL(P̂_circuit(F) ‖ P_Haar(F))`; lower is more expressive.
pub fn expressibility(circuit: &CircuitProgram, cfg: &ExpressibilityConfig) -> Result<f64> {
    cfg.validate()?;
    let fids = sample_fidelities(circuit, cfg)?;
    fidelity_kl(&fids, 1 << circuit.n_qubits(), cfg.n_bins)
}

/// Meyer–Wallach entanglement `Q = 2(1 − mean single-qubit purity)`.
pub fn meyer_wallach_q(state: &StateVector) -> f64 {
    let n = state.n_qubits();
    let mean_purity = (0..n).map(|w| state.single_qubit_purity(w).expect("wire in range")).sum::<f64>() / n as f64;
    (2.0 * (1.0 - mean_purity)).clamp(0.0, 1.0)
}

/// Mean Meyer–Wallach `Q` over `n_samples` uniform parameter draws, starting from `|0…0⟩`.
pub fn entangling_capability(circuit: &CircuitProgram, n_samples: usize, seed: u64) -> Result<f64> {
    require_slots(circuit)?;
    if n_samples == 0 {
        return Err(contract("entangling capability needs at least one sample"));
    }
    let inputs = vec![0.0; circuit.n_inputs()];
    let qs: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|draw| {
            let mut rng = draw_rng(seed, draw);
            let theta = uniform_angles(&mut rng, circuit.n_params());
            Ok(meyer_wallach_q(&circuit.run(&theta, &inputs)?))
        })
        .collect::<Result<_>>()?;
    Ok(qs.iter().sum::<f64>() / n_samples as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientScanConfig {
    pub entangler: Entangler,
    /// Layers per qubit: the ansatz on `n` wires gets `n · layers_per_qubit` layers.
    pub layers_per_qubit: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl GradientScanConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        GradientScanConfig { entangler: Entangler::CNOT, layers_per_qubit: 1, n_samples, seed }
    }
}

/// Variance over uniform random parameters of `∂⟨Z_0⟩/∂β`, where `β` is the
/// `RY` angle of the first-layer `Rot` on wire 0, for each qubit count.
pub fn gradient_variance_scan(qubit_range: &[usize], cfg: &GradientScanConfig) -> Result<BTreeMap<usize, f64>> {
    if qubit_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract(format!("qubit range {qubit_range:?} is not strictly ascending")));
    }
    if cfg.n_samples < 100 {
        return Err(contract(format!("gradient scan needs at least 100 samples, got {}", cfg.n_samples)));
    }
    if cfg.layers_per_qubit == 0 {
        return Err(contract("layers_per_qubit must be at least 1"));
    }
    let mut out = BTreeMap::new();
    for &n in qubit_range {
        let spec = AnsatzSpec { n_wires: n, n_layers: n * cfg.layers_per_qubit, entangler: cfg.entangler };
        let circuit = strongly_entangling_layers(&spec)?;
        let slot = slot_index(&spec, 0, 0, 1);
        let (at, _) = circuit
            .occurrences()
            .into_iter()
            .find(|(_, p)| *p == Param::Slot(slot))
            .expect("ansatz references every slot");
        let half_pi = std::f64::consts::FRAC_PI_2;
        let grads: Vec<f64> = (0..cfg.n_samples)
            .into_par_iter()
            .map(|draw| {
                let mut rng = draw_rng(cfg.seed ^ ((n as u64) << 32), draw);
                let theta = uniform_angles(&mut rng, circuit.n_params());
                let plus = circuit.run_shifted(&theta, &[], Some(Shift { at, delta: half_pi }))?;
                let minus = circuit.run_shifted(&theta, &[], Some(Shift { at, delta: -half_pi }))?;
                Ok((plus.expectation_z(0)? - minus.expectation_z(0)?) / 2.0)
            })
            .collect::<Result<_>>()?;
        out.insert(n, variance(&grads));
    }
    Ok(out)
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{param_count, rotations_only};
    use crate::circuit::{GateInstruction, GateKind};
    use num_complex::Complex64;

    fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn state(gates: &[(GateKind, Vec<usize>, Vec<f64>)], n: usize) -> StateVector {
        let mut s = StateVector::init_zero(n).unwrap();
        for (k, w, a) in gates {
            s.apply_resolved(*k, w, a).unwrap();
        }
        s
    }

    fn haar_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
        // Box–Muller complex Gaussian vector, normalized.
        let mut g = || {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(g(), g())).collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(v.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn haar_pdf_examples() {
        for f in [0.0, 0.3, 1.0] {
            assert_eq!(haar_fidelity_pdf(f, 2).unwrap(), 1.0);
        }
        assert_eq!(haar_fidelity_pdf(0.0, 4).unwrap(), 3.0);
        for n in [2, 4, 8, 16] {
            let integral = simpson(|f| haar_fidelity_pdf(f, n).unwrap(), 2000);
            assert!((integral - 1.0).abs() < 1e-9, "N={n}: {integral}");
        }
        assert!(haar_fidelity_pdf(1.5, 4).is_err());
        assert!(haar_fidelity_pdf(-0.1, 4).is_err());
    }

    #[test]
    fn haar_bins_sum_to_one() {
        for n in [2, 4, 16, 1024] {
            let total: f64 = haar_bin_masses(75, n).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rz_only_circuit_has_unit_fidelities() {
        let mut c = CircuitProgram::new(1);
        c.push(GateInstruction::rz(0, Param::Slot(0))).unwrap();
        let cfg = ExpressibilityConfig::new(500, 3);
        let f = sample_fidelities(&c, &cfg).unwrap();
        assert!(f.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let kl = expressibility(&c, &cfg).unwrap();
        // Every sample in the top bin against a Haar mass of 1/75 there.
        let p = (500.0 + SMOOTHING) / (500.0 + 75.0 * SMOOTHING);
        let expected = p * (p * 75.0).ln()
            + 74.0 * (SMOOTHING / (500.0 + 75.0 * SMOOTHING)) * ((SMOOTHING / (500.0 + 75.0 * SMOOTHING)) * 75.0).ln();
        assert!((kl - expected).abs() < 1e-9, "{kl} vs {expected}");
        assert!(kl >= 3.0);
    }

    #[test]
    fn ry_fidelity_mean_is_half() {
        let mut c = CircuitProgram::new(1);
        c.push(GateInstruction::ry(0, Param::Slot(0))).unwrap();
        let f = sample_fidelities(&c, &ExpressibilityConfig::new(5000, 17)).unwrap();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert!((mean - 0.5).abs() < 0.03, "{mean}");
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn haar_samples_give_small_kl() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let dim = 8;
        let fids: Vec<f64> =
            (0..5000).map(|_| fidelity(&haar_state(&mut rng, dim), &haar_state(&mut rng, dim)).unwrap()).collect();
        let kl = fidelity_kl(&fids, dim, DEFAULT_BINS).unwrap();
        assert!(kl < 0.05, "{kl}");
    }

    #[test]
    fn zero_parameter_circuit_rejected() {
        let mut c = CircuitProgram::new(2);
        c.push(GateInstruction::h(0)).unwrap();
        assert!(sample_fidelities(&c, &ExpressibilityConfig::new(100, 0)).is_err());
        assert!(entangling_capability(&c, 10, 0).is_err());
        assert!(expressibility(&c, &ExpressibilityConfig::new(10, 0)).is_err());
    }

    #[test]
    fn expressibility_is_reproducible() {
        let c = strongly_entangling_layers(&AnsatzSpec::new(3, 2)).unwrap();
        let cfg = ExpressibilityConfig::new(800, 9);
        let a = expressibility(&c, &cfg).unwrap();
        assert!(a >= 0.0);
        assert_eq!(a.to_bits(), expressibility(&c, &cfg).unwrap().to_bits());
    }

    #[test]
    fn meyer_wallach_examples() {
        let product = state(&[(GateKind::RY, vec![0], vec![0.7]), (GateKind::RX, vec![2], vec![1.9])], 3);
        assert!(meyer_wallach_q(&product).abs() < 1e-12);
        let bell = state(&[(GateKind::H, vec![0], vec![]), (GateKind::CNOT, vec![0, 1], vec![])], 2);
        assert!((meyer_wallach_q(&bell) - 1.0).abs() < 1e-12);
        let ghz = state(
            &[
                (GateKind::H, vec![0], vec![]),
                (GateKind::CNOT, vec![0, 1], vec![]),
                (GateKind::CNOT, vec![1, 2], vec![]),
                (GateKind::CNOT, vec![2, 3], vec![]),
            ],
            4,
        );
        assert!((meyer_wallach_q(&ghz) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn meyer_wallach_local_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let spec = AnsatzSpec::new(n, 2);
            let c = strongly_entangling_layers(&spec).unwrap();
            let theta = uniform_angles(&mut rng, param_count(&spec));
            let mut s = c.run(&theta, &[]).unwrap();
            let q = meyer_wallach_q(&s);
            for w in 0..n {
                let a = uniform_angles(&mut rng, 3);
                s.apply_resolved(GateKind::Rot, &[w], &a).unwrap();
            }
            assert!((meyer_wallach_q(&s) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn entangling_capability_examples() {
        let c = rotations_only(4, 2).unwrap();
        assert!(entangling_capability(&c, 200, 1).unwrap().abs() < 1e-10);

        let c = strongly_entangling_layers(&AnsatzSpec::new(2, 1)).unwrap();
        let e = entangling_capability(&c, 1000, 42).unwrap();
        assert!(e > 0.0 && e < 1.0, "{e}");
        assert_eq!(e.to_bits(), entangling_capability(&c, 1000, 42).unwrap().to_bits());

        let mut bell = CircuitProgram::new(2);
        bell.push(GateInstruction::h(0)).unwrap();
        bell.push(GateInstruction::cnot(0, 1)).unwrap();
        bell.push(GateInstruction::rz(0, Param::Slot(0))).unwrap();
        bell.push(GateInstruction::rz(1, Param::Slot(1))).unwrap();
        assert!((entangling_capability(&bell, 100, 3).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_qubit_gradient_variance_is_half() {
        let v = gradient_variance_scan(&[1], &GradientScanConfig::new(4000, 12)).unwrap();
        assert!((v[&1] - 0.5).abs() < 0.03, "{}", v[&1]);
    }

    #[test]
    fn scan_edge_cases() {
        assert!(gradient_variance_scan(&[], &GradientScanConfig::new(100, 0)).unwrap().is_empty());
        assert!(gradient_variance_scan(&[3, 2], &GradientScanConfig::new(100, 0)).is_err());
        assert!(gradient_variance_scan(&[2], &GradientScanConfig::new(99, 0)).is_err());
    }
}
