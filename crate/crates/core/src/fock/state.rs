use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, QnnError, Result};

pub const DEFAULT_CUTOFF: usize = 8;
pub const DEFAULT_MAX_ELEMENTS: u128 = 100_000;
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-4;

/// Ceiling on the number of complex amplitudes `D^M` a Fock state may hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockResourceBudget {
    pub max_elements: u128,
}

impl Default for FockResourceBudget {
    fn default() -> Self {
        FockResourceBudget { max_elements: DEFAULT_MAX_ELEMENTS }
    }
}

impl FockResourceBudget {
    pub fn check(&self, n_modes: usize, cutoff: usize) -> Result<usize> {
        let required = (cutoff as u128).checked_pow(n_modes as u32).unwrap_or(u128::MAX);
        if required > self.max_elements {
            return Err(QnnError::ResourceLimit {
                what: format!("Fock tensor D^M = {cutoff}^{n_modes}"),
                required,
                limit: self.max_elements,
            });
        }
        Ok(required as usize)
    }
}

/// Cutoff, memory budget and leakage tolerance shared by every state of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub cutoff: usize,
    pub budget: FockResourceBudget,
    pub leakage_tolerance: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig {
            cutoff: DEFAULT_CUTOFF,
            budget: FockResourceBudget::default(),
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
        }
    }
}

impl FockConfig {
    pub fn with_cutoff(cutoff: usize) -> Self {
        FockConfig { cutoff, ..FockConfig::default() }
    }
}

/// Pure state of `M` bosonic modes truncated at `D` photons per mode.
///
/// Amplitudes are stored row-major with mode 0 as the slowest index.
/// Gates built from the exact operator restricted to the truncated space lose
/// norm when probability would flow above the cutoff; that deficit is tracked
/// and never renormalized away.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub(crate) n_modes: usize,
    pub(crate) cutoff: usize,
    pub(crate) amps: Vec<Complex64>,
    pub(crate) tolerance: f64,
}

impl FockState {
    pub fn vacuum(n_modes: usize, cutoff: usize, budget: &FockResourceBudget) -> Result<Self> {
        if n_modes == 0 {
            return Err(contract("a Fock state needs at least one mode"));
        }
        if cutoff < 2 {
            return Err(contract(format!("cutoff {cutoff} < 2")));
        }
        let len = budget.check(n_modes, cutoff)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(FockState { n_modes, cutoff, amps, tolerance: DEFAULT_LEAKAGE_TOLERANCE })
    }

    pub fn from_config(n_modes: usize, cfg: &FockConfig) -> Result<Self> {
        Ok(Self::vacuum(n_modes, cfg.cutoff, &cfg.budget)?.with_tolerance(cfg.leakage_tolerance))
    }

    /// The Fock basis state `|n_0, n_1, …⟩`.
    pub fn basis(occupations: &[usize], cutoff: usize, budget: &FockResourceBudget) -> Result<Self> {
        let mut s = Self::vacuum(occupations.len(), cutoff, budget)?;
        if let Some(&n) = occupations.iter().find(|&&n| n >= cutoff) {
            return Err(contract(format!("occupation {n} not below cutoff {cutoff}")));
        }
        let idx = occupations.iter().fold(0, |acc, &n| acc * cutoff + n);
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability lost above the cutoff so far.
    pub fn leakage(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(contract(format!("mode {mode} out of range for {} modes", self.n_modes)));
        }
        Ok(())
    }

    pub(crate) fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    /// Marginal photon-number distribution of one mode.
    pub fn photon_probabilities(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let stride = self.stride(mode);
        let d = self.cutoff;
        let mut p = vec![0.0; d];
        for (i, a) in self.amps.iter().enumerate() {
            p[(i / stride) % d] += a.norm_sqr();
        }
        Ok(p)
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        Ok(self.photon_probabilities(mode)?.iter().enumerate().map(|(n, p)| n as f64 * p).sum())
    }

    /// `⟨a⟩` for one mode.
    pub fn mean_annihilation(&self, mode: usize) -> Result<Complex64> {
        self.check_mode(mode)?;
        let stride = self.stride(mode);
        let d = self.cutoff;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let n = (i / stride) % d;
            if n + 1 < d {
                acc += a.conj() * self.amps[i + stride] * ((n + 1) as f64).sqrt();
            }
        }
        Ok(acc)
    }

    /// `⟨x̂⟩` with `x̂ = (a + a†)/√2`.
    pub fn quadrature_x(&self, mode: usize) -> Result<f64> {
        Ok(std::f64::consts::SQRT_2 * self.mean_annihilation(mode)?.re)
    }

    pub(crate) fn check_leakage(&self, gate: &str) -> Result<()> {
        let deficit = self.leakage();
        if deficit > self.tolerance {
            return Err(QnnError::Truncation {
                gate: gate.to_string(),
                deficit,
                tolerance: self.tolerance,
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_examples() {
        let b = FockResourceBudget::default();
        let s = FockState::vacuum(1, 4, &b).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.amplitudes()[0].re, 1.0);
        let s = FockState::vacuum(3, 6, &b).unwrap();
        assert_eq!(s.amplitudes().len(), 216);
        assert_eq!(s.amplitudes()[0].re, 1.0);
        let err = FockState::vacuum(6, 10, &FockResourceBudget { max_elements: 100_000 }).unwrap_err();
        assert!(matches!(err, QnnError::ResourceLimit { required: 1_000_000, limit: 100_000, .. }));
        assert!(err.to_string().contains("10^6"), "{err}");
    }

    #[test]
    fn default_budget_admits_three_modes_not_six() {
        let cfg = FockConfig::default();
        assert!(FockState::from_config(3, &cfg).is_ok());
        assert!(FockState::from_config(5, &cfg).is_ok());
        assert!(matches!(FockState::from_config(6, &cfg), Err(QnnError::ResourceLimit { .. })));
    }

    #[test]
    fn quadrature_of_vacuum_and_single_photon() {
        let b = FockResourceBudget::default();
        assert_eq!(FockState::vacuum(2, 5, &b).unwrap().quadrature_x(1).unwrap(), 0.0);
        let one = FockState::basis(&[1], 5, &b).unwrap();
        assert_eq!(one.quadrature_x(0).unwrap(), 0.0);
        assert_eq!(one.mean_photon_number(0).unwrap(), 1.0);
        assert!(one.quadrature_x(1).is_err());
    }
}
