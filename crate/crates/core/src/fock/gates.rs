//! Photonic gates on truncated Fock states.
//!
//! Displacement, squeezing and beamsplitter matrices are the exact infinite
//! operators restricted to the `D`-photon block, built column by column from
//! their Heisenberg-picture recurrences. Restriction makes them contract
//! norm whenever amplitude would be pushed above the cutoff; rotation and Kerr
//! are diagonal and exactly unitary.

use num_complex::Complex64;

use super::state::FockState;
use crate::error::{contract, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `D × D` row-major block of `D(α) = exp(αa† − α*a)`, `α = r·e^{iφ}`.
pub fn displacement_matrix(r: f64, phi: f64, cutoff: usize) -> Vec<Complex64> {
    let d = cutoff;
    let alpha = Complex64::from_polar(r, phi);
    let mut u = vec![ZERO; d * d];
    // Column 0 is the coherent state |α⟩.
    u[0] = Complex64::new((-0.5 * r * r).exp(), 0.0);
    for m in 1..d {
        u[m * d] = u[(m - 1) * d] * alpha / (m as f64).sqrt();
    }
    // a†D = D(a† + α*)  ⇒  U[m,n+1] = (√m·U[m−1,n] − α*·U[m,n]) / √(n+1)
    for n in 0..d - 1 {
        let inv = 1.0 / ((n + 1) as f64).sqrt();
        for m in 0..d {
            let up = if m > 0 { u[(m - 1) * d + n] * (m as f64).sqrt() } else { ZERO };
            u[m * d + n + 1] = (up - alpha.conj() * u[m * d + n]) * inv;
        }
    }
    u
}

/// `D × D` block of `S(r) = exp(r(a² − a†²)/2)`.
pub fn squeeze_matrix(r: f64, cutoff: usize) -> Vec<Complex64> {
    let d = cutoff;
    let (ch, sh, th) = (r.cosh(), r.sinh(), r.tanh());
    let mut u = vec![ZERO; d * d];
    u[0] = Complex64::new(1.0 / ch.sqrt(), 0.0);
    for m in (2..d).step_by(2) {
        u[m * d] = u[(m - 2) * d] * (-th * ((m - 1) as f64 / m as f64).sqrt());
    }
    // a†S = S(a†·cosh r − a·sinh r)
    //   ⇒ U[m,n+1] = (√m·U[m−1,n] + sinh r·√n·U[m,n−1]) / (cosh r·√(n+1))
    for n in 0..d - 1 {
        let inv = 1.0 / (ch * ((n + 1) as f64).sqrt());
        for m in 0..d {
            let up = if m > 0 { u[(m - 1) * d + n] * (m as f64).sqrt() } else { ZERO };
            let left = if n > 0 { u[m * d + n - 1] * (sh * (n as f64).sqrt()) } else { ZERO };
            u[m * d + n + 1] = (up + left) * inv;
        }
    }
    u
}

/// `D² × D²` block of `BS(θ, φ) = exp(θ(e^{iφ}a†b − e^{−iφ}ab†))`, indexed
/// `[(m_a·D + m_b)·D² + (n_a·D + n_b)]`. Only equal-total entries are nonzero.
pub fn beamsplitter_matrix(theta: f64, phi: f64, cutoff: usize) -> Vec<Complex64> {
    let d = cutoff;
    let dd = d * d;
    let (s, c) = theta.sin_cos();
    let e_plus = Complex64::from_polar(s, phi);
    let e_minus = Complex64::from_polar(s, -phi);
    let mut u = vec![ZERO; dd * dd];
    let at = |m1: usize, m2: usize, n1: usize, n2: usize| (m1 * d + m2) * dd + n1 * d + n2;
    u[0] = Complex64::new(1.0, 0.0);
    for total in 1..=2 * (d - 1) {
        for n1 in total.saturating_sub(d - 1)..=total.min(d - 1) {
            let n2 = total - n1;
            for m1 in total.saturating_sub(d - 1)..=total.min(d - 1) {
                let m2 = total - m1;
                let val = if n1 > 0 {
                    // U a† U† = c·a† − e^{−iφ}s·b†
                    let a = if m1 > 0 { u[at(m1 - 1, m2, n1 - 1, n2)] * (c * (m1 as f64).sqrt()) } else { ZERO };
                    let b = if m2 > 0 { u[at(m1, m2 - 1, n1 - 1, n2)] * e_minus * (m2 as f64).sqrt() } else { ZERO };
                    (a - b) / (n1 as f64).sqrt()
                } else {
                    // U b† U† = c·b† + e^{iφ}s·a†
                    let b = if m2 > 0 { u[at(m1, m2 - 1, n1, n2 - 1)] * (c * (m2 as f64).sqrt()) } else { ZERO };
                    let a = if m1 > 0 { u[at(m1 - 1, m2, n1, n2 - 1)] * e_plus * (m1 as f64).sqrt() } else { ZERO };
                    (b + a) / (n2 as f64).sqrt()
                };
                u[at(m1, m2, n1, n2)] = val;
            }
        }
    }
    u
}

impl FockState {
    fn apply_single_mode(&mut self, mode: usize, mat: &[Complex64]) {
        let d = self.cutoff;
        let stride = self.stride(mode);
        let block = stride * d;
        let mut fiber = vec![ZERO; d];
        for outer in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (n, f) in fiber.iter_mut().enumerate() {
                    *f = self.amps[base + n * stride];
                }
                for m in 0..d {
                    let row = &mat[m * d..(m + 1) * d];
                    self.amps[base + m * stride] = row.iter().zip(&fiber).map(|(u, f)| u * f).sum();
                }
            }
        }
    }

    fn apply_diagonal(&mut self, mode: usize, phases: &[Complex64]) {
        let d = self.cutoff;
        let stride = self.stride(mode);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= phases[(i / stride) % d];
        }
    }

    fn apply_two_mode(&mut self, mode_a: usize, mode_b: usize, mat: &[Complex64]) {
        let d = self.cutoff;
        let dd = d * d;
        let (sa, sb) = (self.stride(mode_a), self.stride(mode_b));
        let mut block = vec![ZERO; dd];
        let mut out = vec![ZERO; dd];
        for base in 0..self.amps.len() {
            // Visit each (mode_a, mode_b) sub-block once, from its zero-occupation corner.
            if (base / sa) % d != 0 || (base / sb) % d != 0 {
                continue;
            }
            for n1 in 0..d {
                for n2 in 0..d {
                    block[n1 * d + n2] = self.amps[base + n1 * sa + n2 * sb];
                }
            }
            for m1 in 0..d {
                for m2 in 0..d {
                    let total = m1 + m2;
                    let row = (m1 * d + m2) * dd;
                    let mut acc = ZERO;
                    for n1 in total.saturating_sub(d - 1)..=total.min(d - 1) {
                        let idx = n1 * d + (total - n1);
                        acc += mat[row + idx] * block[idx];
                    }
                    out[m1 * d + m2] = acc;
                }
            }
            for m1 in 0..d {
                for m2 in 0..d {
                    self.amps[base + m1 * sa + m2 * sb] = out[m1 * d + m2];
                }
            }
        }
    }

    pub fn displacement(&mut self, mode: usize, r: f64, phi: f64) -> Result<()> {
        self.check_mode(mode)?;
        check_finite(&[r, phi])?;
        if r != 0.0 {
            let m = displacement_matrix(r, phi, self.cutoff);
            self.apply_single_mode(mode, &m);
        }
        self.check_leakage(&format!("displacement on mode {mode}"))
    }

    pub fn squeeze(&mut self, mode: usize, r: f64) -> Result<()> {
        self.check_mode(mode)?;
        check_finite(&[r])?;
        if r != 0.0 {
            let m = squeeze_matrix(r, self.cutoff);
            self.apply_single_mode(mode, &m);
        }
        self.check_leakage(&format!("squeeze on mode {mode}"))
    }

    pub fn beamsplitter(&mut self, mode_a: usize, mode_b: usize, theta: f64, phi: f64) -> Result<()> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        check_finite(&[theta, phi])?;
        if mode_a == mode_b {
            return Err(contract(format!("beamsplitter needs two distinct modes, got {mode_a} twice")));
        }
        if theta != 0.0 {
            let m = beamsplitter_matrix(theta, phi, self.cutoff);
            self.apply_two_mode(mode_a, mode_b, &m);
        }
        self.check_leakage(&format!("beamsplitter on modes ({mode_a}, {mode_b})"))
    }

    /// Phase rotation `e^{iφn}`.
    pub fn rotation(&mut self, mode: usize, phi: f64) -> Result<()> {
        self.check_mode(mode)?;
        check_finite(&[phi])?;
        let phases: Vec<Complex64> = (0..self.cutoff).map(|n| Complex64::from_polar(1.0, phi * n as f64)).collect();
        self.apply_diagonal(mode, &phases);
        Ok(())
    }

    /// Kerr phase `e^{iκn²}`.
    pub fn kerr(&mut self, mode: usize, kappa: f64) -> Result<()> {
        self.check_mode(mode)?;
        check_finite(&[kappa])?;
        let phases: Vec<Complex64> =
            (0..self.cutoff).map(|n| Complex64::from_polar(1.0, kappa * (n * n) as f64)).collect();
        self.apply_diagonal(mode, &phases);
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(contract(format!("non-finite gate parameter in {values:?}")));
    }
    Ok(())
}
