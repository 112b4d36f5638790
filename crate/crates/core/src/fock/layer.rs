use serde::{Deserialize, Serialize};

use super::state::{FockConfig, FockState};
use crate::error::{contract, Result};

/// Beamsplitter mesh plus trailing per-mode rotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferometer {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub rotations: Vec<f64>,
}

impl Interferometer {
    pub fn zeros(n_modes: usize) -> Self {
        let b = n_beamsplitters(n_modes);
        Interferometer { theta: vec![0.0; b], phi: vec![0.0; b], rotations: vec![0.0; n_modes] }
    }
}

/// Parameters of one continuous-variable neural-network layer on `M` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVLayerParams {
    pub interferometer1: Interferometer,
    pub squeeze: Vec<f64>,
    pub interferometer2: Interferometer,
    pub displacement_r: Vec<f64>,
    pub displacement_phi: Vec<f64>,
    pub kerr: Vec<f64>,
}

pub fn n_beamsplitters(n_modes: usize) -> usize {
    n_modes * n_modes.saturating_sub(1) / 2
}

/// Beamsplitter mode pairs of the triangular mesh, in application order.
pub fn mesh_pairs(n_modes: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n_beamsplitters(n_modes));
    for col in 0..n_modes.saturating_sub(1) {
        for i in 0..n_modes - 1 - col {
            pairs.push((i, i + 1));
        }
    }
    pairs
}

impl CVLayerParams {
    pub fn zeros(n_modes: usize) -> Self {
        CVLayerParams {
            interferometer1: Interferometer::zeros(n_modes),
            squeeze: vec![0.0; n_modes],
            interferometer2: Interferometer::zeros(n_modes),
            displacement_r: vec![0.0; n_modes],
            displacement_phi: vec![0.0; n_modes],
            kerr: vec![0.0; n_modes],
        }
    }

    /// `2M² + 4M`.
    pub fn len_for(n_modes: usize) -> usize {
        2 * (2 * n_beamsplitters(n_modes) + n_modes) + 4 * n_modes
    }

    pub fn n_modes(&self) -> usize {
        self.squeeze.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::len_for(self.n_modes()));
        for part in [
            &self.interferometer1.theta,
            &self.interferometer1.phi,
            &self.interferometer1.rotations,
            &self.squeeze,
            &self.interferometer2.theta,
            &self.interferometer2.phi,
            &self.interferometer2.rotations,
            &self.displacement_r,
            &self.displacement_phi,
            &self.kerr,
        ] {
            v.extend_from_slice(part);
        }
        v
    }

    pub fn from_vec(n_modes: usize, v: &[f64]) -> Result<Self> {
        if v.len() != Self::len_for(n_modes) {
            return Err(contract(format!(
                "CV layer on {n_modes} modes takes {} parameters, got {}",
                Self::len_for(n_modes),
                v.len()
            )));
        }
        let b = n_beamsplitters(n_modes);
        let mut rest = v;
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec()
        };
        Ok(CVLayerParams {
            interferometer1: Interferometer { theta: take(b), phi: take(b), rotations: take(n_modes) },
            squeeze: take(n_modes),
            interferometer2: Interferometer { theta: take(b), phi: take(b), rotations: take(n_modes) },
            displacement_r: take(n_modes),
            displacement_phi: take(n_modes),
            kerr: take(n_modes),
        })
    }

    fn validate(&self, n_modes: usize) -> Result<()> {
        if self.to_vec().len() != Self::len_for(n_modes) || self.n_modes() != n_modes {
            return Err(contract(format!("CV layer parameters do not match {n_modes} modes")));
        }
        if self.to_vec().iter().any(|p| !p.is_finite()) {
            return Err(contract("non-finite CV layer parameter"));
        }
        Ok(())
    }
}

pub fn apply_interferometer(state: &mut FockState, params: &Interferometer) -> Result<()> {
    for (k, (a, b)) in mesh_pairs(state.n_modes()).into_iter().enumerate() {
        state.beamsplitter(a, b, params.theta[k], params.phi[k])?;
    }
    for (mode, &phi) in params.rotations.iter().enumerate() {
        state.rotation(mode, phi)?;
    }
    Ok(())
}

/// Interferometer, squeezing, interferometer, displacement, Kerr.
pub fn cv_layer(state: &mut FockState, params: &CVLayerParams) -> Result<()> {
    params.validate(state.n_modes())?;
    apply_interferometer(state, &params.interferometer1)?;
    for (mode, &r) in params.squeeze.iter().enumerate() {
        state.squeeze(mode, r)?;
    }
    apply_interferometer(state, &params.interferometer2)?;
    for mode in 0..state.n_modes() {
        state.displacement(mode, params.displacement_r[mode], params.displacement_phi[mode])?;
    }
    for (mode, &kappa) in params.kerr.iter().enumerate() {
        state.kerr(mode, kappa)?;
    }
    Ok(())
}

/// Vacuum on `M` modes with feature `x_i` loaded as the displacement magnitude of mode `i`.
pub fn displacement_embedding(x: &[f64], n_modes: usize, cfg: &FockConfig) -> Result<FockState> {
    if x.len() > n_modes {
        return Err(contract(format!("{} features cannot be embedded in {n_modes} modes", x.len())));
    }
    let mut state = FockState::from_config(n_modes, cfg)?;
    for (mode, &r) in x.iter().enumerate() {
        state.displacement(mode, r, 0.0)?;
    }
    Ok(state)
}

/// `⟨x̂⟩` on every mode.
pub fn quadratures(state: &FockState) -> Result<Vec<f64>> {
    (0..state.n_modes()).map(|m| state.quadrature_x(m)).collect()
}
