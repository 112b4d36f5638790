//! Truncated Fock-space simulation of continuous-variable circuits.

mod gates;
mod layer;
mod state;

pub use gates::{beamsplitter_matrix, displacement_matrix, squeeze_matrix};
pub use layer::{
    apply_interferometer, cv_layer, displacement_embedding, mesh_pairs, n_beamsplitters, quadratures, CVLayerParams,
    Interferometer,
};
pub use state::{
    FockConfig, FockResourceBudget, FockState, DEFAULT_CUTOFF, DEFAULT_LEAKAGE_TOLERANCE, DEFAULT_MAX_ELEMENTS,
};
