use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Hybrid,
    Classical,
    Photonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Statevector,
    Fock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// RY rotations (same as angle-y)
    Angle,
    AngleX,
    AngleY,
    AngleZ,
    Amplitude,
    Basis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglerKind {
    None,
    Cnot,
    Cz,
}

/// Every setting of a run. Values come from defaults, then the config file, then flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub model: ModelKind,
    pub backend: Option<Backend>,
    pub encoding: Encoding,
    pub entangler: EntanglerKind,
    pub pca_k: usize,
    pub split_fraction: f64,
    pub features: Option<usize>,
    pub qubits: Option<usize>,
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub shots: Option<usize>,
    pub normalize_targets: bool,
    pub scale_inputs: bool,
    pub seed: u64,
    pub cutoff: usize,
    pub budget: u128,
    pub leakage_tolerance: f64,
    pub samples: usize,
    pub scan_qubits: Vec<usize>,
    pub scan_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            input: None,
            output_dir: None,
            model: ModelKind::Hybrid,
            backend: None,
            encoding: Encoding::Angle,
            entangler: EntanglerKind::Cnot,
            pca_k: 9,
            split_fraction: 0.2,
            features: None,
            qubits: None,
            layers: 1,
            epochs: 25,
            lr: 0.08,
            batch_size: 5,
            shots: None,
            normalize_targets: true,
            scale_inputs: true,
            seed: 7,
            cutoff: qnn_core::fock::DEFAULT_CUTOFF,
            budget: qnn_core::fock::DEFAULT_MAX_ELEMENTS,
            leakage_tolerance: qnn_core::fock::DEFAULT_LEAKAGE_TOLERANCE,
            samples: 5000,
            scan_qubits: Vec::new(),
            scan_samples: 500,
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Flat JSON config file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    #[arg(long, value_enum)]
    pub encoding: Option<Encoding>,
    #[arg(long, value_enum)]
    pub entangler: Option<EntanglerKind>,
    #[arg(long)]
    pub pca_k: Option<usize>,
    #[arg(long)]
    pub split_fraction: Option<f64>,
    /// Use only the first N prepared feature columns
    #[arg(long)]
    pub features: Option<usize>,
    /// Quantum-layer width (wires or modes); defaults to the feature count
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Measurement shots for evaluation only
    #[arg(long)]
    pub shots: Option<usize>,
    /// Train against standardized targets (predictions stay in target units)
    #[arg(long)]
    pub normalize_targets: Option<bool>,
    /// Map each input feature's training range onto [-1, 1] before the input layer
    #[arg(long)]
    pub scale_inputs: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Photon-number cutoff per mode
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Maximum Fock tensor elements D^M
    #[arg(long)]
    pub budget: Option<u128>,
    #[arg(long)]
    pub leakage_tolerance: Option<f64>,
    /// Random parameter draws for expressibility and entangling capability
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated qubit counts for the gradient-variance scan
    #[arg(long, value_delimiter = ',')]
    pub scan_qubits: Option<Vec<usize>>,
    #[arg(long)]
    pub scan_samples: Option<usize>,
}

pub fn read_config_file(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))
}

impl Overrides {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => read_config_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        set!(
            model,
            encoding,
            entangler,
            pca_k,
            split_fraction,
            layers,
            epochs,
            lr,
            batch_size,
            normalize_targets,
            scale_inputs,
            seed,
            cutoff,
            budget,
            leakage_tolerance,
            samples,
            scan_qubits,
            scan_samples
        );
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f.clone(); } )* };
        }
        set_opt!(input, output_dir, backend, features, qubits, shots);
        c.validate()?;
        Ok(c)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::input(m));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction {} must lie in (0, 1)", self.split_fraction));
        }
        if self.pca_k == 0 {
            return bad("pca_k must be positive".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr {} must be finite and non-negative", self.lr));
        }
        if self.shots == Some(0) || self.features == Some(0) || self.qubits == Some(0) {
            return bad("shots, features and qubits must be positive when given".into());
        }
        if self.cutoff < 2 {
            return bad(format!("cutoff {} must be at least 2", self.cutoff));
        }
        if !(self.leakage_tolerance > 0.0 && self.leakage_tolerance < 1.0) {
            return bad(format!("leakage_tolerance {} must lie in (0, 1)", self.leakage_tolerance));
        }
        if let Some(b) = self.backend {
            let expected = match self.model {
                ModelKind::Photonic => Backend::Fock,
                _ => Backend::Statevector,
            };
            if self.model != ModelKind::Classical && b != expected {
                return bad(format!("model {:?} runs on the {expected:?} backend, not {b:?}", self.model));
            }
        }
        Ok(())
    }
}
