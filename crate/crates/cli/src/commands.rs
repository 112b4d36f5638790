use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qnn_core::ansatz::{rotations_only, strongly_entangling_layers, AnsatzSpec, Entangler};
use qnn_core::data::{
    correlation_matrix, load_csv, min_components_for, pca_fit, pca_transform, read_csv, standardize_fit_apply,
    train_test_split, write_csv, CsvSchema, Matrix, PcaState, StandardizerState, BOSTON_TARGET,
};
use qnn_core::descriptors::{
    entangling_capability, expressibility, gradient_variance_scan, ExpressibilityConfig, GradientScanConfig,
};
use qnn_core::encodings::RotationAxis;
use qnn_core::fock::{FockConfig, FockResourceBudget};
use qnn_core::model::{
    fit, pearson, predict, predict_sampled, Dataset, HybridRegressor, PhotonicLayerConfig, QuantumLayerConfig,
    TrainConfig,
};

use crate::config::{Encoding, EntanglerKind, ExperimentConfig, ModelKind};
use crate::CliError;

const MANIFEST_VERSION: u32 = 1;

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::input(format!("--{flag} is required")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("invalid JSON in {}: {e}", path.display())))
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn with_target(features: &Matrix, targets: &[f64]) -> Matrix {
    features.iter().zip(targets).map(|(r, &t)| r.iter().copied().chain([t]).collect()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub manifest_version: u32,
    pub config: ExperimentConfig,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Least number of components reaching 95% explained variance on the full standardized data.
    pub min_components_95: usize,
    pub explained_variance_ratio: Vec<f64>,
    pub standardizer: StandardizerState,
    pub pca: PcaState,
}

pub fn prepare(c: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&c.input, "input")?;
    let out = required(&c.output_dir, "output-dir")?;
    let data = load_csv(input, &CsvSchema::boston())?;
    if c.pca_k > data.n_features() {
        return Err(CliError::input(format!("--pca-k {} exceeds {} feature columns", c.pca_k, data.n_features())));
    }

    // Whole-dataset analysis: correlations and the explained-variance curve.
    let corr = correlation_matrix(&data)?;
    let standardized = standardize_fit_apply(&data.features, &[], &data.feature_names)?.1.remove(0);
    let full_pca = pca_fit(&standardized, data.n_features())?;
    let ratios = full_pca.explained_variance_ratio.clone();
    let cumulative = full_pca.cumulative_ratio();
    let min_k = min_components_for(&ratios, 0.95).unwrap_or(ratios.len());

    // Model features: statistics fit on the training split only.
    let (train, test) = train_test_split(&data, c.split_fraction, c.seed)?;
    let (standardizer, z) = standardize_fit_apply(&train.features, &[&test.features], &data.feature_names)?;
    let pca = pca_fit(&z[0], c.pca_k)?;
    let train_pc = pca_transform(&pca, &z[0])?;
    let test_pc = pca_transform(&pca, &z[1])?;

    create_dir(out)?;
    let mut header = names("PC", c.pca_k);
    header.push(BOSTON_TARGET.to_string());
    write_csv(out.join("train.csv"), &header, &with_target(&train_pc, &train.targets))?;
    write_csv(out.join("test.csv"), &header, &with_target(&test_pc, &test.targets))?;
    let corr_header: Vec<String> = data.feature_names.iter().cloned().chain([data.target_name.clone()]).collect();
    write_csv(out.join("correlation.csv"), &corr_header, &corr)?;
    let ev_rows: Matrix =
        ratios.iter().zip(&cumulative).enumerate().map(|(i, (r, cu))| vec![(i + 1) as f64, *r, *cu]).collect();
    let ev_header = ["component", "explained_variance_ratio", "cumulative"].map(String::from);
    write_csv(out.join("explained_variance.csv"), &ev_header, &ev_rows)?;
    write_json(
        &out.join("prepare_manifest.json"),
        &PrepareManifest {
            manifest_version: MANIFEST_VERSION,
            config: c.clone(),
            n_rows: data.n_rows(),
            n_train: train.n_rows(),
            n_test: test.n_rows(),
            min_components_95: min_k,
            explained_variance_ratio: ratios,
            standardizer,
            pca,
        },
    )?;

    println!("rows: {} (train {}, test {})", data.n_rows(), train.n_rows(), test.n_rows());
    println!("minimal principal components reaching 95% explained variance: {min_k}");
    println!("cumulative explained variance at k={}: {:.6}", c.pca_k, cumulative[c.pca_k - 1]);
    println!("wrote {}", out.display());
    Ok(())
}

/// Splits a prepared CSV into the first `n_features` columns and the target, if present.
fn read_prepared(path: &Path, n_features: Option<usize>) -> Result<(Dataset, bool), CliError> {
    let (header, rows) = read_csv(path)?;
    if rows.is_empty() {
        return Err(CliError::input(format!("{} has no data rows", path.display())));
    }
    let has_target = header.last().map(String::as_str) == Some(BOSTON_TARGET);
    let available = header.len() - usize::from(has_target);
    let n = n_features.unwrap_or(available);
    if n > available || n == 0 {
        return Err(CliError::input(format!("{} has {available} feature columns, {n} requested", path.display())));
    }
    let x = rows.iter().map(|r| r[..n].to_vec()).collect();
    let y = rows.iter().map(|r| if has_target { r[available] } else { f64::NAN }).collect();
    Ok((Dataset::new(x, y)?, has_target))
}

fn build_model(c: &ExperimentConfig, n_features: usize) -> Result<HybridRegressor, CliError> {
    let width = c.qubits.unwrap_or(n_features);
    match c.model {
        ModelKind::Classical => Ok(HybridRegressor::classical(n_features, width, c.seed)?),
        ModelKind::Hybrid => {
            let rotation_axis = match c.encoding {
                Encoding::Angle | Encoding::AngleY => RotationAxis::Y,
                Encoding::AngleX => RotationAxis::X,
                Encoding::AngleZ => RotationAxis::Z,
                Encoding::Amplitude | Encoding::Basis => {
                    return Err(CliError::input("the quantum layer is trained with angle encodings only"));
                }
            };
            let entangler = match c.entangler {
                EntanglerKind::Cnot => Entangler::CNOT,
                EntanglerKind::Cz => Entangler::CZ,
                EntanglerKind::None => return Err(CliError::input("the hybrid model needs an entangler")),
            };
            let cfg = QuantumLayerConfig { entangler, rotation_axis, ..QuantumLayerConfig::new(width, c.layers) };
            Ok(HybridRegressor::hybrid(n_features, cfg, c.seed)?)
        }
        ModelKind::Photonic => {
            let fock = FockConfig {
                cutoff: c.cutoff,
                budget: FockResourceBudget { max_elements: c.budget },
                leakage_tolerance: c.leakage_tolerance,
            };
            let cfg = PhotonicLayerConfig { fock, ..PhotonicLayerConfig::new(width) };
            Ok(HybridRegressor::photonic(n_features, cfg, c.seed)?)
        }
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub manifest_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_params: usize,
    pub wall_time_secs: f64,
    pub initial_train_mse: f64,
    pub final_train_mse: f64,
    pub final_val_mse: f64,
    pub test_pearson: Option<f64>,
    pub final_params: Vec<f64>,
}

pub fn train(c: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&c.input, "input")?;
    let out = required(&c.output_dir, "output-dir")?;
    let (train_set, _) = read_prepared(&input.join("train.csv"), c.features)?;
    let (test_set, _) = read_prepared(&input.join("test.csv"), c.features)?;
    let mut model = build_model(c, train_set.n_features())?;
    let cfg = TrainConfig {
        epochs: c.epochs,
        learning_rate: c.lr,
        batch_size: c.batch_size,
        seed: c.seed,
        shots: c.shots,
        normalize_targets: c.normalize_targets,
        scale_inputs: c.scale_inputs,
    };
    let report = fit(&mut model, &train_set, Some(&test_set), &cfg)?;
    let pred = predict(&model, &test_set)?;
    let sampled = match c.shots {
        Some(shots) if c.model == ModelKind::Hybrid => Some(predict_sampled(&model, &test_set, shots, c.seed)?),
        _ => None,
    };

    create_dir(out)?;
    let loss_rows: Matrix = report
        .train_loss
        .iter()
        .zip(&report.val_loss)
        .enumerate()
        .map(|(e, (t, v))| vec![(e + 1) as f64, *t, *v])
        .collect();
    write_csv(out.join("loss_history.csv"), &["epoch", "train_mse", "val_mse"].map(String::from), &loss_rows)?;
    let mut pred_header = vec!["actual".to_string(), "predicted".to_string()];
    let mut pred_rows: Matrix = pred.actual.iter().zip(&pred.predicted).map(|(a, p)| vec![*a, *p]).collect();
    if let Some(s) = &sampled {
        pred_header.push("predicted_shots".into());
        pred_rows.iter_mut().zip(&s.predicted).for_each(|(r, p)| r.push(*p));
    }
    write_csv(out.join("predictions.csv"), &pred_header, &pred_rows)?;
    write_json(&out.join("model.json"), &model)?;
    write_json(&out.join("config.json"), c)?;
    let test_pearson = pearson(&pred.actual, &pred.predicted).ok();
    let manifest = TrainManifest {
        manifest_version: MANIFEST_VERSION,
        config: c.clone(),
        seed: c.seed,
        n_train: train_set.len(),
        n_test: test_set.len(),
        n_params: model.n_params(),
        wall_time_secs: report.wall_time_secs,
        initial_train_mse: report.initial_train_loss,
        final_train_mse: *report.train_loss.last().expect("at least one epoch"),
        final_val_mse: *report.val_loss.last().expect("at least one epoch"),
        test_pearson,
        final_params: report.final_params,
    };
    write_json(&out.join("manifest.json"), &manifest)?;

    println!(
        "{:?} model, {} parameters, {} epochs in {:.1}s",
        c.model, manifest.n_params, c.epochs, manifest.wall_time_secs
    );
    println!("train mse: {:.4} -> {:.4}", manifest.initial_train_mse, manifest.final_train_mse);
    println!("test mse: {:.4}", manifest.final_val_mse);
    if let Some(r) = test_pearson {
        println!("test pearson r: {r:.4}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn predict_model(c: &ExperimentConfig) -> Result<(), CliError> {
    let input = required(&c.input, "input")?;
    let out = required(&c.output_dir, "output-dir")?;
    let model: HybridRegressor = read_json(&out.join("model.json"))?;
    let (data, has_target) = read_prepared(input, Some(model.n_features()))?;
    let pred = predict(&model, &data)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    let path = out.join(format!("predictions_{stem}.csv"));
    if has_target {
        let rows: Matrix = pred.actual.iter().zip(&pred.predicted).map(|(a, p)| vec![*a, *p]).collect();
        write_csv(&path, &["actual", "predicted"].map(String::from), &rows)?;
        println!("mse: {:.4}", pred.mse()?);
    } else {
        let rows: Matrix = pred.predicted.iter().map(|p| vec![*p]).collect();
        write_csv(&path, &["predicted".to_string()], &rows)?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorOutput {
    pub expressibility_kl: f64,
    pub entangling_capability: f64,
    pub gradient_variance_by_qubits: BTreeMap<usize, f64>,
    pub config: ExperimentConfig,
    pub seed: u64,
}

pub fn descriptors(c: &ExperimentConfig) -> Result<(), CliError> {
    let n = c.qubits.unwrap_or(4);
    let entangler = match c.entangler {
        EntanglerKind::Cnot => Some(Entangler::CNOT),
        EntanglerKind::Cz => Some(Entangler::CZ),
        EntanglerKind::None => None,
    };
    let circuit = match entangler {
        Some(e) => strongly_entangling_layers(&AnsatzSpec { n_wires: n, n_layers: c.layers, entangler: e })?,
        None => rotations_only(n, c.layers)?,
    };
    let expressibility_kl = expressibility(&circuit, &ExpressibilityConfig::new(c.samples, c.seed))?;
    let ent = entangling_capability(&circuit, c.samples, c.seed)?;
    let gradient_variance_by_qubits = if c.scan_qubits.is_empty() {
        BTreeMap::new()
    } else {
        let e = entangler.ok_or_else(|| CliError::input("the gradient-variance scan needs an entangler"))?;
        let cfg = GradientScanConfig { entangler: e, ..GradientScanConfig::new(c.scan_samples, c.seed) };
        gradient_variance_scan(&c.scan_qubits, &cfg)?
    };
    let report = DescriptorOutput {
        expressibility_kl,
        entangling_capability: ent,
        gradient_variance_by_qubits,
        config: c.clone(),
        seed: c.seed,
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    if let Some(out) = &c.output_dir {
        create_dir(out)?;
        write_json(&out.join("descriptors.json"), &report)?;
    }
    println!("{text}");
    Ok(())
}
