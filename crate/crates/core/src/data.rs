//! Tabular ingestion, standardization, correlation, PCA and splitting.
//!
//! Matrices are row-major `Vec<Vec<f64>>`: one inner vector per sample.

use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::descriptors::draw_rng;
use crate::error::{contract, QnnError, Result};

pub type Matrix = Vec<Vec<f64>>;

pub const BOSTON_FEATURES: [&str; 13] =
    ["CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT"];
pub const BOSTON_TARGET: &str = "MEDV";
pub const BOSTON_ROWS: usize = 506;

/// Expected layout of an input CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    pub target_column: String,
    /// With a header, columns are located by name; without one, the file must
    /// hold the features followed by the target, in schema order.
    pub has_header: bool,
    /// A different row count is logged as a warning.
    pub expected_rows: Option<usize>,
}

impl CsvSchema {
    pub fn boston() -> Self {
        CsvSchema {
            feature_columns: BOSTON_FEATURES.iter().map(|s| s.to_string()).collect(),
            target_column: BOSTON_TARGET.to_string(),
            has_header: true,
            expected_rows: Some(BOSTON_ROWS),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl TabularDataset {
    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn select(&self, rows: &[usize]) -> TabularDataset {
        TabularDataset {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| QnnError::Io { path: path.to_path_buf(), source })
}

/// Reads features and target per `schema`. Rows are numbered from 1, excluding the header.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TabularDataset> {
    let path = path.as_ref();
    let mut reader =
        csv::ReaderBuilder::new().has_headers(schema.has_header).trim(csv::Trim::All).from_reader(open(path)?);
    let wanted: Vec<&str> =
        schema.feature_columns.iter().map(String::as_str).chain([schema.target_column.as_str()]).collect();
    let positions: Vec<usize> = if schema.has_header {
        let header = reader.headers()?.clone();
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(QnnError::Schema(format!("{} has no header row", path.display())));
        }
        wanted
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == *name)
                    .ok_or_else(|| QnnError::Schema(format!("missing column {name} in {}", path.display())))
            })
            .collect::<Result<_>>()?
    } else {
        (0..wanted.len()).collect()
    };

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut values = Vec::with_capacity(wanted.len());
        for (&pos, &name) in positions.iter().zip(&wanted) {
            let cell = record.get(pos).ok_or_else(|| QnnError::Schema(format!("row {row} has no column {name}")))?;
            let parse_err = || QnnError::Parse { row, column: name.to_string(), value: cell.to_string() };
            let v: f64 = cell.parse().map_err(|_| parse_err())?;
            if !v.is_finite() {
                return Err(parse_err());
            }
            values.push(v);
        }
        targets.push(values.pop().expect("target column present"));
        features.push(values);
    }
    if targets.is_empty() {
        return Err(QnnError::Schema(format!("{} contains no data rows", path.display())));
    }
    if let Some(expected) = schema.expected_rows {
        if expected != targets.len() {
            log::warn!("{}: expected {expected} rows, found {}", path.display(), targets.len());
        }
    }
    Ok(TabularDataset {
        features,
        targets,
        feature_names: schema.feature_columns.clone(),
        target_name: schema.target_column.clone(),
    })
}

fn check_rectangular(m: &Matrix, what: &str) -> Result<usize> {
    let cols = m.first().map_or(0, Vec::len);
    if m.is_empty() || cols == 0 {
        return Err(contract(format!("{what} is empty")));
    }
    if m.iter().any(|r| r.len() != cols) {
        return Err(contract(format!("{what} has rows of unequal length")));
    }
    Ok(cols)
}

fn column_name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("column {j}"))
}

fn column_stats(m: &Matrix, j: usize) -> (f64, f64) {
    let n = m.len() as f64;
    let mean = m.iter().map(|r| r[j]).sum::<f64>() / n;
    let var = m.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_degenerate(mean: f64, std: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizerState {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizerState {
    /// `names` labels columns in errors; missing names fall back to the column index.
    pub fn fit(train: &Matrix, names: &[String]) -> Result<Self> {
        let cols = check_rectangular(train, "training matrix")?;
        let mut mean = Vec::with_capacity(cols);
        let mut std = Vec::with_capacity(cols);
        for j in 0..cols {
            let (m, s) = column_stats(train, j);
            if is_degenerate(m, s) {
                return Err(QnnError::ZeroVariance { column: column_name(names, j) });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(StandardizerState { mean, std })
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if let Some(r) = m.iter().find(|r| r.len() != self.mean.len()) {
            return Err(contract(format!("standardizer fit on {} columns, row has {}", self.mean.len(), r.len())));
        }
        Ok(m.iter()
            .map(|r| r.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (mu, s))| (v - mu) / s).collect())
            .collect())
    }
}

/// Fits on `train` and transforms `train` followed by every matrix in `apply_to`.
pub fn standardize_fit_apply(
    train: &Matrix,
    apply_to: &[&Matrix],
    names: &[String],
) -> Result<(StandardizerState, Vec<Matrix>)> {
    let state = StandardizerState::fit(train, names)?;
    let mut out = vec![state.apply(train)?];
    for m in apply_to {
        out.push(state.apply(m)?);
    }
    Ok((state, out))
}

/// Pearson correlations between the columns of `m`.
pub fn correlation_of_columns(m: &Matrix, names: &[String]) -> Result<Matrix> {
    let cols = check_rectangular(m, "matrix")?;
    if m.len() < 2 {
        return Err(contract("correlation needs at least two rows"));
    }
    let mut centered = vec![vec![0.0; m.len()]; cols];
    for j in 0..cols {
        let (mean, std) = column_stats(m, j);
        if is_degenerate(mean, std) {
            return Err(QnnError::ZeroVariance { column: column_name(names, j) });
        }
        let norm = std * (m.len() as f64).sqrt();
        for (i, r) in m.iter().enumerate() {
            centered[j][i] = (r[j] - mean) / norm;
        }
    }
    let mut corr = vec![vec![0.0; cols]; cols];
    for a in 0..cols {
        corr[a][a] = 1.0;
        for b in a + 1..cols {
            let c = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0);
            corr[a][b] = c;
            corr[b][a] = c;
        }
    }
    Ok(corr)
}

/// Correlations over features and target, target last.
pub fn correlation_matrix(data: &TabularDataset) -> Result<Matrix> {
    let joint: Matrix =
        data.features.iter().zip(&data.targets).map(|(r, &t)| r.iter().copied().chain([t]).collect()).collect();
    let names: Vec<String> = data.feature_names.iter().cloned().chain([data.target_name.clone()]).collect();
    correlation_of_columns(&joint, &names)
}

/// Principal axes of a centered matrix, largest variance first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaState {
    /// `k` unit vectors of length `cols`; each has its largest-magnitude entry positive.
    pub components: Matrix,
    /// Variance fraction of every principal axis, descending (not just the first `k`).
    pub explained_variance_ratio: Vec<f64>,
    pub k: usize,
}

impl PcaState {
    pub fn n_columns(&self) -> usize {
        self.components[0].len()
    }

    pub fn cumulative_ratio(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Fraction of variance captured by the retained components.
    pub fn retained_ratio(&self) -> f64 {
        self.explained_variance_ratio[..self.k].iter().sum()
    }
}

/// Smallest number of components whose cumulative ratio reaches `threshold`.
pub fn min_components_for(ratios: &[f64], threshold: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        if acc >= threshold {
            return Some(i + 1);
        }
    }
    None
}

/// PCA by singular-value decomposition of the column-centered input.
pub fn pca_fit(standardized: &Matrix, k: usize) -> Result<PcaState> {
    let cols = check_rectangular(standardized, "PCA input")?;
    let n = standardized.len();
    let rank_cap = cols.min(n);
    if k == 0 || k > rank_cap {
        return Err(contract(format!("PCA k = {k} outside 1..={rank_cap}")));
    }
    let means: Vec<f64> = (0..cols).map(|j| column_stats(standardized, j).0).collect();
    let x = DMatrix::from_fn(n, cols, |i, j| standardized[i][j] - means[j]);
    let svd = x.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let variances: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let total: f64 = variances.iter().sum();
    if total <= 0.0 {
        return Err(contract("PCA input has zero total variance"));
    }
    let components = order[..k]
        .iter()
        .map(|&i| {
            let mut c: Vec<f64> = v_t.row(i).iter().copied().collect();
            let pivot = c.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            c
        })
        .collect();
    Ok(PcaState { components, explained_variance_ratio: variances.iter().map(|v| v / total).collect(), k })
}

/// Projects rows onto the retained components (no re-centering).
pub fn pca_transform(state: &PcaState, m: &Matrix) -> Result<Matrix> {
    let cols = state.n_columns();
    if let Some(r) = m.iter().find(|r| r.len() != cols) {
        return Err(contract(format!("PCA fit on {cols} columns, row has {}", r.len())));
    }
    Ok(m.iter().map(|r| state.components.iter().map(|c| c.iter().zip(r).map(|(a, b)| a * b).sum()).collect()).collect())
}

/// Seeded permutation of `0..n` cut into `⌈(1 − fraction)·n⌉` train and the remaining test indices.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(contract(format!("split fraction {fraction} outside (0, 1)")));
    }
    // The small offset keeps exact products such as 0.5·10 from rounding up.
    let n_train = ((1.0 - fraction) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if n_train == 0 || n_train >= n {
        return Err(contract(format!("split of {n} rows at fraction {fraction} leaves an empty side")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut draw_rng(seed, 0));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn train_test_split(data: &TabularDataset, fraction: f64, seed: u64) -> Result<(TabularDataset, TabularDataset)> {
    let (train, test) = split_indices(data.n_rows(), fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Writes a numeric table with a header row.
pub fn write_csv(path: impl AsRef<Path>, header: &[String], rows: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| QnnError::Io { path: path.to_path_buf(), source })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|source| QnnError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// Reads a numeric table written by [`write_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Matrix)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_reader(open(path)?);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .zip(&header)
            .map(|(cell, name)| {
                cell.parse::<f64>().map_err(|_| QnnError::Parse {
                    row: i + 1,
                    column: name.clone(),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
