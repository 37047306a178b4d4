//! Breast Cancer Wisconsin (Diagnostic) ingestion, stratified splitting, and
//! train-fitted standardization.
//!
//! The input format is the UCI `wdbc.data` layout: one record per line,
//! `id,diagnosis,f1,...,f30` with diagnosis `M` (malignant, label 1) or `B`
//! (benign, label 0), commas as separators, no header. A first line whose
//! second field is neither `M` nor `B` and whose numeric fields do not all
//! parse is treated as a header and skipped. Anything else malformed is
//! rejected loudly with the 1-based row and field position; nothing is ever
//! imputed.

use crate::rng::SplitMix64;
use ndarray::{Array2, ArrayView2};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const FEATURE_COLUMNS: usize = 30;

/// id + diagnosis + 30 features
const EXPECTED_FIELDS: usize = FEATURE_COLUMNS + 2;

/// Columns with training standard deviation below this are left centered but
/// unscaled.
const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("no data rows found")]
    Empty,
    #[error("row {row}: expected {EXPECTED_FIELDS} comma-separated fields, found {found}")]
    ColumnCount { row: usize, found: usize },
    #[error("row {row}, field {field}: unparseable numeric value {value:?}")]
    BadNumber {
        row: usize,
        field: usize,
        value: String,
    },
    #[error("row {row}: unknown diagnosis {value:?}, expected M or B")]
    BadDiagnosis { row: usize, value: String },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split index {index} out of range for {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
    #[error("reading dataset: {0}")]
    Io(String),
}

/// Per-column statistics fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    /// `(mean, population std)` per feature column.
    pub stats: Vec<(f64, f64)>,
    /// Columns whose training std fell below 1e-12; these were centered but
    /// not scaled.
    pub degenerate: Vec<usize>,
}

/// Feature matrix, binary labels (1 = malignant, 0 = benign), and record ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    ids: Vec<String>,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Standardization statistics, present after [`standardize`].
    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let malignant = self.labels.iter().filter(|&&y| y == 1).count();
        (malignant, self.labels.len() - malignant)
    }
}

/// Seeded stratified train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    /// Row indices, ascending.
    pub train: Vec<usize>,
    /// Row indices, ascending; disjoint from `train` and jointly covering
    /// all rows.
    pub test: Vec<usize>,
    pub seed: u64,
    /// Test fraction the split was built with.
    pub ratio: f64,
}

/// Parse WDBC-format CSV content.
pub fn parse_wdbc(input: &str) -> Result<Dataset, DataError> {
    let mut features: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut ids: Vec<String> = Vec::new();

    for (line_index, raw_line) in input.lines().enumerate() {
        let row = line_index + 1;
        let line = raw_line.trim_end_matches('\r');
        let fields: Vec<&str> = line.split(',').collect();

        if row == 1 && looks_like_header(&fields) {
            continue;
        }
        if fields.len() != EXPECTED_FIELDS {
            return Err(DataError::ColumnCount {
                row,
                found: fields.len(),
            });
        }
        let label = match fields[1] {
            "M" => 1u8,
            "B" => 0u8,
            other => {
                return Err(DataError::BadDiagnosis {
                    row,
                    value: other.to_string(),
                })
            }
        };
        let mut parsed = Vec::with_capacity(FEATURE_COLUMNS);
        for (offset, field) in fields[2..].iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| DataError::BadNumber {
                row,
                field: offset + 3,
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::BadNumber {
                    row,
                    field: offset + 3,
                    value: field.to_string(),
                });
            }
            parsed.push(value);
        }
        ids.push(fields[0].to_string());
        labels.push(label);
        features.extend_from_slice(&parsed);
    }

    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let n = labels.len();
    let features = Array2::from_shape_vec((n, FEATURE_COLUMNS), features)
        .expect("row-major feature buffer matches shape");
    Ok(Dataset {
        features,
        labels,
        ids,
        standardization: None,
    })
}

/// Header heuristic: second field is not a diagnosis character and at least
/// one of the remaining fields is not numeric. A data row with a wrong
/// diagnosis but numeric features still errors instead of being skipped.
fn looks_like_header(fields: &[&str]) -> bool {
    if fields.len() < 2 || matches!(fields[1], "M" | "B") {
        return false;
    }
    fields[2..]
        .iter()
        .any(|f| f.trim().parse::<f64>().is_err())
}

/// Load a WDBC-format CSV from disk.
pub fn load_wdbc(path: &Path) -> Result<Dataset, DataError> {
    let content =
        std::fs::read_to_string(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    parse_wdbc(&content)
}

/// Stratified shuffle split.
///
/// Within each class (label 0 first, then label 1), row indices in file
/// order are shuffled by one continuous [`SplitMix64`] stream seeded with
/// `seed`, and the first `ceil(test_fraction * n_class)` go to test. Index
/// lists are returned sorted ascending. Deterministic for a fixed seed.
pub fn split(dataset: &Dataset, seed: u64, test_fraction: f64) -> Result<SplitIndices, DataError> {
    if !test_fraction.is_finite() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(DataError::BadFraction(test_fraction));
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut indices: Vec<usize> = dataset
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        rng.shuffle(&mut indices);
        let n_test = (test_fraction * indices.len() as f64).ceil() as usize;
        test.extend_from_slice(&indices[..n_test]);
        train.extend_from_slice(&indices[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        seed,
        ratio: test_fraction,
    })
}

/// Standardize features with statistics fitted on the training rows only.
///
/// Every column of both train and test rows is transformed as
/// `(x - mean) / std` with the population std (divide by n) of the training
/// rows. Columns with std below 1e-12 are centered but left unscaled and
/// reported in [`Standardization::degenerate`]. No statistic of any test row
/// influences the transform.
pub fn standardize(dataset: &Dataset, split: &SplitIndices) -> Result<Dataset, DataError> {
    let rows = dataset.n_rows();
    for &index in split.train.iter().chain(split.test.iter()) {
        if index >= rows {
            return Err(DataError::IndexOutOfRange { index, rows });
        }
    }

    let n_train = split.train.len() as f64;
    let cols = dataset.n_features();
    let mut stats = Vec::with_capacity(cols);
    let mut degenerate = Vec::new();
    for col in 0..cols {
        let mean: f64 = split
            .train
            .iter()
            .map(|&i| dataset.features[(i, col)])
            .sum::<f64>()
            / n_train;
        let var: f64 = split
            .train
            .iter()
            .map(|&i| {
                let d = dataset.features[(i, col)] - mean;
                d * d
            })
            .sum::<f64>()
            / n_train;
        let std = var.sqrt();
        if std < DEGENERATE_STD {
            degenerate.push(col);
            stats.push((mean, 1.0));
        } else {
            stats.push((mean, std));
        }
    }

    let mut features = dataset.features.clone();
    for mut row in features.outer_iter_mut() {
        for (col, value) in row.iter_mut().enumerate() {
            let (mean, std) = stats[col];
            *value = (*value - mean) / std;
        }
    }

    Ok(Dataset {
        features,
        labels: dataset.labels.clone(),
        ids: dataset.ids.clone(),
        standardization: Some(Standardization { stats, degenerate }),
    })
}

/// Write the split manifest CSV: header `index,role`, one row per dataset
/// row in ascending index order, role `train` or `test`.
pub fn write_split_manifest<W: Write>(mut out: W, split: &SplitIndices) -> std::io::Result<()> {
    writeln!(out, "index,role")?;
    let mut roles: Vec<(usize, &str)> = split
        .train
        .iter()
        .map(|&i| (i, "train"))
        .chain(split.test.iter().map(|&i| (i, "test")))
        .collect();
    roles.sort_unstable_by_key(|&(i, _)| i);
    for (index, role) in roles {
        writeln!(out, "{index},{role}")?;
    }
    Ok(())
}
