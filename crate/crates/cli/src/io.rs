//! CSV datasets, JSON cost files and model bundles.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use adacos_core::{Bundle, CostModel, Dataset};
use serde::{Deserialize, Serialize};

/// Version of the bundle file layout.
pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] adacos_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() || t == "NA" {
        None
    } else {
        t.parse().ok()
    }
}

/// Reads a CSV with a header row. Every column except `label_column` is a
/// covariate, in header order; empty and `NA` cells are missing.
pub fn read_dataset<R: Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| IoError::Format(format!("no label column {label_column:?}")))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                let v = parse_cell(cell).ok_or_else(|| {
                    IoError::Format(format!("row {}: label {cell:?} is not a number", row + 1))
                })?;
                if v != 0.0 && v != 1.0 {
                    return Err(adacos_core::Error::NonBinaryLabel { row, value: v }.into());
                }
                labels.push(v as u8);
            } else {
                let v = match parse_cell(cell) {
                    Some(v) => v,
                    None if cell.trim().is_empty() || cell.trim() == "NA" => f64::NAN,
                    None => {
                        return Err(IoError::Format(format!(
                            "row {}: cannot parse {cell:?} in column {}",
                            row + 1,
                            header[i]
                        )))
                    }
                };
                values.push(v);
            }
        }
    }
    Ok(Dataset::new(values, labels, names)?)
}

pub fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset> {
    read_dataset(BufReader::new(open(path)?), label_column)
}

/// Reads a cost document: covariate name → cost, plus `fp_cost`, optional
/// `fn_cost` and optional `correct_cost`. `tn_cost` / `tp_cost` are accepted
/// in place of `correct_cost` when they agree.
pub fn read_costs<R: Read>(reader: R, names: &[String]) -> Result<CostModel> {
    let mut doc: BTreeMap<String, f64> = serde_json::from_reader(reader)?;
    let fp_cost = doc
        .remove("fp_cost")
        .ok_or_else(|| IoError::Format("cost file has no fp_cost".into()))?;
    let fn_cost = doc.remove("fn_cost");
    let mut correct = doc.remove("correct_cost");
    for key in ["tn_cost", "tp_cost"] {
        if let Some(v) = doc.remove(key) {
            match correct {
                Some(c) if c != v => {
                    return Err(adacos_core::Error::InvalidCosts(format!(
                        "correct-classification costs differ ({c} vs {v}); only equal costs are supported"
                    ))
                    .into())
                }
                _ => correct = Some(v),
            }
        }
    }
    let mut covariate_costs = Vec::with_capacity(names.len());
    for name in names {
        let c = doc
            .remove(name)
            .ok_or_else(|| IoError::Format(format!("no cost for covariate {name:?}")))?;
        covariate_costs.push(c);
    }
    if let Some(extra) = doc.keys().next() {
        return Err(IoError::Format(format!("cost for unknown covariate {extra:?}")));
    }
    Ok(CostModel::new(covariate_costs, fp_cost, fn_cost, correct.unwrap_or(0.0))?)
}

pub fn load_costs(path: &Path, names: &[String]) -> Result<CostModel> {
    read_costs(BufReader::new(open(path)?), names)
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    format_version: u32,
    bundle: Bundle,
}

pub fn save_bundle(path: &Path, bundle: &Bundle) -> Result<()> {
    let file = File::create(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let doc = BundleFile {
        format_version: BUNDLE_FORMAT_VERSION,
        bundle: bundle.clone(),
    };
    serde_json::to_writer(BufWriter::new(file), &doc)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<Bundle> {
    let doc: BundleFile = serde_json::from_reader(BufReader::new(open(path)?))?;
    if doc.format_version != BUNDLE_FORMAT_VERSION {
        return Err(IoError::Format(format!(
            "bundle format {} is not supported (expected {BUNDLE_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    Ok(doc.bundle)
}
