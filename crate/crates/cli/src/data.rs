//! CSV dataset ingestion.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use qonsensus::Dataset;

use crate::error::{at, Result, Stage, StageError};

/// Name of the optional ground-truth column.
pub const LABEL_COLUMN: &str = "label";

/// Reads a CSV with a header row. Every column except `label` must be
/// numeric; label values are arbitrary strings, numbered by first appearance.
pub fn load_dataset(path: &Path, standardize: bool) -> Result<Dataset> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let file = std::fs::File::open(path)
        .map_err(|e| StageError::new(Stage::Load, format!("{}: {e}", path.display())))?;
    parse_dataset(&name, file, standardize)
}

pub fn parse_dataset<R: Read>(name: &str, input: R, standardize: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(at(Stage::Load))?.clone();
    let label_col = headers.iter().position(|h| h == LABEL_COLUMN);
    let num_features = headers.len() - usize::from(label_col.is_some());
    if num_features == 0 {
        return Err(StageError::new(Stage::Load, "no feature columns"));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(at(Stage::Load))?;
        let line = i + 2;
        let mut row = Vec::with_capacity(num_features);
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_col {
                let next = label_ids.len();
                labels.push(*label_ids.entry(field.to_string()).or_insert(next));
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                StageError::new(
                    Stage::Load,
                    format!(
                        "line {line}, column {:?}: {field:?} is not a number",
                        &headers[col]
                    ),
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(StageError::new(Stage::Load, "dataset is empty"));
    }
    let labels = label_col.map(|_| labels);
    let dataset = Dataset::new(name, rows, labels).map_err(at(Stage::Load))?;
    Ok(if standardize {
        dataset.standardized()
    } else {
        dataset
    })
}
