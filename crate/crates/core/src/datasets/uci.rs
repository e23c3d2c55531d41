use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{blank_card, Dataset, DatasetError, Recipe, Task};
use crate::encoding::{DataPoint, Input, Label};

/// Declares how to read one comma-separated UCI table.
///
/// Committed schemas live next to the data as `<name>.schema.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub name: String,
    /// Lines skipped before the first row.
    #[serde(default)]
    pub header_lines: usize,
    pub n_columns: usize,
    pub label_column: usize,
    /// Columns used as features, in order; all non-label columns when absent.
    #[serde(default)]
    pub feature_columns: Option<Vec<usize>>,
    pub n_classes: usize,
    pub n_test: usize,
    pub split_seed: u64,
}

impl CsvSchema {
    pub fn from_toml_file(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        toml::from_str(&text).map_err(|e| DatasetError::Malformed {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }

    fn features(&self) -> Vec<usize> {
        self.feature_columns
            .clone()
            .unwrap_or_else(|| (0..self.n_columns).filter(|&c| c != self.label_column).collect())
    }
}

/// Reads the table, min-max scales each selected column to `[0, 1]` over all
/// rows (a constant column maps to 0) and returns the unsplit dataset.
/// Use [`Dataset::split`] with `schema.n_test` and `schema.split_seed` for the split.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let bad = |line: usize, m: String| DatasetError::Malformed { path: path.to_path_buf(), line, message: m };
    let cols = schema.features();
    if schema.label_column >= schema.n_columns || cols.iter().any(|&c| c >= schema.n_columns) {
        return Err(DatasetError::Invalid(format!("{}: schema column beyond n_columns", schema.name)));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate().skip(schema.header_lines) {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != schema.n_columns {
            return Err(bad(lineno, format!("expected {} columns, got {}", schema.n_columns, fields.len())));
        }
        let row = cols
            .iter()
            .map(|&c| fields[c].parse::<f64>().map_err(|_| bad(lineno, format!("column {c}: {:?} is not a number", fields[c]))))
            .collect::<Result<Vec<_>, _>>()?;
        let label: usize = fields[schema.label_column]
            .parse()
            .map_err(|_| bad(lineno, format!("label {:?} is not a class index", fields[schema.label_column])))?;
        if label >= schema.n_classes {
            return Err(bad(lineno, format!("label {label} outside 0..{}", schema.n_classes)));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty(path.display().to_string()));
    }
    let d = cols.len();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|j| rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[j]), b.max(r[j]))))
        .unzip();
    let samples = rows
        .into_iter()
        .zip(labels)
        .map(|(r, y)| {
            let x = r
                .iter()
                .enumerate()
                .map(|(j, v)| if hi[j] > lo[j] { (v - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect();
            DataPoint { input: Input::Features(x), label: Label::Class(y) }
        })
        .collect();
    let task = if schema.n_classes == 2 { Task::Binary } else { Task::Multiclass(schema.n_classes) };
    let card = blank_card(
        &schema.name,
        &path.display().to_string(),
        &format!("columns {cols:?}, per-column min-max scaling to [0, 1] over all rows"),
        Recipe::Csv { path: path.to_path_buf(), schema: schema.clone() },
    );
    Ok(Dataset::new(samples, task, card))
}
