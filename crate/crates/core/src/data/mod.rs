//! Tabular data: the encoded feature table, file IO, windowed label
//! construction from member histories, and train/test preparation.

mod io;
mod prep;
mod window;

pub use io::{load_table, read_histories, read_table, write_table, InputColumn, InputKind, InputSchema, TableSchema};
pub use prep::{apply_inclusion_criteria, split, standardize, InclusionCriteria, InclusionReport, Scaler};
pub use window::{build_windows, FeatureValue, MemberHistory, MonthRecord, WindowConfig, WindowReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of an encoded feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    /// One-hot indicator produced from a nominal source column.
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }
}

/// Prefix marking rows synthesized by oversampling.
pub const SYNTHETIC_PREFIX: &str = "smote:";

pub fn is_synthetic_id(id: &str) -> bool {
    id.starts_with(SYNTHETIC_PREFIX)
}

/// Rectangular numeric dataset with a binary label and per-row ids.
///
/// Rows are stored row-major. Labels are 1 for churn and 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<Column>,
    label_name: String,
    data: Vec<f64>,
    labels: Vec<u8>,
    row_ids: Vec<String>,
}

impl FeatureTable {
    pub fn new(
        columns: Vec<Column>,
        label_name: impl Into<String>,
        data: Vec<f64>,
        labels: Vec<u8>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        let width = columns.len();
        let n = labels.len();
        if row_ids.len() != n {
            return Err(Error::Validation(format!(
                "{} labels but {} row ids",
                n,
                row_ids.len()
            )));
        }
        if data.len() != n * width {
            return Err(Error::Validation(format!(
                "matrix holds {} values, expected {} rows x {} columns",
                data.len(),
                n,
                width
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Validation(format!("label {bad} outside {{0,1}}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at row {}, column `{}`",
                pos / width.max(1),
                columns[pos % width.max(1)].name
            )));
        }
        let label_name = label_name.into();
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if c.name == label_name || !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(FeatureTable {
            columns,
            label_name,
            data,
            labels,
            row_ids,
        })
    }

    /// Builds a table from numeric column vectors, ids defaulting to row indices.
    pub fn from_columns(
        names: &[&str],
        values: &[Vec<f64>],
        label_name: &str,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Shape {
                expected: names.len(),
                actual: values.len(),
            });
        }
        let n = labels.len();
        for v in values {
            if v.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        let mut data = Vec::with_capacity(n * names.len());
        for i in 0..n {
            data.extend(values.iter().map(|col| col[i]));
        }
        let columns = names.iter().map(|n| Column::numeric(*n)).collect();
        let ids = (0..n).map(|i| i.to_string()).collect();
        FeatureTable::new(columns, label_name, data, labels, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.n_cols();
        (0..self.n_rows()).map(|i| self.data[i * d + j]).collect()
    }

    /// Values of a feature column or of the label, looked up by name.
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        if name == self.label_name {
            return Ok(self.labels.iter().map(|&y| f64::from(y)).collect());
        }
        self.column_index(name)
            .map(|j| self.column(j))
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))
    }

    /// Counts of (label 0, label 1).
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - ones, ones)
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        let d = self.n_cols();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureTable {
            columns: self.columns.clone(),
            label_name: self.label_name.clone(),
            data,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    /// Appends a numeric column at the right edge.
    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<FeatureTable> {
        if values.len() != self.n_rows() {
            return Err(Error::Shape {
                expected: self.n_rows(),
                actual: values.len(),
            });
        }
        let d = self.n_cols();
        let mut data = Vec::with_capacity(self.n_rows() * (d + 1));
        for (i, v) in values.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(*v);
        }
        let mut columns = self.columns.clone();
        columns.push(Column::numeric(name));
        FeatureTable::new(
            columns,
            self.label_name.clone(),
            data,
            self.labels.clone(),
            self.row_ids.clone(),
        )
    }

    /// Replaces the matrix, keeping schema, labels and ids.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> FeatureTable {
        debug_assert_eq!(data.len(), self.data.len());
        FeatureTable {
            data,
            ..self.clone()
        }
    }

    /// Appends rows; used by oversampling.
    pub(crate) fn extend_rows(&mut self, data: &[f64], labels: &[u8], ids: Vec<String>) {
        self.data.extend_from_slice(data);
        self.labels.extend_from_slice(labels);
        self.row_ids.extend(ids);
    }
}
