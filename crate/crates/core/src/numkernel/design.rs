use std::collections::HashSet;

use nalgebra::DMatrix;

use super::NumError;

/// Dense regressor matrix with named columns.
///
/// Storage is column-major (nalgebra's native layout), so `column(j)` is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    /// Builds a design from labelled columns of equal length.
    pub fn from_columns<S: Into<String>>(columns: Vec<(S, Vec<f64>)>) -> Result<Self, NumError> {
        if columns.is_empty() {
            return Err(NumError::InvalidDesign("design needs at least one column".into()));
        }
        let rows = columns[0].1.len();
        let mut labels = Vec::with_capacity(columns.len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for (label, col) in columns {
            let label = label.into();
            if col.len() != rows {
                return Err(NumError::DimensionMismatch(format!(
                    "column '{label}' has {} rows, expected {rows}",
                    col.len()
                )));
            }
            labels.push(label);
            data.extend_from_slice(&col);
        }
        let cols = labels.len();
        Self::new(DMatrix::from_vec(rows, cols, data), labels)
    }

    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self, NumError> {
        let (rows, cols) = values.shape();
        if cols == 0 {
            return Err(NumError::InvalidDesign("design needs at least one column".into()));
        }
        if rows < cols {
            return Err(NumError::InvalidDesign(format!(
                "design has {rows} rows but {cols} columns"
            )));
        }
        if labels.len() != cols {
            return Err(NumError::DimensionMismatch(format!(
                "{} labels for {cols} columns",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(NumError::InvalidDesign(format!("duplicate column label '{l}'")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(NumError::InvalidDesign(format!(
                "non-finite entry at row {}, column '{}'",
                pos % rows,
                labels[pos / rows]
            )));
        }
        Ok(Self { values, labels })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.rows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Row subset, keeping column order. May fail if too few rows remain.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, NumError> {
        let m = self.values.select_rows(rows.iter());
        Self::new(m, self.labels.clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self, NumError> {
        let m = self.values.select_columns(cols.iter());
        let labels = cols.iter().map(|&j| self.labels[j].clone()).collect();
        Self::new(m, labels)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &DesignMatrix) -> Result<Self, NumError> {
        if self.rows() != other.rows() {
            return Err(NumError::DimensionMismatch(format!(
                "cannot stack {} rows with {} rows",
                self.rows(),
                other.rows()
            )));
        }
        let mut cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(self.cols() + other.cols());
        for (j, l) in self.labels.iter().enumerate() {
            cols.push((l.clone(), self.column(j).to_vec()));
        }
        for (j, l) in other.labels.iter().enumerate() {
            cols.push((l.clone(), other.column(j).to_vec()));
        }
        Self::from_columns(cols)
    }

    /// Row `i` as an owned vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols()).map(|j| self.values[(i, j)]).collect()
    }
}
