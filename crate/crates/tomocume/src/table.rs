//! Labelled result tables.

/// A table with labelled rows and columns; empty cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl MetricTable {
    pub fn new(corner: &str, columns: Vec<String>) -> Self {
        MetricTable {
            corner: corner.to_owned(),
            columns,
            rows: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(label.into());
        self.values.push(values);
    }

    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.columns.iter().position(|c| c == column)?;
        self.values[i][j]
    }
}
