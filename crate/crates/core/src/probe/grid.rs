//! Plain-text labelled matrices: a `rows` line and a `cols` line of
//! tab-separated labels, then one line of space-separated values per row.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelledGrid {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl LabelledGrid {
    pub fn validate(&self) -> Result<()> {
        if self.cells.len() != self.rows.len() {
            return Err(Error::shape("grid rows", self.rows.len(), self.cells.len()));
        }
        for (i, r) in self.cells.iter().enumerate() {
            if r.len() != self.cols.len() {
                return Err(Error::Shape {
                    op: "grid row",
                    expected: format!("{} values", self.cols.len()),
                    actual: format!("{} values in row {i}", r.len()),
                });
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("rows");
        for r in &self.rows {
            out.push('\t');
            out.push_str(r);
        }
        out.push_str("\ncols");
        for c in &self.cols {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.cells {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    /// Rejects ragged or mislabelled matrices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut labels = |key: &str| -> Result<Vec<String>> {
            let (i, line) = lines.next().ok_or_else(|| Error::Parse { line: 0, message: format!("missing {key} line") })?;
            let mut parts = line.split('\t');
            if parts.next() != Some(key) {
                return Err(Error::Parse { line: i + 1, message: format!("expected `{key}` header") });
            }
            Ok(parts.map(str::to_string).collect())
        };
        let rows = labels("rows")?;
        let cols = labels("cols")?;
        let mut cells = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            cells.push(row);
        }
        let grid = LabelledGrid { rows, cols, cells };
        grid.validate()?;
        Ok(grid)
    }
}
