//! Plain CSV tables: every file has one header row followed by numeric rows.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            // `{:?}` keeps shortest round-trip formatting of f64.
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Io(format!("bad number {v:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(Error::Io(format!(
                    "row has {} columns, header has {}",
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

/// Snapshot layout: `x,value` in 1D, `x,y,value` in 2D.
pub fn field_table(field: &Field) -> CsvTable {
    let grid = field.grid();
    let mut table = if grid.dim() == 1 {
        CsvTable::new(&["x", "value"])
    } else {
        CsvTable::new(&["x", "y", "value"])
    };
    for (i, &v) in field.values().iter().enumerate() {
        let p = grid.point(i);
        let mut row = p[..grid.dim()].to_vec();
        row.push(v);
        table.push(row);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn table_round_trips(values in proptest::collection::vec(-1e6f64..1e6, 16)) {
            let dir = tempfile::tempdir().unwrap();
            let grid = Grid::new(1, 2.0, 16).unwrap();
            let field = Field::new(&grid, values).unwrap();
            let table = field_table(&field);
            let path = dir.path().join("f.csv");
            table.write(&path).unwrap();
            let back = CsvTable::read(&path).unwrap();
            prop_assert_eq!(back, table);
        }
    }

    #[test]
    fn two_dimensional_header() {
        let grid = Grid::new(2, 1.0, 8).unwrap();
        let t = field_table(&Field::zeros(&grid));
        assert_eq!(t.header, vec!["x", "y", "value"]);
        assert_eq!(t.rows.len(), 64);
    }
}
