//! Plot-ready tables and their CSV form.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // `{:?}` is the shortest representation that parses back to the
            // same bits.
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn parse(field: &str) -> Cell {
        if field.is_empty() {
            Cell::Empty
        } else if let Ok(i) = field.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(v) = field.parse::<f64>() {
            Cell::Num(v)
        } else {
            Cell::Text(field.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Header plus rows of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> CliResult<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::UnknownColumn {
                column: name.to_string(),
                available: self.columns.join(","),
            })
    }

    /// Values of a numeric column; text and empty cells become `None`.
    pub fn column(&self, name: &str) -> CliResult<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].as_f64()).collect())
    }

    /// The listed columns, in the listed order.
    pub fn select<S: AsRef<str>>(&self, columns: &[S]) -> CliResult<Table> {
        let idx = columns
            .iter()
            .map(|c| self.column_index(c.as_ref()))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Table {
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j].clone()).collect()).collect(),
        })
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io("flushing CSV", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    pub fn from_csv(text: &str) -> CliResult<Table> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut table = Table::new(&columns);
        for rec in r.records() {
            table.push(rec?.iter().map(Cell::parse).collect());
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["t", "cal_direct", "cal_law", "gap"]);
        t.push(vec![0.05.into(), 0.1 .into(), (1.0 / 3.0).into(), 1e-300.into()]);
        t.push(vec![0.2.into(), Cell::Empty, f64::MIN_POSITIVE.into(), (-2.5e17).into()]);
        t
    }

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let t = sample();
        let text = t.to_csv().unwrap();
        assert!(text.ends_with('\n') && !text.contains("\r\n"));
        assert_eq!(text.lines().next(), Some("t,cal_direct,cal_law,gap"));
        let back = Table::from_csv(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn unknown_column_is_reported() {
        let err = sample().select(&["t", "nope"]).unwrap_err();
        assert!(matches!(err, CliError::UnknownColumn { ref column, .. } if column == "nope"));
        assert_eq!(sample().select(&["gap", "t"]).unwrap().columns(), ["gap", "t"]);
    }
}
