//! Rectangular result tables and their CSV form.

use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless quantities.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<Column>,
    rows: Vec<Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the column count"
        );
        self.rows.push(row);
    }

    pub fn push_metadata(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_values(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Comma separated, `#` metadata lines first, then the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        let _ = writeln!(out, "# units={}", units.join(","));
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut units: Option<Vec<String>> = None;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing CSV header".into()))?;
            match line.strip_prefix('#') {
                Some(meta) => {
                    let (k, v) = meta
                        .trim_start()
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad metadata line: {line:?}")))?;
                    if k == "units" {
                        units = Some(v.split(',').map(str::to_string).collect());
                    } else {
                        metadata.push((k.to_string(), v.to_string()));
                    }
                }
                None => break line,
            }
        };
        let names: Vec<&str> = header.split(',').collect();
        let units = units.unwrap_or_else(|| vec![String::new(); names.len()]);
        if units.len() != names.len() {
            return Err(Error::Parse("units line does not match the header".into()));
        }
        let columns = names
            .iter()
            .zip(&units)
            .map(|(n, u)| Column::new(n, u))
            .collect();
        let mut table = ResultTable {
            columns,
            rows: Vec::new(),
            metadata,
        };
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad number in data row {}", i + 1)))?;
            if row.len() != names.len() {
                return Err(Error::Parse(format!(
                    "data row {} has {} cells, expected {}",
                    i + 1,
                    row.len(),
                    names.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}
