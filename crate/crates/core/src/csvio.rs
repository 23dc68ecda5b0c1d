//! Minimal helpers for the `#`-header CSV files produced by this crate.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `#key=value` header lines followed by a column header and data rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvDoc {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    /// Data rows with the 1-based source line number.
    pub rows: Vec<(usize, Vec<String>)>,
}

impl CsvDoc {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, fields: Vec<String>) {
        let line = self.meta.len() + 2 + self.rows.len();
        self.rows.push((line, fields));
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "#{k}={v}");
        }
        if !self.columns.is_empty() {
            let _ = writeln!(out, "{}", self.columns.join(","));
        }
        for (_, row) in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Parses a document whose first non-`#` line must equal `columns` (when given).
    pub fn parse(text: &str, columns: Option<&[&str]>) -> Result<Self> {
        let mut doc = CsvDoc::default();
        let mut saw_header = columns.is_none();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    doc.meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            if !saw_header {
                let expected = columns.unwrap_or_default();
                if fields.iter().map(String::as_str).ne(expected.iter().copied()) {
                    return Err(Error::parse(
                        format!("line {lineno}"),
                        format!("expected header {:?}, found {:?}", expected.join(","), line),
                    ));
                }
                doc.columns = fields;
                saw_header = true;
                continue;
            }
            if !doc.columns.is_empty() && fields.len() != doc.columns.len() {
                return Err(Error::parse(
                    format!("line {lineno}"),
                    format!("expected {} fields, found {}", doc.columns.len(), fields.len()),
                ));
            }
            doc.rows.push((lineno, fields));
        }
        if !saw_header {
            return Err(Error::parse("end of input", "missing column header"));
        }
        Ok(doc)
    }
}

pub fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("line {line}"), format!("{what}: not a number: {field:?}")))
}
