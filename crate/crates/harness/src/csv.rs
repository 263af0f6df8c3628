//! Numeric CSV tables.
//!
//! Floats are written with 17 significant digits in the shortest `%g` form,
//! so every value parses back to the identical bit pattern.

use std::path::Path;

use crate::error::{HarnessError, Result};

/// Header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// C-style `%.17g`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

pub fn write_table(table: &Table, path: &Path) -> Result<()> {
    let width = table.header.len();
    if let Some(i) = table.rows.iter().position(|r| r.len() != width) {
        return Err(HarnessError::table(path, format!("row {i} has {} cells, header has {width}", table.rows[i].len())));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| HarnessError::table(path, e.to_string()))?;
    let wrap = |e: csv::Error| HarnessError::table(path, e.to_string());
    w.write_record(&table.header).map_err(wrap)?;
    for row in &table.rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| HarnessError::table(path, e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| HarnessError::table(path, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut table = Table { header, rows: Vec::new() };
    for record in r.records() {
        let record = record.map_err(|e| HarnessError::table(path, e.to_string()))?;
        table.rows.push(record.iter().map(String::from).collect());
    }
    Ok(table)
}

/// Parses the named columns of every row as floats.
pub fn float_columns(table: &Table, names: &[&str], path: &Path) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = names
        .iter()
        .map(|n| table.column(n).ok_or_else(|| HarnessError::table(path, format!("missing column {n}"))))
        .collect::<Result<_>>()?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            idx.iter()
                .map(|&c| {
                    parse_float(&row[c])
                        .ok_or_else(|| HarnessError::table(path, format!("row {r}: bad number {:?}", row[c])))
                })
                .collect()
        })
        .collect()
}
