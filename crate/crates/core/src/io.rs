//! Reading and writing the plain-text file formats.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parses one real value per line; blank lines are skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(i + 1, format!("not a number: `{}`", l.trim())))
        })
        .collect()
}

/// One value per line, shortest round-trip representation.
pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 8);
    for x in v {
        out.push_str(&format!("{x:?}\n"));
    }
    out
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read_text(path)?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_text(path, &format_vector(v))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads and parses any type with a text format (matrices, models).
pub fn read_parsed<T: FromStr<Err = Error>>(path: &Path) -> Result<T> {
    read_text(path)?.parse()
}
