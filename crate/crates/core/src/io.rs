//! Plain-text dataset formats.
//!
//! * Series: one decimal real per line, no header.
//! * Genotype matrix: one subject per line, whitespace-separated integer
//!   symbols, optional first line `# alphabet=σ`. Without the header the
//!   alphabet is `max(2, largest symbol + 1)`.
//!
//! Reals are written in Rust's shortest round-trip decimal form, so
//! `load(save(x)) == x` bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::datagen::{GenotypeMatrix, TimeSeries};
use crate::error::{Error, Result};
use crate::matrix::SymbolMatrix;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_series(text: &str, path: &Path) -> Result<TimeSeries> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        let v: f64 = token.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("not a number: {token:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("non-finite value {token:?}"),
            });
        }
        values.push(v);
    }
    TimeSeries::new(values)
}

pub fn load_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    parse_series(&read(path)?, path)
}

pub fn format_series(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(series.len() * 20);
    for v in series.values() {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

pub fn save_series(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_series(series))
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<GenotypeMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut declared: Option<usize> = None;
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if rows.is_empty() && declared.is_none() {
                if let Some(v) = comment.trim().strip_prefix("alphabet=") {
                    let sigma: usize = v
                        .trim()
                        .parse()
                        .map_err(|_| err(lineno, format!("bad alphabet size {v:?}")))?;
                    declared = Some(sigma);
                }
            }
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u8>()
                    .map_err(|_| err(lineno, format!("not a symbol index: {tok:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Shape {
                    path: path.to_path_buf(),
                    line: lineno,
                    expected: w,
                    got: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(0, "matrix file has no rows".into()));
    }
    let max = rows.iter().flatten().copied().max().unwrap_or(0) as usize;
    let alphabet = declared.unwrap_or((max + 1).max(2));
    Ok(GenotypeMatrix::new(SymbolMatrix::from_rows(
        &rows, alphabet,
    )?))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<GenotypeMatrix> {
    let path = path.as_ref();
    parse_matrix(&read(path)?, path)
}

pub fn format_matrix(matrix: &GenotypeMatrix) -> String {
    let m = matrix.as_matrix();
    let mut out = format!("# alphabet={}\n", m.alphabet());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|s| s.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_matrix(matrix: &GenotypeMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_matrix(matrix))
}
