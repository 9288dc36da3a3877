//! Matrix files: UTF-8 text, a `# rows=<N> cols=<M>` header, then `N` lines
//! of `M` comma-separated decimals. Values are written in the shortest form
//! that parses back to the same `f64`, so a write/read cycle is lossless.
//! Vectors are `N×1` matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}:{line}: expected {expected} {what}, found {found}")]
    Shape {
        path: PathBuf,
        line: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

/// Shortest round-trip representation, switching to exponent notation
/// outside `[1e-5, 1e16)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("# rows={} cols={}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let mut first = true;
        for &x in row.iter() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format_f64(x));
        }
        out.push('\n');
    }
    out
}

fn parse_header(path: &Path, line: &str) -> Result<(usize, usize), MatrixError> {
    let bad = |column: usize, message: &str| MatrixError::Parse {
        path: path.to_path_buf(),
        line: 1,
        column,
        message: message.to_string(),
    };
    let rest = line
        .strip_prefix("# rows=")
        .ok_or_else(|| bad(1, "expected header `# rows=<N> cols=<M>`"))?;
    let (rows, cols) = rest
        .split_once(" cols=")
        .ok_or_else(|| bad(8, "expected ` cols=<M>` after the row count"))?;
    let rows: usize = rows
        .trim()
        .parse()
        .map_err(|_| bad(8, "row count is not a non-negative integer"))?;
    let cols: usize = cols.trim().parse().map_err(|_| {
        bad(
            line.find(" cols=").map_or(1, |p| p + 7),
            "column count is not a non-negative integer",
        )
    })?;
    if rows == 0 || cols == 0 {
        return Err(bad(1, "matrix dimensions must be positive"));
    }
    Ok((rows, cols))
}

pub fn parse_matrix(path: &Path, text: &str) -> Result<DMatrix<f64>, MatrixError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| MatrixError::Parse {
        path: path.to_path_buf(),
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let (rows, cols) = parse_header(path, header.trim_end())?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if seen == rows {
            return Err(MatrixError::Shape {
                path: path.to_path_buf(),
                line: line_no,
                what: "rows",
                expected: rows,
                found: seen + 1,
            });
        }
        let mut count = 0;
        let mut column = 1;
        for field in line.split(',') {
            count += 1;
            if count <= cols {
                let value: f64 = field.trim().parse().map_err(|_| MatrixError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    column,
                    message: format!("`{}` is not a number", field.trim()),
                })?;
                data.push(value);
            }
            column += field.chars().count() + 1;
        }
        if count != cols {
            return Err(MatrixError::Shape {
                path: path.to_path_buf(),
                line: line_no,
                what: "columns",
                expected: cols,
                found: count,
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(MatrixError::Shape {
            path: path.to_path_buf(),
            line: text.lines().count() + 1,
            what: "rows",
            expected: rows,
            found: seen,
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, MatrixError> {
    let text = fs::read_to_string(path).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(path, &text)
}

pub fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<(), MatrixError> {
    fs::write(path, format_matrix(m)).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an `N×1` matrix file as a vector.
pub fn read_vector(path: &Path) -> Result<DVector<f64>, MatrixError> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(MatrixError::Shape {
            path: path.to_path_buf(),
            line: 1,
            what: "columns for a vector",
            expected: 1,
            found: m.ncols(),
        });
    }
    Ok(m.column(0).into_owned())
}

pub fn write_vector(v: &DVector<f64>, path: &Path) -> Result<(), MatrixError> {
    write_matrix(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), path)
}

/// Appends an optional value to a CSV line; `None` leaves the field empty.
pub(crate) fn push_field(line: &mut String, value: Option<f64>) {
    line.push(',');
    if let Some(v) = value {
        let _ = write!(line, "{}", format_f64(v));
    }
}
