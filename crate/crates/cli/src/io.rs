//! Dense CSV and MatrixMarket matrix files.
//!
//! CSV files are header-free, one comma-separated row per line, written with
//! 17 significant digits. MatrixMarket `array` and `coordinate` files are read
//! (real, integer or pattern fields; general, symmetric or skew-symmetric
//! layouts); coordinate files are densified. Writing always produces
//! `array real general`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use seminmf::DenseMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Csv,
    #[value(name = "mtx", alias = "matrix-market")]
    MatrixMarket,
}

impl MatrixFormat {
    /// `.mtx` and `.mm` are MatrixMarket; anything else is CSV.
    pub fn detect(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("mtx" | "mm") => MatrixFormat::MatrixMarket,
            _ => MatrixFormat::Csv,
        }
    }
}

pub fn read_matrix(path: &Path, format: Option<MatrixFormat>) -> CliResult<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match format.unwrap_or_else(|| MatrixFormat::detect(path)) {
        MatrixFormat::Csv => parse_csv(&text, path),
        MatrixFormat::MatrixMarket => parse_matrix_market(&text, path),
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix, format: Option<MatrixFormat>) -> CliResult<()> {
    let text = match format.unwrap_or_else(|| MatrixFormat::detect(path)) {
        MatrixFormat::Csv => to_csv(m),
        MatrixFormat::MatrixMarket => to_matrix_market(m),
    };
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn parse_number<T: FromStr>(token: &str, path: &Path, line: usize) -> CliResult<T> {
    token.trim().parse().map_err(|_| CliError::parse(path, line, format!("invalid number '{}'", token.trim())))
}

pub fn parse_csv(text: &str, path: &Path) -> CliResult<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record.iter().map(|t| parse_number::<f64>(t, path, line)).collect::<CliResult<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "empty matrix file"));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

pub fn to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:.16e}", m.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(PartialEq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn parse_matrix_market(text: &str, path: &Path) -> CliResult<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| CliError::parse(path, 1, "empty file"))?;
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(CliError::parse(path, 1, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(CliError::parse(path, 1, format!("unsupported layout '{other}'"))),
    };
    let pattern = match words[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if layout == Layout::Coordinate => true,
        other => return Err(CliError::parse(path, 1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(CliError::parse(path, 1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| CliError::parse(path, 2, "missing size line"))?;
    let dims: Vec<usize> =
        size.split_whitespace().map(|t| parse_number(t, path, size_line)).collect::<CliResult<_>>()?;
    let expected = if layout == Layout::Array { 2 } else { 3 };
    if dims.len() != expected {
        return Err(CliError::parse(path, size_line, format!("size line needs {expected} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 || cols == 0 {
        return Err(CliError::parse(path, size_line, "matrix dimensions must be positive"));
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(CliError::parse(path, size_line, "symmetric layout needs a square matrix"));
    }
    let mut data = vec![0.0; rows * cols];
    let mirror = |data: &mut Vec<f64>, i: usize, j: usize, v: f64| {
        if i != j {
            data[i * rows + j] = match symmetry {
                Symmetry::General => return,
                Symmetry::Symmetric => v,
                Symmetry::Skew => -v,
            };
        }
    };

    match layout {
        Layout::Array => {
            // Column-major, lower triangle only when symmetric.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                slots.extend((start..rows).map(|i| (i, j)));
            }
            let mut count = 0;
            for (line, l) in body {
                for token in l.split_whitespace() {
                    let v: f64 = parse_number(token, path, line)?;
                    let Some(&(i, j)) = slots.get(count) else {
                        return Err(CliError::parse(path, line, "more entries than the size line declares"));
                    };
                    data[j * rows + i] = v;
                    mirror(&mut data, i, j, v);
                    count += 1;
                }
            }
            if count != slots.len() {
                return Err(CliError::parse(path, size_line, format!("expected {} entries, found {count}", slots.len())));
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut count = 0;
            for (line, l) in body {
                let tokens: Vec<&str> = l.split_whitespace().collect();
                let want = if pattern { 2 } else { 3 };
                if tokens.len() != want {
                    return Err(CliError::parse(path, line, format!("expected {want} fields per entry")));
                }
                let i: usize = parse_number(tokens[0], path, line)?;
                let j: usize = parse_number(tokens[1], path, line)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(CliError::parse(path, line, format!("index ({i}, {j}) out of range")));
                }
                let v = if pattern { 1.0 } else { parse_number(tokens[2], path, line)? };
                data[(j - 1) * rows + (i - 1)] += v;
                mirror(&mut data, i - 1, j - 1, v);
                count += 1;
            }
            if count != nnz {
                return Err(CliError::parse(path, size_line, format!("expected {nnz} entries, found {count}")));
            }
        }
    }
    DenseMatrix::from_column_major(rows, cols, data).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

pub fn to_matrix_market(m: &DenseMatrix) -> String {
    let mut out = format!("%%MatrixMarket matrix array real general\n{} {}\n", m.rows(), m.cols());
    for v in m.as_slice() {
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}
