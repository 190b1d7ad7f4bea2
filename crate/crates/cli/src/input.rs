//! Matrix file readers.
//!
//! Matrix Market: `coordinate` `real` (or `integer`) `general` files with
//! 1-based indices; the `%%MatrixMarket` banner is optional, `%` lines are
//! comments, and repeated coordinates are summed. Dense CSV: one matrix row
//! per line, comma separated.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use osborne::RawMatrix;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixFormat {
    MatrixMarket,
    DenseCsv,
}

impl MatrixFormat {
    /// `.mtx` and `.mm` are Matrix Market, `.csv` is dense CSV.
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mtx" | "mm" => Some(MatrixFormat::MatrixMarket),
            "csv" => Some(MatrixFormat::DenseCsv),
            _ => None,
        }
    }
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<RawMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text, format)
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<RawMatrix, CliError> {
    match format {
        MatrixFormat::MatrixMarket => parse_matrix_market(text),
        MatrixFormat::DenseCsv => parse_dense_csv(text),
    }
}

fn number<T: FromStr>(token: &str, line: usize, what: &str) -> Result<T, CliError> {
    token
        .parse()
        .map_err(|_| CliError::parse(line, format!("invalid {what} '{token}'")))
}

fn check_banner(banner: &str, line: usize) -> Result<(), CliError> {
    let words: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(CliError::parse(line, "malformed %%MatrixMarket header"));
    }
    if words[1] != "matrix" {
        return Err(CliError::parse(
            line,
            format!("unsupported object '{}'", words[1]),
        ));
    }
    if words[2] != "coordinate" {
        return Err(CliError::parse(
            line,
            format!("unsupported format '{}', expected coordinate", words[2]),
        ));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(CliError::parse(
            line,
            format!("unsupported field '{}', expected real", words[3]),
        ));
    }
    if words[4] != "general" {
        return Err(CliError::parse(
            line,
            format!("unsupported symmetry '{}', expected general", words[4]),
        ));
    }
    Ok(())
}

pub fn parse_matrix_market(text: &str) -> Result<RawMatrix, CliError> {
    let mut size: Option<(usize, usize)> = None;
    let mut sums: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut seen = 0usize;
    let mut last_line = 0;

    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let trimmed = raw_line.trim();
        if k == 0 && trimmed.starts_with("%%") {
            check_banner(trimmed, line)?;
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if tokens.len() != 3 {
                    return Err(CliError::parse(
                        line,
                        "expected size line 'rows cols entries'",
                    ));
                }
                let rows: usize = number(tokens[0], line, "row count")?;
                let cols: usize = number(tokens[1], line, "column count")?;
                let nnz: usize = number(tokens[2], line, "entry count")?;
                if rows != cols {
                    return Err(CliError::parse(
                        line,
                        format!("matrix is {rows}x{cols}, expected square"),
                    ));
                }
                if rows == 0 {
                    return Err(CliError::parse(line, "matrix dimension must be positive"));
                }
                size = Some((rows, nnz));
            }
            Some((n, nnz)) => {
                if tokens.len() != 3 {
                    return Err(CliError::parse(line, "expected entry line 'row col value'"));
                }
                let i: usize = number(tokens[0], line, "row index")?;
                let j: usize = number(tokens[1], line, "column index")?;
                let v: f64 = number(tokens[2], line, "value")?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(CliError::parse(
                        line,
                        format!("entry ({i}, {j}) outside 1..={n}"),
                    ));
                }
                if !v.is_finite() {
                    return Err(CliError::parse(line, format!("value {v} is not finite")));
                }
                seen += 1;
                if seen > nnz {
                    return Err(CliError::parse(line, format!("more than {nnz} entries")));
                }
                *sums.entry((i - 1, j - 1)).or_insert(0.0) += v;
            }
        }
    }

    let (n, nnz) = size.ok_or_else(|| CliError::parse(last_line.max(1), "missing size line"))?;
    if seen != nnz {
        return Err(CliError::parse(
            last_line.max(1),
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    Ok(RawMatrix::new(
        n,
        sums.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
    ))
}

pub fn parse_dense_csv(text: &str) -> Result<RawMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let values = record
            .iter()
            .map(|field| {
                let v: f64 = number(field, line, "value")?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::parse(line, format!("value {v} is not finite")))
                }
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        rows.push((line, values));
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::parse(1, "empty matrix"));
    }
    for (line, values) in &rows {
        if values.len() != n {
            return Err(CliError::parse(
                *line,
                format!(
                    "row has {} columns, expected {n} (matrix must be square)",
                    values.len()
                ),
            ));
        }
    }
    let dense: Vec<Vec<f64>> = rows.into_iter().map(|(_, v)| v).collect();
    Ok(RawMatrix::from_dense(&dense)?)
}
