//! CSV dataset ingestion: comma-separated numeric cells, UTF-8, optional
//! single header row (auto-detected: a first row with any non-numeric cell
//! is a header). Decimal points only; no thousands separators, no quoting.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use std::path::Path;

/// Which column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseSpec {
    /// One-based column index in file order.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl ResponseSpec {
    /// A spec that parses as a positive integer is an index, anything else
    /// a column name.
    pub fn parse(s: &str) -> ResponseSpec {
        match s.trim().parse::<usize>() {
            Ok(i) if i >= 1 => ResponseSpec::Index(i),
            _ => ResponseSpec::Name(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    /// Names of the predictor columns, in file order with the response
    /// removed; synthesized as x1..xp when the file has no header.
    pub feature_names: Vec<String>,
    pub response_name: String,
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    let trimmed = cell.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell {
            row,
            column,
            cell: trimmed.to_string(),
        }),
    }
}

/// Load a CSV file and split out the response column; the remaining columns
/// form the predictor matrix in file order.
pub fn load_csv(path: &Path, response: &ResponseSpec) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;

    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Error::TooFewRows(0));
    }

    let first_cells: Vec<&str> = lines[0].1.split(',').collect();
    let ncols = first_cells.len();
    // Header detection is purely syntactic; finiteness of data cells is
    // checked separately so "inf" in row 1 is a bad cell, not a header.
    let has_header = first_cells.iter().any(|c| c.trim().parse::<f64>().is_err());

    let column_names: Vec<String> = if has_header {
        first_cells.iter().map(|c| c.trim().to_string()).collect()
    } else {
        (1..=ncols).map(|i| format!("x{i}")).collect()
    };

    let response_col = match response {
        ResponseSpec::Index(i) => {
            if *i < 1 || *i > ncols {
                return Err(Error::MissingResponse(format!("column {i} of {ncols}")));
            }
            i - 1
        }
        ResponseSpec::Name(name) => {
            if !has_header {
                return Err(Error::MissingResponse(format!(
                    "{name} (file has no header row)"
                )));
            }
            column_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingResponse(name.clone()))?
        }
    };

    let data_lines = if has_header { &lines[1..] } else { &lines[..] };
    if data_lines.len() < 2 {
        return Err(Error::TooFewRows(data_lines.len()));
    }

    let n = data_lines.len();
    let p = ncols - 1;
    let mut x = Array2::<f64>::zeros((n, p));
    let mut y = Array1::<f64>::zeros(n);
    for (i, (file_row, line)) in data_lines.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != ncols {
            return Err(Error::RaggedRow {
                row: *file_row,
                expected: ncols,
                actual: cells.len(),
            });
        }
        let mut xj = 0usize;
        for (j, cell) in cells.iter().enumerate() {
            let v = parse_cell(cell, *file_row, j + 1)?;
            if j == response_col {
                y[i] = v;
            } else {
                x[[i, xj]] = v;
                xj += 1;
            }
        }
    }

    let mut feature_names = column_names.clone();
    let response_name = feature_names.remove(response_col);
    Ok(Dataset {
        x,
        y,
        feature_names,
        response_name,
    })
}
