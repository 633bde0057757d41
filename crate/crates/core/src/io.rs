//! Parsers for the comma-separated text formats used by the command line.
//!
//! Lines starting with `#` and blank lines are ignored everywhere. Fields are
//! separated by commas; surrounding whitespace is trimmed.

use nalgebra::{DMatrix, DVector};

use crate::discrete_transport::DiscreteDistribution;
use crate::error::{Error, Result};

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_number(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{field}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_row(line: usize, text: &str) -> Result<Vec<f64>> {
    fields(text)
        .into_iter()
        .map(|f| parse_number(line, f))
        .collect()
}

/// One header row of state labels followed by one row of probabilities.
pub fn parse_distribution(text: &str) -> Result<DiscreteDistribution> {
    let mut lines = content_lines(text);
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing label header".into(),
    })?;
    let labels: Vec<String> = fields(header).into_iter().map(String::from).collect();
    let (ln, row) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing probability row".into(),
    })?;
    let probs = parse_row(ln, row)?;
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            message: "unexpected extra row".into(),
        });
    }
    DiscreteDistribution::new(labels, probs)
}

/// One row of labels followed by one row of reals, returned in label order.
pub fn parse_labeled_row(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut lines = content_lines(text);
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing label header".into(),
    })?;
    let labels: Vec<String> = fields(header).into_iter().map(String::from).collect();
    let (ln, row) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing value row".into(),
    })?;
    let values = parse_row(ln, row)?;
    if values.len() != labels.len() {
        return Err(Error::Parse {
            line: ln,
            message: format!("{} values for {} labels", values.len(), labels.len()),
        });
    }
    Ok((labels, values))
}

/// A rectangular block of numbers.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for (ln, line) in content_lines(text) {
        let row = parse_row(ln, line)?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("row has {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty matrix".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

/// A vector written either as one row or as one column.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let m = parse_matrix(text)?;
    if m.nrows() == 1 {
        Ok(m.row(0).transpose())
    } else if m.ncols() == 1 {
        Ok(m.column(0).into_owned())
    } else {
        Err(Error::Parse {
            line: 0,
            message: format!("expected a vector, got a {}x{} block", m.nrows(), m.ncols()),
        })
    }
}

/// Two numeric columns `x, value`. A single non-numeric header line is skipped.
pub fn parse_two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, (ln, line)) in content_lines(text).enumerate() {
        let f = fields(line);
        if f.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected 2 fields, got {}", f.len()),
            });
        }
        if k == 0 && f[0].parse::<f64>().is_err() {
            continue;
        }
        xs.push(parse_number(ln, f[0])?);
        ys.push(parse_number(ln, f[1])?);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_round_trip() {
        let d = parse_distribution("# rating\nA+, A-, BBB+\n0.25,0.5,0.25\n").unwrap();
        assert_eq!(d.labels(), ["A+", "A-", "BBB+"]);
        assert_eq!(d.probs(), [0.25, 0.5, 0.25]);
    }

    #[test]
    fn matrix_rejects_ragged_rows() {
        assert!(parse_matrix("1,2\n3\n").is_err());
        let m = parse_matrix("1,2\n3,4\n").unwrap();
        assert_eq!(m[(1, 0)], 3.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_matrix("# c\n1,2\n3,x\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "`x` is not a number".into()
            }
        );
    }

    #[test]
    fn vectors_in_either_orientation() {
        assert_eq!(parse_vector("1,2,3").unwrap().len(), 3);
        assert_eq!(parse_vector("1\n2\n3\n").unwrap().len(), 3);
        assert!(parse_vector("1,2\n3,4").is_err());
    }

    #[test]
    fn two_columns_skip_header() {
        let (x, y) = parse_two_columns("x,v\n0,1\n1,2\n").unwrap();
        assert_eq!(x, [0.0, 1.0]);
        assert_eq!(y, [1.0, 2.0]);
    }
}
