//! Input files: survival CSV, design point lists, and study summaries.
//!
//! Numbers are parsed with Rust's `f64::from_str`: a `.` decimal point, an
//! optional exponent, no thousands separators and no locale. Surrounding
//! whitespace is trimmed; non-finite values are rejected.

use std::fs;
use std::io::Read;
use std::path::Path;

use relinfo::combine::StudySummary;
use relinfo::cox::{SurvivalDataset, SurvivalRecord};
use relinfo::design::Design;

use crate::error::{CliError, CliResult};

fn read_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn parse_finite(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a survival CSV with header `time,status,cov1,...,covK`; status is
/// `1` for an event and `0` for a censored time.
pub fn read_survival_csv(path: &Path) -> CliResult<SurvivalDataset> {
    let file = fs::File::open(path).map_err(|e| read_error(path, e))?;
    parse_survival_csv(file, &path.display().to_string())
}

pub fn parse_survival_csv<R: Read>(reader: R, name: &str) -> CliResult<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let input_error = |line: u64, column: String, message: String| CliError::Input {
        file: name.to_string(),
        line,
        column,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| input_error(1, "-".into(), e.to_string()))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if names.len() < 3 || names[0] != "time" || names[1] != "status" {
        return Err(input_error(
            1,
            "1".into(),
            format!("header must be time,status,cov1..covK with at least one covariate, got '{}'", names.join(",")),
        ));
    }
    let column = |i: usize| format!("{} ({})", i + 1, names[i]);

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            let message = match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    format!("expected {expected_len} fields, found {len}")
                }
                _ => e.to_string(),
            };
            input_error(line, "-".into(), message)
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let time = parse_finite(&row[0])
            .filter(|t| *t > 0.0)
            .ok_or_else(|| input_error(line, column(0), format!("time must be a positive finite number, got '{}'", &row[0])))?;
        let event = match row[1].trim() {
            "1" => true,
            "0" => false,
            other => return Err(input_error(line, column(1), format!("status must be 1 (event) or 0 (censored), got '{other}'"))),
        };
        let covariates = (2..row.len())
            .map(|i| {
                parse_finite(&row[i]).ok_or_else(|| input_error(line, column(i), format!("covariate must be a finite number, got '{}'", &row[i])))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        records.push(if event {
            SurvivalRecord::event(time, covariates)
        } else {
            SurvivalRecord::censored(time, covariates)
        });
    }
    Ok(SurvivalDataset::new(records)?)
}

/// Reads design points, one per line; blank lines and `#` comments are skipped.
pub fn read_design_file(path: &Path) -> CliResult<Design> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        points.push(parse_finite(content).ok_or_else(|| CliError::Input {
            file: path.display().to_string(),
            line: i as u64 + 1,
            column: "1".into(),
            message: format!("design point must be a finite number, got '{content}'"),
        })?);
    }
    Ok(Design::new(points)?)
}

/// Reads a JSON array of study summaries; unknown keys are rejected.
pub fn read_studies(path: &Path) -> CliResult<Vec<StudySummary>> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input {
        file: path.display().to_string(),
        line: e.line() as u64,
        column: e.column().to_string(),
        message: e.to_string(),
    })
}

/// `"a,b,c"` as a vector.
pub fn parse_vector(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| parse_finite(v).ok_or_else(|| CliError::Config(format!("{what}: cannot parse '{v}' as a finite number"))))
        .collect()
}

/// `"a,b;c,d"` as rows.
pub fn parse_rows(text: &str, what: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';').map(|row| parse_vector(row, what)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<SurvivalDataset> {
        parse_survival_csv(text.as_bytes(), "mem.csv")
    }

    #[test]
    fn parses_valid_file() {
        let d = parse("time,status,cov1,cov2\n1.5,1,0,2.5\n2e0,0,1,-1\n 3 , 1 , 0.5 , 0\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.covariate_dim(), 2);
        assert_eq!(d.n_events(), 2);
        assert_eq!(d.records()[1].time, 2.0);
    }

    #[test]
    fn errors_name_line_and_column() {
        let e = parse("time,status,cov1\n1,1,0\n2,1,abc\n").unwrap_err().to_string();
        assert!(e.contains("mem.csv") && e.contains("line 3") && e.contains("column 3 (cov1)"), "{e}");
        let e = parse("time,status,cov1\n1,2,0\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("column 2 (status)"), "{e}");
        let e = parse("time,status,cov1\n-1,1,0\n").unwrap_err().to_string();
        assert!(e.contains("column 1 (time)"), "{e}");
        let e = parse("time,status,cov1\n1,1,0\n2,1\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("expected 3 fields"), "{e}");
        let e = parse("t,status,cov1\n1,1,0\n").unwrap_err().to_string();
        assert!(e.contains("header"), "{e}");
    }

    #[test]
    fn rejects_locale_formats_and_non_finite() {
        assert!(parse("time,status,cov1\n\"1,5\",1,0\n").is_err());
        assert!(parse("time,status,cov1\n1,1,inf\n").is_err());
        assert!(parse("time,status,cov1\n1,1,NaN\n").is_err());
    }

    #[test]
    fn vectors_and_rows() {
        assert_eq!(parse_rows("0,1;1,0.5", "x").unwrap(), vec![vec![0.0, 1.0], vec![1.0, 0.5]]);
        assert!(parse_vector("1,,2", "x").is_err());
    }
}
