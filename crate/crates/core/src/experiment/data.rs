use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgssm::ObservationSeries;

/// Keep only rows whose `column` parses to `year`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearFilter {
    pub column: String,
    pub year: i64,
}

/// Reads the named numeric columns of a headed CSV file into an observation
/// series, in file order. Cells must be finite numbers; rows are 1-based and
/// count the header.
pub fn load_csv_series(path: &Path, columns: &[String], filter: Option<&YearFilter>) -> Result<ObservationSeries> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument("no columns selected".into()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let idx = columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let year_idx = filter.map(|f| find(&f.column)).transpose()?;

    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = k + 2;
        if let (Some(f), Some(yi)) = (filter, year_idx) {
            let cell = record.get(yi).unwrap_or("");
            let year = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0)
                .ok_or_else(|| Error::Data {
                    path: path.to_path_buf(),
                    row,
                    column: f.column.clone(),
                    reason: format!("`{cell}` is not a year"),
                })?;
            if year as i64 != f.year {
                continue;
            }
        }
        let values = idx
            .iter()
            .zip(columns)
            .map(|(&i, name)| {
                let cell = record.get(i).unwrap_or("");
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data {
                        path: path.to_path_buf(),
                        row,
                        column: name.clone(),
                        reason: if cell.is_empty() {
                            "missing value".into()
                        } else {
                            format!("`{cell}` is not a number")
                        },
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            row: 0,
            column: String::new(),
            reason: "no rows selected".into(),
        });
    }
    ObservationSeries::from_rows(&rows)
}
