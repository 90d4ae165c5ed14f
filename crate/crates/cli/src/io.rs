//! CSV/JSON input and output for the CLI commands.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use odbss::design::Design;
use odbss::{Dataset, Error, Result};

/// Reads a dataset CSV: header row, the named response column, remaining
/// numeric columns as covariates in file order.
pub fn read_dataset(path: &Path, response: &str) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("bad header: {e}")))?
        .clone();
    let response_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("response column '{response}' not found"))
        })?;

    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::InvalidArgument(format!("row {line}: {e}")))?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| {
                Error::InvalidArgument(format!("row {line}, column {col}: {e}"))
            })?;
            if col == response_col {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        x_rows.push(row);
    }
    if x_rows.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let p = x_rows[0].len();
    let x = DMatrix::from_fn(x_rows.len(), p, |i, j| x_rows[i][j]);
    Dataset::new(x, DVector::from_vec(y))
}

/// Reads a candidate-point CSV: header row, all numeric columns.
pub fn read_points(path: &Path) -> Result<Vec<DVector<f64>>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::InvalidArgument(format!("row {line}: {e}")))?;
        let coords: Vec<f64> = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("row {line}: {e}")))
            })
            .collect::<Result<_>>()?;
        points.push(DVector::from_vec(coords));
    }
    Ok(points)
}

pub fn write_design_json(design: &Design, criterion_value: f64, path: &Path) -> Result<()> {
    let json = serde_json::json!({
        "support": design
            .support
            .iter()
            .map(|x| x.iter().cloned().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
        "weights": design.weights,
        "certified": design.certified,
        "criterion_value": criterion_value,
    });
    std::fs::write(path, serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}
