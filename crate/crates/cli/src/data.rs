//! CSV input: a header row, numeric columns, one of them the response.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct CsvData {
    pub response: String,
    /// Feature names in file order, response removed.
    pub features: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

pub fn read_csv(path: &Path, response: &str) -> Result<CsvData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: bad header row: {e}", path.display())))?
        .clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();
    if names.iter().all(|h| h.is_empty()) {
        return Err(CliError::Input(format!("{} is empty", path.display())));
    }
    let ycol = names
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::Input(format!("response column '{response}' not found in {}", path.display())))?;
    if names.iter().filter(|h| *h == response).count() > 1 {
        return Err(CliError::Input(format!("response column '{response}' appears twice")));
    }
    let features: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ycol)
        .map(|(_, h)| h.clone())
        .collect();
    if features.is_empty() {
        return Err(CliError::Input("data has no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if record.len() != names.len() {
            return Err(CliError::Input(format!(
                "line {line}: expected {} fields, found {}",
                names.len(),
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Input(format!("line {line}, column '{}': '{field}' is not a number", names[j])))?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("line {line}, column '{}': non-finite value", names[j])));
            }
            if j == ycol {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(CliError::Input(format!("{} has no data rows", path.display())));
    }
    Ok(CsvData {
        response: response.to_string(),
        x: DMatrix::from_row_slice(y.len(), features.len(), &values),
        y: DVector::from_vec(y),
        features,
    })
}
