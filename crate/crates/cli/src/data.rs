//! CSV input/output. The dialect is fixed: comma separated, UTF-8, header
//! row required, '.' decimal point, every cell numeric. Categorical columns
//! must be pre-encoded by the user.
//!
//! Output files are written to a sibling partial file and renamed into place,
//! so a failed command never leaves a truncated output behind.

use crate::CliError;
use anovatv::FittedModel;
use ndarray::{Array1, Array2};
use std::fs;
use std::path::{Path, PathBuf};

/// A fully numeric table with unique column names.
pub struct NumericTable {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Feature matrix, response vector, and feature names in file order.
pub type SplitTable = (Array2<f64>, Array1<f64>, Vec<String>);

impl NumericTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Split off the response column; the remaining columns become the
    /// feature matrix in file order.
    pub fn split_response(&self, response: &str) -> Result<SplitTable, CliError> {
        let Some(r) = self.column_index(response) else {
            return Err(CliError::data(format!(
                "{}: response column '{response}' not found (columns: {})",
                self.path.display(),
                self.headers.join(", ")
            )));
        };
        let n = self.n_rows();
        let p = self.headers.len() - 1;
        let mut x = Array2::<f64>::zeros((n, p));
        let mut y = Array1::<f64>::zeros(n);
        for (i, row) in self.rows.iter().enumerate() {
            y[i] = row[r];
            for (k, &v) in row.iter().enumerate() {
                if k < r {
                    x[(i, k)] = v;
                } else if k > r {
                    x[(i, k - 1)] = v;
                }
            }
        }
        let names: Vec<String> = self
            .headers
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != r)
            .map(|(_, h)| h.clone())
            .collect();
        Ok((x, y, names))
    }

    /// Columns selected by name, in the order given.
    pub fn select_columns(&self, names: &[String]) -> Result<Array2<f64>, CliError> {
        let mut indices = Vec::with_capacity(names.len());
        let mut missing = Vec::new();
        for name in names {
            match self.column_index(name) {
                Some(c) => indices.push(c),
                None => missing.push(name.as_str()),
            }
        }
        if !missing.is_empty() {
            return Err(CliError::data(format!(
                "{}: missing column(s): {}",
                self.path.display(),
                missing.join(", ")
            )));
        }
        let mut x = Array2::<f64>::zeros((self.n_rows(), names.len()));
        for (i, row) in self.rows.iter().enumerate() {
            for (k, &c) in indices.iter().enumerate() {
                x[(i, k)] = row[c];
            }
        }
        Ok(x)
    }
}

pub fn read_csv(path: &Path) -> Result<NumericTable, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(CliError::data(format!(
            "{}: a header row with column names is required",
            path.display()
        )));
    }
    for (k, h) in headers.iter().enumerate() {
        if h.is_empty() {
            return Err(CliError::data(format!(
                "{}: column {} has an empty name",
                path.display(),
                k + 1
            )));
        }
        if headers[..k].contains(h) {
            return Err(CliError::data(format!(
                "{}: duplicate column name '{h}'",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = i + 2; // 1-based, after the header
        if record.len() != headers.len() {
            return Err(CliError::data(format!(
                "{}: line {line} has {} field(s), expected {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::data(format!(
                    "{}: line {line}, column '{}': '{field}' is not numeric",
                    path.display(),
                    headers[k]
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(NumericTable {
        path: path.to_path_buf(),
        headers,
        rows,
    })
}

/// Rebuild an input matrix of the width the model was trained on, filling
/// each included covariate by name and leaving excluded positions at zero
/// (they are never read).
pub fn matrix_for_model(
    table: &NumericTable,
    model: &FittedModel,
) -> Result<Array2<f64>, CliError> {
    let selected = table.select_columns(&model.covariate_names)?;
    let mut x = Array2::<f64>::zeros((table.n_rows(), model.n_input_columns));
    for (pos, &j) in model.included.iter().enumerate() {
        x.column_mut(j).assign(&selected.column(pos));
    }
    Ok(x)
}

/// Render a CSV in memory; numbers use the shortest representation that
/// parses back to the same value, so files are reproducible byte-for-byte.
pub fn csv_bytes<I>(headers: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    let render = |e: csv::Error| CliError {
        class: "io",
        message: format!("rendering CSV: {e}"),
        code: 1,
    };
    writer.write_record(headers).map_err(render)?;
    for row in rows {
        writer.write_record(&row).map_err(render)?;
    }
    writer.into_inner().map_err(|e| CliError {
        class: "io",
        message: format!("rendering CSV: {e}"),
        code: 1,
    })
}

fn partial_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{name}.partial{}", std::process::id()))
}

/// Write every output or none: all payloads are staged as sibling partial
/// files first, then renamed into place; any failure removes the staged
/// files and leaves existing outputs untouched.
pub fn write_outputs(outputs: &[(&Path, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged: Vec<(PathBuf, &Path)> = Vec::with_capacity(outputs.len());
    let clean = |staged: &[(PathBuf, &Path)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, bytes) in outputs {
        let tmp = partial_path(path);
        if let Err(e) = fs::write(&tmp, bytes) {
            clean(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(path, e));
        }
        staged.push((tmp, path));
    }
    for k in 0..staged.len() {
        let (tmp, path) = &staged[k];
        if let Err(e) = fs::rename(tmp, path) {
            clean(&staged[k..]);
            return Err(CliError::io(path, e));
        }
    }
    Ok(())
}

/// Shortest round-trip decimal form of a value (matches Rust's float
/// formatting, which CSV readers parse back to the identical bits).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
