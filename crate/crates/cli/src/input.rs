use std::path::Path;

use l1weak_core::threshold::linear_grid;
use l1weak_core::DenseMatrix;

use crate::CliError;

fn parse_records(text: &str, what: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{what}: {e}")))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "{what}: row {}, column {}: `{field}` is not a finite number",
                            r + 1,
                            c + 1
                        ))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Dense matrix from headerless CSV text, one matrix row per line.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix, CliError> {
    let rows = parse_records(text, "matrix")?;
    if rows.is_empty() {
        return Err(CliError::Input("matrix: file is empty".into()));
    }
    DenseMatrix::from_rows(&rows).map_err(CliError::from)
}

/// Vector from headerless CSV text, read in row-major order, so a single
/// row and a single column are both accepted.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = parse_records(text, "vector")?.into_iter().flatten().collect();
    if v.is_empty() {
        return Err(CliError::Input("vector: file is empty".into()));
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    parse_matrix(&read(path)?)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    parse_vector(&read(path)?)
}

/// `lo:hi:steps` → evenly spaced grid including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid `{spec}` must have the form lo:hi:steps"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if steps == 0 || (steps > 1 && !(lo < hi)) || (steps == 1 && lo != hi) {
        return Err(CliError::Usage(format!(
            "grid `{spec}`: need steps >= 1 and lo < hi (lo = hi for a single step)"
        )));
    }
    Ok(linear_grid(lo, hi, steps))
}
