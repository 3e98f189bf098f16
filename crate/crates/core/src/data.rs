//! Numeric containers and CSV ingestion.
//!
//! Matrices are stored column-major (`nalgebra::DMatrix`), which is the access
//! pattern of every per-feature routine downstream.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{JprError, Result};

/// An n × p observation matrix: rows are samples, columns are features.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    feature_names: Option<Vec<String>>,
    centered: bool,
}

impl DataMatrix {
    /// Wraps an observation matrix, requiring n ≥ 2, p ≥ 2 and finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        check_shape(values.nrows(), values.ncols())?;
        Self::from_samples(values)
    }

    /// Like [`DataMatrix::new`] but accepts a single observation row. Generators
    /// use this; the estimators re-check the sample count.
    pub fn from_samples(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(JprError::Shape("empty data matrix".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(JprError::NonFinite("data matrix"));
        }
        Ok(Self {
            values,
            feature_names: None,
            centered: false,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.ncols() {
            return Err(JprError::Shape(format!(
                "{} feature names for {} columns",
                names.len(),
                self.ncols()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Number of observations.
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of features.
    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.values.column(j).into_owned()
    }

    /// The columns other than `j`, in their original order.
    pub fn columns_except(&self, j: usize) -> DMatrix<f64> {
        self.values.clone().remove_column(j)
    }

    /// Scaled Gram matrix XᵀX / n.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.nrows() as f64;
        self.values.tr_mul(&self.values) / n
    }

    /// Name of feature `j`, falling back to its 1-based index.
    pub fn feature_label(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => (j + 1).to_string(),
        }
    }

    /// Subtracts each column's sample mean.
    pub fn center_columns(&self) -> DataMatrix {
        let mut values = self.values.clone();
        let n = values.nrows() as f64;
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
        }
        DataMatrix {
            values,
            feature_names: self.feature_names.clone(),
            centered: true,
        }
    }

    /// Centers and scales every column to unit sample variance (1/n
    /// normalisation). Constant columns are left at zero.
    pub fn standardize_columns(&self) -> DataMatrix {
        let mut out = self.center_columns();
        let n = out.nrows() as f64;
        for mut col in out.values.column_iter_mut() {
            let sd = (col.norm_squared() / n).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        out
    }

    /// True when column `j` is numerically constant.
    pub fn is_degenerate_column(&self, j: usize) -> bool {
        let col = self.values.column(j);
        let mean = col.sum() / col.len() as f64;
        let scale = col.amax().max(1.0);
        col.iter().all(|v| (v - mean).abs() <= 1e-12 * scale)
    }

    /// Returns the index of the first constant column, if any.
    pub fn first_degenerate_column(&self) -> Option<usize> {
        (0..self.ncols()).find(|&j| self.is_degenerate_column(j))
    }

    /// Writes the data as CSV with 17 significant digits, with the header row
    /// when feature names are present.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| JprError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        if let Some(names) = &self.feature_names {
            writeln!(w, "{}", names.join(",")).map_err(io_err)?;
        }
        write_rows(&mut w, &self.values).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

fn check_shape(n: usize, p: usize) -> Result<()> {
    if n < 2 {
        return Err(JprError::Shape(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    if p < 2 {
        return Err(JprError::Shape(format!(
            "need at least 2 features, got {p}"
        )));
    }
    Ok(())
}

/// A dense symmetric matrix (precision, partial-correlation or covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Accepts `m` if it is square and max |m_jk − m_kj| ≤ 1e-10 · max |m|.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(JprError::Shape(format!(
                "expected a square matrix, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(JprError::NonFinite("symmetric matrix"));
        }
        let scale = m.amax();
        let p = m.nrows();
        for j in 0..p {
            for k in (j + 1)..p {
                if (m[(j, k)] - m[(k, j)]).abs() > 1e-10 * scale {
                    return Err(JprError::Shape(format!(
                        "matrix is not symmetric at ({}, {})",
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// The symmetric part (A + Aᵀ)/2, exactly symmetric bit-for-bit.
    pub fn symmetric_part(a: &DMatrix<f64>) -> Self {
        assert!(a.is_square(), "symmetric part of a non-square matrix");
        let p = a.nrows();
        let mut m = a.clone();
        for j in 0..p {
            for k in (j + 1)..p {
                let v = 0.5 * (a[(j, k)] + a[(k, j)]);
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        crate::linalg::symmetric_eigenvalues(&self.0)
    }

    /// Writes the p × p matrix without a header, 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_matrix_csv(&self.0, path)
    }
}

/// Writes any matrix as headerless CSV with 17 significant digits.
pub fn write_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| JprError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_rows(&mut w, m).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Reads a headerless square matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let (values, _) = parse_csv_file(path.as_ref(), false)?;
    SymMatrix::new(values)
}

fn write_rows(w: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    for row in m.row_iter() {
        let line = row
            .iter()
            .map(|v| format_real(*v))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads comma-separated numeric data, optionally with a single header row.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let (values, names) = parse_csv_file(path.as_ref(), has_header)?;
    let data = DataMatrix::new(values)?;
    match names {
        Some(names) => data.with_feature_names(names),
        None => Ok(data),
    }
}

fn parse_csv_file(path: &Path, has_header: bool) -> Result<(DMatrix<f64>, Option<Vec<String>>)> {
    let file = File::open(path).map_err(|source| JprError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, has_header)
}

pub(crate) fn parse_csv(
    reader: impl std::io::Read,
    has_header: bool,
) -> Result<(DMatrix<f64>, Option<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let names = if has_header {
        let header = rdr.headers().map_err(csv_error)?;
        Some(header.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };

    let mut width = names.as_ref().map(Vec::len);
    let mut rows: Vec<f64> = Vec::new();
    let mut nrows = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(JprError::Shape(format!(
                    "line {line} has {} fields, expected {w}",
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let value = parse_field(field).map_err(|message| JprError::Parse {
                line,
                column: c + 1,
                message,
            })?;
            rows.push(value);
        }
        nrows += 1;
    }

    let p = width.unwrap_or(0);
    if nrows == 0 || p == 0 {
        return Err(JprError::Shape("no data rows".into()));
    }
    Ok((DMatrix::from_row_slice(nrows, p, &rows), names))
}

fn parse_field(field: &str) -> std::result::Result<f64, String> {
    if field.is_empty() {
        return Err("missing value".into());
    }
    let v: f64 = field
        .parse()
        .map_err(|_| format!("not a number: {field:?}"))?;
    if !v.is_finite() {
        return Err(format!("not a finite number: {field:?}"));
    }
    Ok(v)
}

fn csv_error(e: csv::Error) -> JprError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    JprError::Parse {
        line,
        column: 0,
        message: e.to_string(),
    }
}
