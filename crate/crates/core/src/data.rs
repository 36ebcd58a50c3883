//! Numeric containers shared by the solver, path, and experiment modules.
//!
//! Everything downstream fits on centered data without an intercept; the
//! intercept only reappears when standardized coefficients are mapped back to
//! the raw feature scale with [`destandardize`].

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Design matrix `x` (n × p) and response `y` (length n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self::with_names(x, y, None)
    }

    pub fn with_names(
        x: DMatrix<f64>,
        y: DVector<f64>,
        column_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "design must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if let Some(names) = &column_names {
            if names.len() != x.ncols() {
                return Err(Error::LengthMismatch {
                    expected: x.ncols(),
                    got: names.len(),
                });
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Dataset { x, y, column_names })
    }

    /// Builds a dataset from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::LengthMismatch {
                expected: p,
                got: bad.len(),
            });
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Dataset::new(x, DVector::from_column_slice(y))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Feature label for column `j`, falling back to `x{j+1}`.
    pub fn column_name(&self, j: usize) -> String {
        self.column_names
            .as_ref()
            .map(|names| names[j].clone())
            .unwrap_or_else(|| format!("x{}", j + 1))
    }

    /// Rows at `idx`, in the order given.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(idx);
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Dataset::with_names(x, y, self.column_names.clone())
    }

    /// Stacks datasets vertically; all must share `p`.
    pub fn concat(parts: &[&Dataset]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidData("nothing to concatenate".into()))?;
        let p = first.p();
        let n: usize = parts.iter().map(|d| d.n()).sum();
        let mut x = DMatrix::zeros(n, p);
        let mut y = DVector::zeros(n);
        let mut offset = 0;
        for d in parts {
            if d.p() != p {
                return Err(Error::LengthMismatch {
                    expected: p,
                    got: d.p(),
                });
            }
            x.rows_mut(offset, d.n()).copy_from(&d.x);
            y.rows_mut(offset, d.n()).copy_from(&d.y);
            offset += d.n();
        }
        Dataset::with_names(x, y, first.column_names.clone())
    }

    /// Linear predictor `x·beta + intercept` for every row.
    pub fn predict(&self, coef: &Coefficients) -> Result<DVector<f64>> {
        check_len(self.p(), coef.beta.len())?;
        Ok((&self.x * &coef.beta).add_scalar(coef.intercept))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Regression coefficients plus intercept (zero for fits on centered data).
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub beta: DVector<f64>,
    pub intercept: f64,
}

impl Coefficients {
    pub fn new(beta: DVector<f64>) -> Self {
        Coefficients {
            beta,
            intercept: 0.0,
        }
    }

    pub fn zeros(p: usize) -> Self {
        Coefficients::new(DVector::zeros(p))
    }

    pub fn from_slice(beta: &[f64]) -> Self {
        Coefficients::new(DVector::from_column_slice(beta))
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Indices of nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Column centering/scaling recorded so coefficients can be mapped back.
///
/// Standard deviations use denominator `n`, which makes `(1/n)‖x_j‖² = 1` for
/// every standardized column.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub x_means: DVector<f64>,
    pub x_sds: DVector<f64>,
    pub y_mean: f64,
}

impl Standardizer {
    pub fn identity(p: usize) -> Self {
        Standardizer {
            x_means: DVector::zeros(p),
            x_sds: DVector::from_element(p, 1.0),
            y_mean: 0.0,
        }
    }

    /// Applies the stored transform to another dataset with the same columns.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        check_len(self.x_means.len(), d.p())?;
        let mut x = d.x.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.x_means[j], self.x_sds[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        let y = d.y.add_scalar(-self.y_mean);
        Dataset::with_names(x, y, d.column_names.clone())
    }

    /// Undoes [`Standardizer::apply`].
    pub fn invert(&self, d: &Dataset) -> Result<Dataset> {
        check_len(self.x_means.len(), d.p())?;
        let mut x = d.x.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.x_means[j], self.x_sds[j]);
            col.apply(|v| *v = *v * s + m);
        }
        let y = d.y.add_scalar(self.y_mean);
        Dataset::with_names(x, y, d.column_names.clone())
    }

    /// Maps raw-scale slopes into the standardized coordinate system
    /// (`beta_std_j = beta_raw_j * sd_j`). The intercept is dropped.
    pub fn to_standardized(&self, raw: &Coefficients) -> Result<Coefficients> {
        check_len(self.x_sds.len(), raw.len())?;
        Ok(Coefficients::new(raw.beta.component_mul(&self.x_sds)))
    }
}

fn column_moments(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let sds = DVector::from_iterator(
        x.ncols(),
        x.column_iter().zip(means.iter()).map(|(c, m)| {
            let ss: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
            (ss / n).sqrt()
        }),
    );
    (means, sds)
}

fn fit_standardizer(d: &Dataset, center_y: bool) -> Result<Standardizer> {
    let (x_means, x_sds) = column_moments(&d.x);
    if let Some(j) = x_sds.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ConstantColumn(j));
    }
    let y_mean = if center_y { d.y.mean() } else { 0.0 };
    Ok(Standardizer {
        x_means,
        x_sds,
        y_mean,
    })
}

/// Centers and scales every column of `x` and centers `y`.
pub fn standardize(d: &Dataset) -> Result<(Dataset, Standardizer)> {
    let s = fit_standardizer(d, true)?;
    Ok((s.apply(d)?, s))
}

/// Like [`standardize`] but leaves `y` untouched (binary labels).
pub fn standardize_features(d: &Dataset) -> Result<(Dataset, Standardizer)> {
    let s = fit_standardizer(d, false)?;
    Ok((s.apply(d)?, s))
}

/// Maps standardized-scale coefficients to the raw scale so that
/// `raw_x·beta_raw + intercept == std_x·beta_std + y_mean`.
pub fn destandardize(c: &Coefficients, s: &Standardizer) -> Result<Coefficients> {
    check_len(s.x_sds.len(), c.len())?;
    let beta = c.beta.component_div(&s.x_sds);
    let intercept = s.y_mean + c.intercept - beta.dot(&s.x_means);
    Ok(Coefficients { beta, intercept })
}

/// Reads a headered numeric CSV; `response_column` becomes `y`, all other
/// columns (in file order) become `x`.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, response_column).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, response_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let resp = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::MissingColumn(response_column.to_string()))?;
    if headers.len() < 2 {
        return Err(Error::InvalidData("need at least one feature column".into()));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != resp)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row_no = i + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: row_no,
                col: record.len().min(headers.len()) + 1,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(names.len());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                col: j + 1,
                msg: format!("`{field}` is not a number"),
            })?;
            if j == resp {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("no data rows".into()));
    }
    let x = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i][j]);
    Dataset::with_names(x, DVector::from_vec(y), Some(names))
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.record() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Parse {
            row,
            col: 0,
            msg: format!("{other:?}"),
        },
    }
}

/// Writes `feature,beta` rows (plus a trailing `(intercept)` row when nonzero).
pub fn write_coefficients_csv<W: Write>(
    w: W,
    names: &[String],
    coef: &Coefficients,
) -> Result<()> {
    check_len(names.len(), coef.len())?;
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidData(e.to_string());
    wtr.write_record(["feature", "beta"]).map_err(io)?;
    for (name, b) in names.iter().zip(coef.beta.iter()) {
        wtr.write_record([name.as_str(), &format_f64(*b)]).map_err(io)?;
    }
    if coef.intercept != 0.0 {
        wtr.write_record(["(intercept)", &format_f64(coef.intercept)])
            .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Reads a `feature,beta` file, matching rows to `names` by label. Missing
/// features are an error; an `(intercept)` row is accepted and kept.
pub fn read_coefficients_csv(path: impl AsRef<Path>, names: &[String]) -> Result<Coefficients> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut beta = vec![None; names.len()];
    let mut intercept = 0.0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let name = rec.get(0).unwrap_or("").trim();
        let raw = rec.get(1).unwrap_or("").trim();
        let v: f64 = raw.parse().map_err(|_| Error::Parse {
            row: i + 1,
            col: 2,
            msg: format!("`{raw}` is not a number"),
        })?;
        if name == "(intercept)" {
            intercept = v;
            continue;
        }
        let j = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        beta[j] = Some(v);
    }
    let beta = beta
        .into_iter()
        .enumerate()
        .map(|(j, b)| b.ok_or_else(|| Error::MissingColumn(names[j].clone())))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Coefficients {
        beta: DVector::from_vec(beta),
        intercept,
    })
}

/// Shortest round-trip decimal representation.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:?}")
}
