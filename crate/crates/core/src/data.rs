//! Observation tables with missing treatments, CSV ingestion and column
//! standardization.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{OmitError, Result};

/// Tokens (compared case-insensitively) that mark a missing treatment cell.
pub const NA_TOKENS: [&str; 3] = ["", "na", "nan"];

/// A causal dataset whose treatments may be missing.
///
/// Units are identified by row position. Covariates and outcomes are always
/// observed; `t[i]` is `None` exactly when the treatment of unit `i` is
/// missing. The table is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    covariate_names: Vec<String>,
    outcome_name: String,
    treatment_name: String,
    x: DMatrix<f64>,
    y: Vec<f64>,
    t: Vec<Option<bool>>,
}

impl ObservationTable {
    pub fn new(
        covariate_names: Vec<String>,
        x: DMatrix<f64>,
        y: Vec<f64>,
        t: Vec<Option<bool>>,
    ) -> Result<Self> {
        Self::with_names(covariate_names, "y".into(), "t".into(), x, y, t)
    }

    pub fn with_names(
        covariate_names: Vec<String>,
        outcome_name: String,
        treatment_name: String,
        x: DMatrix<f64>,
        y: Vec<f64>,
        t: Vec<Option<bool>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(OmitError::InvalidInput("table has no rows".into()));
        }
        if x.nrows() != n || t.len() != n {
            return Err(OmitError::Shape(format!(
                "x has {} rows, y has {}, t has {}",
                x.nrows(),
                n,
                t.len()
            )));
        }
        if covariate_names.len() != x.ncols() {
            return Err(OmitError::Shape(format!(
                "{} covariate names for {} columns",
                covariate_names.len(),
                x.ncols()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(OmitError::InvalidInput(format!("non-finite outcome at row {i}")));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(OmitError::InvalidInput(format!(
                "non-finite covariate at row {}, column {}",
                k % n,
                k / n
            )));
        }
        Ok(ObservationTable {
            covariate_names,
            outcome_name,
            treatment_name,
            x,
            y,
            t,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[Option<bool>] {
        &self.t
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn treatment_name(&self) -> &str {
        &self.treatment_name
    }

    /// Missingness indicators `r_i`.
    pub fn missing(&self) -> Vec<bool> {
        self.t.iter().map(Option::is_none).collect()
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.t[i].is_none()
    }

    pub fn n_obs(&self) -> usize {
        self.t.iter().filter(|t| t.is_some()).count()
    }

    pub fn n_missing(&self) -> usize {
        self.n() - self.n_obs()
    }

    /// Observed (treated, control) counts.
    pub fn arm_counts(&self) -> (usize, usize) {
        self.t.iter().fold((0, 0), |(a, b), t| match t {
            Some(true) => (a + 1, b),
            Some(false) => (a, b + 1),
            None => (a, b),
        })
    }

    /// Fails unless both arms have at least one observed unit.
    pub fn require_both_arms(&self) -> Result<()> {
        let (treated, control) = self.arm_counts();
        if treated == 0 || control == 0 {
            return Err(OmitError::EmptyArm { treated, control });
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.covariate_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| OmitError::UnknownColumn(name.to_string()))
    }

    /// Returns a copy with a different outcome vector.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self> {
        Self::with_names(
            self.covariate_names.clone(),
            self.outcome_name.clone(),
            self.treatment_name.clone(),
            self.x.clone(),
            y,
            self.t.clone(),
        )
    }

    /// Returns a copy with a different treatment vector.
    pub fn with_treatments(&self, t: Vec<Option<bool>>) -> Result<Self> {
        Self::with_names(
            self.covariate_names.clone(),
            self.outcome_name.clone(),
            self.treatment_name.clone(),
            self.x.clone(),
            self.y.clone(),
            t,
        )
    }

    /// True when every value of covariate `j` is 0 or 1.
    pub fn is_binary_column(&self, j: usize) -> bool {
        self.x.column(j).iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Rows of a table whose treatment is observed.
#[derive(Debug, Clone)]
pub struct CompleteCases {
    pub rows: Vec<usize>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub t: Vec<bool>,
}

impl CompleteCases {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn complete_case_view(table: &ObservationTable) -> CompleteCases {
    let rows: Vec<usize> = (0..table.n()).filter(|&i| !table.is_missing(i)).collect();
    let x = table.x.select_rows(rows.iter());
    let y = rows.iter().map(|&i| table.y[i]).collect();
    let t = rows.iter().map(|&i| table.t[i] == Some(true)).collect();
    CompleteCases { rows, x, y, t }
}

/// One completed copy of a table: observed treatments carried through,
/// missing ones replaced by imputations.
#[derive(Debug, Clone)]
pub struct CompletedDataset<'a> {
    pub base: &'a ObservationTable,
    pub t_star: Vec<bool>,
    /// One-based imputation index.
    pub imputation_index: usize,
}

impl CompletedDataset<'_> {
    /// Writes the source columns plus `t_star` and an `imputed` flag.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let table = self.base;
        let mut header: Vec<String> = table.covariate_names.clone();
        header.push(table.outcome_name.clone());
        header.push(table.treatment_name.clone());
        header.push("t_star".into());
        header.push("imputed".into());
        w.write_record(&header)?;
        for i in 0..table.n() {
            let mut rec: Vec<String> = table.x.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(table.y[i].to_string());
            rec.push(format_treatment(table.t[i]));
            rec.push(u8::from(self.t_star[i]).to_string());
            rec.push(u8::from(table.t[i].is_none()).to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| OmitError::io(path.display().to_string(), e))
    }
}

/// Potential outcomes of a simulated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialOutcomeTable {
    pub y1: Vec<f64>,
    pub y0: Vec<f64>,
    pub tau_fp: f64,
}

impl PotentialOutcomeTable {
    pub fn new(y1: Vec<f64>, y0: Vec<f64>) -> Result<Self> {
        if y1.len() != y0.len() || y1.is_empty() {
            return Err(OmitError::Shape(format!(
                "potential outcomes of lengths {} and {}",
                y1.len(),
                y0.len()
            )));
        }
        let tau_fp =
            y1.iter().zip(&y0).map(|(a, b)| a - b).sum::<f64>() / y1.len() as f64;
        Ok(PotentialOutcomeTable { y1, y0, tau_fp })
    }

    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }

    pub fn unit_effects(&self) -> Vec<f64> {
        self.y1.iter().zip(&self.y0).map(|(a, b)| a - b).collect()
    }
}

/// Which columns of a table are the outcome, the treatment and the covariates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
}

fn is_na(cell: &str) -> bool {
    let cell = cell.trim();
    NA_TOKENS.iter().any(|tok| cell.eq_ignore_ascii_case(tok))
}

fn format_treatment(t: Option<bool>) -> String {
    match t {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

/// Reads a headered, comma-delimited UTF-8 file.
///
/// Rows are numbered from 1 for the first data row in error messages.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<ObservationTable> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| OmitError::io(path.display().to_string(), e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &ColumnSchema) -> Result<ObservationTable> {
    if schema.covariates.is_empty() {
        return Err(OmitError::InvalidInput("at least one covariate column is required".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| OmitError::UnknownColumn(name.to_string()))
    };
    let y_col = find(&schema.outcome)?;
    let t_col = find(&schema.treatment)?;
    let x_cols = schema
        .covariates
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let parse = |cell: &str, row: usize, column: &str| -> Result<f64> {
        if is_na(cell) {
            return Err(OmitError::MissingValue {
                row,
                column: column.to_string(),
            });
        }
        cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            OmitError::Parse {
                row,
                column: column.to_string(),
                value: cell.to_string(),
            }
        })
    };

    let mut y = Vec::new();
    let mut t = Vec::new();
    let mut x_flat = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        y.push(parse(cell(y_col), row, &schema.outcome)?);
        for (&c, name) in x_cols.iter().zip(&schema.covariates) {
            x_flat.push(parse(cell(c), row, name)?);
        }
        let tc = cell(t_col);
        t.push(if is_na(tc) {
            None
        } else {
            match tc.trim() {
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    return Err(OmitError::Parse {
                        row,
                        column: schema.treatment.clone(),
                        value: other.to_string(),
                    })
                }
            }
        });
    }
    if y.is_empty() {
        return Err(OmitError::InvalidInput("csv has no data rows".into()));
    }
    if t.iter().all(Option::is_none) {
        return Err(OmitError::AllTreatmentsMissing);
    }
    let x = DMatrix::from_row_slice(y.len(), x_cols.len(), &x_flat);
    ObservationTable::with_names(
        schema.covariates.clone(),
        schema.outcome.clone(),
        schema.treatment.clone(),
        x,
        y,
        t,
    )
}

/// Writes covariates, outcome and treatment (empty cell when missing) using
/// shortest round-trip float formatting.
pub fn write_csv(table: &ObservationTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file =
        std::fs::File::create(path).map_err(|e| OmitError::io(path.display().to_string(), e))?;
    write_csv_to(table, file)
}

pub fn write_csv_to<W: std::io::Write>(table: &ObservationTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = table.covariate_names.clone();
    header.push(table.outcome_name.clone());
    header.push(table.treatment_name.clone());
    w.write_record(&header)?;
    for i in 0..table.n() {
        let mut rec: Vec<String> = table.x.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(table.y[i].to_string());
        rec.push(format_treatment(table.t[i]));
        w.write_record(&rec)?;
    }
    w.flush()
        .map_err(|e| OmitError::io("<writer>", e))
}

/// Affine transform `z = (v - mean) / sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

impl Standardization {
    /// Fits mean and sample sd (n - 1 denominator).
    pub fn fit(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n < 2 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let sd = (ss / (n - 1) as f64).sqrt();
        (sd > 0.0 && sd.is_finite()).then_some(Standardization { mean, sd })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }

    pub fn apply_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply(v)).collect()
    }
}

/// Columns to standardize.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    AllCovariates,
    /// Covariates that take values other than 0 and 1.
    NumericCovariates,
    Covariates(Vec<String>),
    Outcome,
}

/// A standardized column and the transform that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform {
    pub column: String,
    pub transform: Standardization,
}

/// Scales the selected columns to sample mean 0 and sample sd 1.
pub fn standardize_columns(
    table: &ObservationTable,
    which: &ColumnSelector,
) -> Result<(ObservationTable, Vec<ColumnTransform>)> {
    let cols: Vec<usize> = match which {
        ColumnSelector::AllCovariates => (0..table.d()).collect(),
        ColumnSelector::NumericCovariates => {
            (0..table.d()).filter(|&j| !table.is_binary_column(j)).collect()
        }
        ColumnSelector::Covariates(names) => names
            .iter()
            .map(|n| table.column_index(n))
            .collect::<Result<_>>()?,
        ColumnSelector::Outcome => {
            let tr = Standardization::fit(&table.y)
                .ok_or_else(|| OmitError::ConstantColumn(table.outcome_name.clone()))?;
            let out = table.with_outcome(tr.apply_all(&table.y))?;
            return Ok((
                out,
                vec![ColumnTransform {
                    column: table.outcome_name.clone(),
                    transform: tr,
                }],
            ));
        }
    };
    let mut x = table.x.clone();
    let mut transforms = Vec::with_capacity(cols.len());
    for j in cols {
        let col: Vec<f64> = table.x.column(j).iter().copied().collect();
        let tr = Standardization::fit(&col)
            .ok_or_else(|| OmitError::ConstantColumn(table.covariate_names[j].clone()))?;
        for (dst, v) in x.column_mut(j).iter_mut().zip(&col) {
            *dst = tr.apply(*v);
        }
        transforms.push(ColumnTransform {
            column: table.covariate_names[j].clone(),
            transform: tr,
        });
    }
    let out = ObservationTable::with_names(
        table.covariate_names.clone(),
        table.outcome_name.clone(),
        table.treatment_name.clone(),
        x,
        table.y.clone(),
        table.t.clone(),
    )?;
    Ok((out, transforms))
}
