//! Gaussian outcome models fit by least squares.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::qr::pivoted_qr;
use crate::data::CompleteCases;
use crate::error::{OmitError, Result};

/// Residual standard deviations are never reported below this value.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// One column of an outcome-model design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum BasisTerm {
    Intercept,
    Treatment,
    /// `x_column ^ power`.
    Covariate { column: usize, power: u32 },
    /// `t * x_column ^ power`.
    TreatmentCovariate { column: usize, power: u32 },
}

impl BasisTerm {
    pub fn value(&self, x: &DMatrix<f64>, row: usize, treated: bool) -> f64 {
        let t = if treated { 1.0 } else { 0.0 };
        match *self {
            BasisTerm::Intercept => 1.0,
            BasisTerm::Treatment => t,
            BasisTerm::Covariate { column, power } => x[(row, column)].powi(power as i32),
            BasisTerm::TreatmentCovariate { column, power } => {
                t * x[(row, column)].powi(power as i32)
            }
        }
    }
}

/// Family of outcome-model designs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeBasis {
    /// `[1, x_1..x_d, t, t*x_1..t*x_d]`.
    Interaction,
    /// The interaction design plus squares and cubes of every non-binary
    /// covariate, each also interacted with `t`.
    Flexible,
    /// An explicit list of terms.
    Terms(Vec<BasisTerm>),
}

impl OutcomeBasis {
    /// Resolves the basis into concrete terms for the covariates in `x`.
    pub fn terms(&self, x: &DMatrix<f64>) -> Vec<BasisTerm> {
        let d = x.ncols();
        let main = |powers: &[u32], treated: bool| -> Vec<BasisTerm> {
            let mut out = Vec::new();
            for &power in powers {
                for column in 0..d {
                    let binary = x.column(column).iter().all(|&v| v == 0.0 || v == 1.0);
                    if power > 1 && binary {
                        continue;
                    }
                    out.push(if treated {
                        BasisTerm::TreatmentCovariate { column, power }
                    } else {
                        BasisTerm::Covariate { column, power }
                    });
                }
            }
            out
        };
        match self {
            OutcomeBasis::Interaction | OutcomeBasis::Flexible => {
                let powers: &[u32] = if *self == OutcomeBasis::Flexible {
                    &[1, 2, 3]
                } else {
                    &[1]
                };
                let mut terms = vec![BasisTerm::Intercept];
                terms.extend(main(powers, false));
                terms.push(BasisTerm::Treatment);
                terms.extend(main(powers, true));
                terms
            }
            OutcomeBasis::Terms(t) => t.clone(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OutcomeBasis::Interaction => "interaction",
            OutcomeBasis::Flexible => "flexible",
            OutcomeBasis::Terms(_) => "terms",
        }
    }
}

/// Design matrix for `terms` evaluated at each row with the given treatments.
pub fn build_design(terms: &[BasisTerm], x: &DMatrix<f64>, t: &[bool]) -> Result<DMatrix<f64>> {
    if x.nrows() != t.len() {
        return Err(OmitError::Shape(format!(
            "{} covariate rows, {} treatments",
            x.nrows(),
            t.len()
        )));
    }
    for term in terms {
        if let BasisTerm::Covariate { column, .. } | BasisTerm::TreatmentCovariate { column, .. } =
            term
        {
            if *column >= x.ncols() {
                return Err(OmitError::Shape(format!("basis column {column} out of range")));
            }
        }
    }
    Ok(DMatrix::from_fn(x.nrows(), terms.len(), |i, j| {
        terms[j].value(x, i, t[i])
    }))
}

/// `[1, x_1..x_d, t, t*x_1..t*x_d]`, width `2d + 2`.
pub fn build_interaction_design(x: &DMatrix<f64>, t: &[bool]) -> Result<DMatrix<f64>> {
    build_design(&OutcomeBasis::Interaction.terms(x), x, t)
}

/// Ordinary least-squares solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coef: Vec<f64>,
    /// Residual standard error `sqrt(RSS / (rows - columns))`, floored.
    pub sigma: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

/// Least squares through a column-pivoted Householder QR.
pub fn fit_ols(design: &DMatrix<f64>, y: &[f64]) -> Result<LeastSquaresFit> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(OmitError::Shape(format!("{n} design rows, {} outcomes", y.len())));
    }
    if n < p {
        return Err(OmitError::Shape(format!("{n} rows for {p} columns")));
    }
    let qr = pivoted_qr(design, Some(y));
    let coef = qr.solve().ok_or_else(|| OmitError::SingularDesign {
        columns: qr.dependent_columns(),
    })?;
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| design[(i, j)] * coef[j]).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df = n - p;
    let sigma = if df == 0 {
        SIGMA_FLOOR
    } else {
        (rss / df as f64).sqrt().max(SIGMA_FLOOR)
    };
    Ok(LeastSquaresFit {
        coef,
        sigma,
        rss,
        residuals,
    })
}

/// `f̂(y | x, t)`: a Gaussian linear model in a chosen basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedOutcomeModel {
    pub coef: Vec<f64>,
    pub sigma: f64,
    pub basis: OutcomeBasis,
    pub terms: Vec<BasisTerm>,
    /// Number of complete cases used in the fit.
    pub fitted_on: usize,
}

impl FittedOutcomeModel {
    pub fn mean(&self, x: &DMatrix<f64>, row: usize, treated: bool) -> f64 {
        self.terms
            .iter()
            .zip(&self.coef)
            .map(|(term, b)| term.value(x, row, treated) * b)
            .sum()
    }

    pub fn density(&self, y: f64, x: &DMatrix<f64>, row: usize, treated: bool) -> f64 {
        gaussian_pdf(y, self.mean(x, row, treated), self.sigma)
    }

    pub fn ln_density(&self, y: f64, x: &DMatrix<f64>, row: usize, treated: bool) -> f64 {
        gaussian_ln_pdf(y, self.mean(x, row, treated), self.sigma)
    }
}

/// Fits an outcome model on the complete cases.
pub fn fit_outcome_model(cases: &CompleteCases, basis: &OutcomeBasis) -> Result<FittedOutcomeModel> {
    let terms = basis.terms(&cases.x);
    let design = build_design(&terms, &cases.x, &cases.t)?;
    let fit = fit_ols(&design, &cases.y)?;
    Ok(FittedOutcomeModel {
        coef: fit.coef,
        sigma: fit.sigma,
        basis: basis.clone(),
        terms,
        fitted_on: cases.len(),
    })
}

fn gaussian_pdf(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

fn gaussian_ln_pdf(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// Normal density `(2πσ²)^{-1/2} exp(-(y-μ)²/(2σ²))`.
pub fn gaussian_density(y: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(OmitError::NonPositiveSigma(sigma));
    }
    Ok(gaussian_pdf(y, mu, sigma))
}
