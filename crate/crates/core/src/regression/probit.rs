//! Probit propensity models fit by Fisher scoring.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::qr::pivoted_qr;
use super::special::{inverse_mills, ln_std_normal_cdf, std_normal_cdf};
use crate::data::CompleteCases;
use crate::error::{OmitError, Result};

/// Propensities are clipped to `[PROPENSITY_CLIP, 1 - PROPENSITY_CLIP]`.
pub const PROPENSITY_CLIP: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// |linear predictor| beyond which a class is treated as separated.
pub const SEPARATION_ETA: f64 = 6.0;
const MAX_HALVINGS: usize = 40;

pub fn clip_probability(p: f64) -> f64 {
    p.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPropensityModel {
    /// Intercept followed by one slope per predictor.
    pub coef: Vec<f64>,
    /// Column indices (into the covariate matrix) of the predictors.
    pub predictors: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    /// Log-likelihood after each accepted step, starting at the zero vector.
    #[serde(skip)]
    pub loglik_trace: Vec<f64>,
}

impl FittedPropensityModel {
    pub fn linear_predictor(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        self.coef[0]
            + self
                .predictors
                .iter()
                .zip(&self.coef[1..])
                .map(|(&j, b)| x[(row, j)] * b)
                .sum::<f64>()
    }

    /// Clipped Φ(intercept + x'β) for every row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if let Some(&j) = self.predictors.iter().find(|&&j| j >= x.ncols()) {
            return Err(OmitError::Shape(format!(
                "predictor column {j} out of range for {} columns",
                x.ncols()
            )));
        }
        (0..x.nrows())
            .map(|i| {
                let eta = self.linear_predictor(x, i);
                if !eta.is_finite() {
                    return Err(OmitError::InvalidInput(format!(
                        "non-finite linear predictor at row {i}"
                    )));
                }
                Ok(clip_probability(std_normal_cdf(eta)))
            })
            .collect()
    }
}

pub fn predict_propensity(model: &FittedPropensityModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    model.predict(x)
}

/// Fits a probit of the observed treatments on the selected covariates.
pub fn fit_probit(cases: &CompleteCases, predictors: &[usize]) -> Result<FittedPropensityModel> {
    if let Some(&j) = predictors.iter().find(|&&j| j >= cases.x.ncols()) {
        return Err(OmitError::Shape(format!("predictor column {j} out of range")));
    }
    let design = cases.x.select_columns(predictors.iter());
    let fit = fit_probit_matrix(&design, &cases.t)?;
    Ok(FittedPropensityModel {
        predictors: predictors.to_vec(),
        ..fit
    })
}

fn log_likelihood(eta: &[f64], t: &[bool]) -> f64 {
    eta.iter()
        .zip(t)
        .map(|(&e, &ti)| if ti { ln_std_normal_cdf(e) } else { ln_std_normal_cdf(-e) })
        .sum()
}

/// Probit MLE of `t` on `[1, x]`. The returned model lists every column of
/// `x` as a predictor.
pub fn fit_probit_matrix(x: &DMatrix<f64>, t: &[bool]) -> Result<FittedPropensityModel> {
    let (n, k) = x.shape();
    if t.len() != n {
        return Err(OmitError::Shape(format!("{n} design rows, {} responses", t.len())));
    }
    let treated = t.iter().filter(|&&v| v).count();
    if treated == 0 || treated == n {
        return Err(OmitError::EmptyArm {
            treated,
            control: n - treated,
        });
    }
    let p = k + 1;
    let mut design = DMatrix::from_element(n, p, 1.0);
    design.columns_mut(1, k).copy_from(x);
    let qr = pivoted_qr(&design, None);
    if !qr.is_full_rank() {
        return Err(OmitError::SingularDesign {
            columns: qr.dependent_columns(),
        });
    }

    let mut beta = DVector::zeros(p);
    let mut eta = vec![0.0; n];
    let mut ll = log_likelihood(&eta, t);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut score = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let e = eta[i];
            let lambda1 = inverse_mills(e);
            let lambda0 = inverse_mills(-e);
            let g = if t[i] { lambda1 } else { -lambda0 };
            let w = lambda1 * lambda0;
            let row = design.row(i);
            for a in 0..p {
                score[a] += g * row[a];
                let wa = w * row[a];
                for b in 0..=a {
                    info[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&score),
            None => {
                // Information collapses only when the fit runs off to infinity.
                return Err(separation_or_singular(&eta, t));
            }
        };
        let step_norm = step.norm();

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &step * scale;
            let cand_eta: Vec<f64> = (&design * &cand).iter().copied().collect();
            let cand_ll = log_likelihood(&cand_eta, t);
            if cand_ll >= ll {
                accepted = Some((cand, cand_eta, cand_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cand_eta, cand_ll)) = accepted else {
            // No ascent direction left at working precision.
            converged = step_norm < STEP_TOLERANCE.sqrt();
            break;
        };
        beta = cand;
        eta = cand_eta;
        ll = cand_ll;
        trace.push(ll);

        if let Some(class) = separated_class(&eta, t) {
            return Err(OmitError::Separation { class });
        }
        if step_norm < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    Ok(FittedPropensityModel {
        coef: beta.iter().copied().collect(),
        predictors: (0..k).collect(),
        converged,
        iterations,
        loglik: ll,
        loglik_trace: trace,
    })
}

fn separated_class(eta: &[f64], t: &[bool]) -> Option<&'static str> {
    let treated_out = eta.iter().zip(t).filter(|(_, &ti)| ti).all(|(&e, _)| e > SEPARATION_ETA);
    let control_out = eta.iter().zip(t).filter(|(_, &ti)| !ti).all(|(&e, _)| e < -SEPARATION_ETA);
    if treated_out {
        Some("treated")
    } else if control_out {
        Some("control")
    } else {
        None
    }
}

fn separation_or_singular(eta: &[f64], t: &[bool]) -> OmitError {
    match separated_class(eta, t) {
        Some(class) => OmitError::Separation { class },
        None => OmitError::SingularDesign { columns: vec![] },
    }
}
