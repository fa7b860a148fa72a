//! One-shot analysis of a user table: fit, impute, estimate, pool.

use serde::{Deserialize, Serialize};

use crate::data::{complete_case_view, standardize_columns, ColumnSelector, ObservationTable};
use crate::estimation::{check_level, ipw_complete_case, ipw_estimate, pool};
use crate::error::{OmitError, Result};
use crate::imputation::{
    compare_probabilities, draw_treatments, plan_naive, plan_naive_plus_y, plan_omit, ImputationPlan,
    ProbabilityComparison,
};
use crate::regression::{fit_outcome_model, fit_probit, fit_probit_matrix, OutcomeBasis};
use crate::rng::{derive_seed, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisMethod {
    OmitLm,
    OmitFlex,
    Naive,
    NaiveY,
    Cc,
}

impl AnalysisMethod {
    pub fn label(self) -> &'static str {
        match self {
            AnalysisMethod::OmitLm => "omit-lm",
            AnalysisMethod::OmitFlex => "omit-flex",
            AnalysisMethod::Naive => "naive",
            AnalysisMethod::NaiveY => "naive-y",
            AnalysisMethod::Cc => "cc",
        }
    }

    fn basis(self) -> Option<OutcomeBasis> {
        match self {
            AnalysisMethod::OmitLm => Some(OutcomeBasis::Interaction),
            AnalysisMethod::OmitFlex => Some(OutcomeBasis::Flexible),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub method: AnalysisMethod,
    pub m: usize,
    pub seed: u64,
    pub level: f64,
    /// Refit the propensity model on every completed dataset instead of
    /// using the complete-case fit throughout.
    pub refit_ps_per_imputation: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            method: AnalysisMethod::OmitLm,
            m: 20,
            seed: 0,
            level: 0.95,
            refit_ps_per_imputation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub method: AnalysisMethod,
    pub ate: f64,
    pub std_error: f64,
    pub ci: [f64; 2],
    pub level: f64,
    /// Pooled degrees of freedom; null for complete cases, a single
    /// analysis, or no between-imputation variance.
    pub nu: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub n: usize,
    pub n_missing_t: usize,
    pub notices: Vec<String>,
}

/// Numeric (non-binary) covariates scaled to mean 0 and sd 1.
pub fn prepare(table: &ObservationTable) -> Result<ObservationTable> {
    Ok(standardize_columns(table, &ColumnSelector::NumericCovariates)?.0)
}

fn plan(table: &ObservationTable, method: AnalysisMethod, m: usize, seed: u64) -> Result<ImputationPlan> {
    let cases = complete_case_view(table);
    let predictors: Vec<usize> = (0..table.d()).collect();
    let ps = fit_probit(&cases, &predictors)?;
    match method {
        AnalysisMethod::OmitLm | AnalysisMethod::OmitFlex => {
            let basis = method.basis().expect("omit basis");
            let y_model = fit_outcome_model(&cases, &basis)?;
            plan_omit(table, &ps, &y_model, m, seed)
        }
        AnalysisMethod::Naive => plan_naive(table, &ps, m, seed),
        AnalysisMethod::NaiveY => plan_naive_plus_y(table, m, seed),
        AnalysisMethod::Cc => Err(OmitError::InvalidInput("complete cases need no imputation plan".into())),
    }
}

/// Estimates the ATE of `table` (covariates as given; see [`prepare`]).
///
/// The propensity model is a probit of the treatment on every covariate,
/// fitted to the complete cases.
pub fn analyze(table: &ObservationTable, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    check_level(opts.level)?;
    table.require_both_arms()?;
    let n = table.n();
    let n_missing_t = table.n_missing();
    let mut notices = Vec::new();
    let predictors: Vec<usize> = (0..table.d()).collect();
    let ps = fit_probit(&complete_case_view(table), &predictors)?;
    let e_hat = ps.predict(table.x())?;

    let single = |est: crate::estimation::IpwEstimate, m: Option<usize>, notices: Vec<String>| {
        let (lo, hi) = est.normal_interval(opts.level)?;
        Ok(AnalysisReport {
            method: opts.method,
            ate: est.tau_hat,
            std_error: est.std_error(),
            ci: [lo, hi],
            level: opts.level,
            nu: None,
            m,
            n,
            n_missing_t,
            notices,
        })
    };

    if opts.method == AnalysisMethod::Cc {
        return single(ipw_complete_case(table, &e_hat)?, None, notices);
    }
    if n_missing_t == 0 {
        notices.push("no treatment is missing; multiple imputation reduces to a single analysis".into());
        let t: Vec<bool> = table.t().iter().map(|t| t.expect("observed")).collect();
        return single(ipw_estimate(table.y(), &t, &e_hat, n)?, Some(1), notices);
    }
    if opts.m < 2 {
        return Err(OmitError::InvalidInput(format!(
            "pooling needs at least 2 imputations, got {}",
            opts.m
        )));
    }

    let seed = derive_seed(opts.seed, &[Purpose::Imputation as u64]);
    let plan = plan(table, opts.method, opts.m, seed)?;
    if plan.fallbacks > 0 {
        notices.push(format!(
            "{} units fell back to the propensity because both outcome densities vanished",
            plan.fallbacks
        ));
    }
    let mut estimates = Vec::with_capacity(opts.m);
    for index in 1..=opts.m {
        let t_star = draw_treatments(&plan, index);
        let est = if opts.refit_ps_per_imputation {
            let refit = fit_probit_matrix(table.x(), &t_star)?;
            ipw_estimate(table.y(), &t_star, &refit.predict(table.x())?, n)?
        } else {
            ipw_estimate(table.y(), &t_star, &e_hat, n)?
        };
        estimates.push(est);
    }
    let pooled = pool(&estimates, opts.level)?;
    Ok(AnalysisReport {
        method: opts.method,
        ate: pooled.tau_bar,
        std_error: pooled.std_error(),
        ci: [pooled.ci.0, pooled.ci.1],
        level: opts.level,
        nu: pooled.nu.is_finite().then_some(pooled.nu),
        m: Some(opts.m),
        n,
        n_missing_t,
        notices,
    })
}

/// One missing unit's imputation probabilities under both strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitProbabilities {
    pub unit: usize,
    pub q_omit: f64,
    pub q_naive: f64,
    pub y: f64,
}

/// OMIT (with the basis of `method`) against Naive MI on every missing unit.
pub fn probability_table(
    table: &ObservationTable,
    method: AnalysisMethod,
    threshold: f64,
) -> Result<(Vec<UnitProbabilities>, ProbabilityComparison)> {
    if method.basis().is_none() {
        return Err(OmitError::InvalidInput(format!(
            "probability comparison needs an OMIT method, got {}",
            method.label()
        )));
    }
    table.require_both_arms()?;
    let omit = plan(table, method, 1, 0)?;
    let naive = plan(table, AnalysisMethod::Naive, 1, 0)?;
    let rows: Vec<UnitProbabilities> = (0..table.n())
        .filter(|&i| omit.missing[i])
        .map(|i| UnitProbabilities {
            unit: i + 1,
            q_omit: omit.q_hat[i],
            q_naive: naive.q_hat[i],
            y: table.y()[i],
        })
        .collect();
    let q_omit: Vec<f64> = rows.iter().map(|r| r.q_omit).collect();
    let q_naive: Vec<f64> = rows.iter().map(|r| r.q_naive).collect();
    Ok((rows, compare_probabilities(&q_omit, &q_naive, threshold)))
}
