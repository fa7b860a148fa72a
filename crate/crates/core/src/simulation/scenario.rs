//! Running every method over the replicates of one scenario.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Method, ScenarioConfig};
use super::population::{assign_and_mask, generate_population, Population, ReplicateData};
use crate::data::complete_case_view;
use crate::error::Result;
use crate::estimation::{ipw_complete_case, ipw_estimate, pool};
use crate::imputation::{draw_treatments, plan_naive, plan_naive_plus_y, plan_omit, ImputationPlan};
use crate::regression::{fit_outcome_model, fit_probit, BasisTerm, FittedPropensityModel, OutcomeBasis};
use crate::rng::{derive_seed, digest_f64, Purpose};

/// Largest tolerated share of excluded replicates per method.
pub const VALIDITY_CEILING: f64 = 0.01;

/// Column of `x_2` in the simulated covariates.
const X2: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub tau_hat: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
    /// Degrees of freedom of the pooled interval; `None` for CC and when
    /// the between-imputation variance is zero.
    pub nu: Option<f64>,
    /// Share of imputed treatments equal to the hidden truth.
    pub match_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub replicate: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub mean_bias: f64,
    pub mean_abs_bias: f64,
    pub mse: f64,
    pub coverage: f64,
    /// Monte Carlo standard error of `mean_bias`.
    pub bias_mc_se: f64,
    pub used: usize,
    pub excluded: usize,
    pub mean_match_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub records: Vec<ReplicateRecord>,
    pub exclusions: Vec<Exclusion>,
    pub summary: MethodSummary,
}

impl MethodResult {
    pub fn exclusion_rate(&self) -> f64 {
        let total = self.records.len() + self.exclusions.len();
        if total == 0 {
            0.0
        } else {
            self.exclusions.len() as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub mean_missing_rate: f64,
    pub mean_treated_rate: f64,
    pub population_digest: String,
    /// Every replicate saw the same covariates and potential outcomes.
    pub population_fixed: bool,
    pub exclusion_rates: Vec<(Method, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub config: ScenarioConfig,
    pub tau_fp: f64,
    pub methods: Vec<MethodResult>,
    pub diagnostics: Diagnostics,
}

impl ScenarioResult {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// No method excluded `VALIDITY_CEILING` or more of its replicates.
    pub fn is_valid(&self) -> bool {
        self.methods.iter().all(|m| m.exclusion_rate() < VALIDITY_CEILING)
    }
}

/// Outcome basis of OMIT_Correct: `(1, x_1, x_2^k, t, t x_2^k)`.
pub fn correct_basis(power: u32) -> OutcomeBasis {
    OutcomeBasis::Terms(vec![
        BasisTerm::Intercept,
        BasisTerm::Covariate { column: 0, power: 1 },
        BasisTerm::Covariate { column: X2, power },
        BasisTerm::Treatment,
        BasisTerm::TreatmentCovariate { column: X2, power },
    ])
}

struct ReplicateOutcome {
    missing_rate: f64,
    treated_rate: f64,
    digest: u64,
    per_method: Vec<std::result::Result<ReplicateRecord, String>>,
}

fn replicate_digest(pop: &Population) -> u64 {
    let mut all: Vec<f64> = pop.x.iter().copied().collect();
    all.extend_from_slice(&pop.outcomes.y1);
    all.extend_from_slice(&pop.outcomes.y0);
    digest_f64(&all)
}

fn pooled_record(
    plan: &ImputationPlan,
    data: &ReplicateData,
    e_hat: &[f64],
    config: &ScenarioConfig,
    replicate: usize,
    tau_fp: f64,
) -> Result<ReplicateRecord> {
    let table = &data.table;
    let n = table.n();
    let n_missing = table.n_missing();
    let mut estimates = Vec::with_capacity(plan.m);
    let mut matches = 0usize;
    for index in 1..=plan.m {
        let t_star = draw_treatments(plan, index);
        matches += (0..n)
            .filter(|&i| plan.missing[i] && t_star[i] == data.t_true[i])
            .count();
        estimates.push(ipw_estimate(table.y(), &t_star, e_hat, n)?);
    }
    let pooled = pool(&estimates, config.level)?;
    Ok(ReplicateRecord {
        replicate,
        tau_hat: pooled.tau_bar,
        std_error: pooled.std_error(),
        ci_low: pooled.ci.0,
        ci_high: pooled.ci.1,
        covered: pooled.covers(tau_fp),
        nu: pooled.nu.is_finite().then_some(pooled.nu),
        match_rate: (n_missing > 0).then(|| matches as f64 / (n_missing * plan.m) as f64),
    })
}

fn run_method(
    method: Method,
    data: &ReplicateData,
    ps: &FittedPropensityModel,
    e_hat: &[f64],
    config: &ScenarioConfig,
    replicate: usize,
    tau_fp: f64,
) -> Result<ReplicateRecord> {
    let table = &data.table;
    let seed = derive_seed(config.seed, &[Purpose::Imputation as u64, replicate as u64]);
    let omit = |basis: OutcomeBasis| -> Result<ImputationPlan> {
        let model = fit_outcome_model(&complete_case_view(table), &basis)?;
        plan_omit(table, ps, &model, config.m, seed)
    };
    let plan = match method {
        Method::CompleteCase => {
            let est = ipw_complete_case(table, e_hat)?;
            let (lo, hi) = est.normal_interval(config.level)?;
            return Ok(ReplicateRecord {
                replicate,
                tau_hat: est.tau_hat,
                std_error: est.std_error(),
                ci_low: lo,
                ci_high: hi,
                covered: lo <= tau_fp && tau_fp <= hi,
                nu: None,
                match_rate: None,
            });
        }
        Method::OmitCorrect => omit(correct_basis(config.variant.power()))?,
        Method::OmitLm => omit(OutcomeBasis::Interaction)?,
        Method::OmitFlex => omit(OutcomeBasis::Flexible)?,
        Method::NaiveMi => plan_naive(table, ps, config.m, seed)?,
        Method::NaivePlusY => plan_naive_plus_y(table, config.m, seed)?,
    };
    pooled_record(&plan, data, e_hat, config, replicate, tau_fp)
}

fn run_replicate(pop: &Population, config: &ScenarioConfig, replicate: usize) -> ReplicateOutcome {
    let digest = replicate_digest(pop);
    let data = match assign_and_mask(pop, config, replicate) {
        Ok(d) => d,
        Err(e) => {
            return ReplicateOutcome {
                missing_rate: f64::NAN,
                treated_rate: f64::NAN,
                digest,
                per_method: config.methods.iter().map(|_| Err(e.to_string())).collect(),
            }
        }
    };
    let ps_and_e = fit_probit(&complete_case_view(&data.table), &[X2])
        .and_then(|ps| ps.predict(data.table.x()).map(|e| (ps, e)));
    let per_method = match ps_and_e {
        Ok((ps, e_hat)) => config
            .methods
            .iter()
            .map(|&m| {
                run_method(m, &data, &ps, &e_hat, config, replicate, pop.outcomes.tau_fp)
                    .map_err(|e| e.to_string())
            })
            .collect(),
        Err(e) => config
            .methods
            .iter()
            .map(|_| Err(format!("propensity model: {e}")))
            .collect(),
    };
    ReplicateOutcome {
        missing_rate: data.missing_rate(),
        treated_rate: data.treated_rate(),
        digest,
        per_method,
    }
}

fn summarize(records: &[ReplicateRecord], excluded: usize, tau_fp: f64) -> MethodSummary {
    let k = records.len() as f64;
    let bias: Vec<f64> = records.iter().map(|r| r.tau_hat - tau_fp).collect();
    let mean = |v: &mut dyn Iterator<Item = f64>| if k > 0.0 { v.sum::<f64>() / k } else { f64::NAN };
    let mean_bias = mean(&mut bias.iter().copied());
    let var = if k > 1.0 {
        bias.iter().map(|b| (b - mean_bias).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        f64::NAN
    };
    let rates: Vec<f64> = records.iter().filter_map(|r| r.match_rate).collect();
    MethodSummary {
        mean_bias,
        mean_abs_bias: mean(&mut bias.iter().map(|b| b.abs())),
        mse: mean(&mut bias.iter().map(|b| b * b)),
        coverage: mean(&mut records.iter().map(|r| f64::from(u8::from(r.covered)))),
        bias_mc_se: (var / k).sqrt(),
        used: records.len(),
        excluded,
        mean_match_rate: (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64),
    }
}

/// Runs every configured method on every replicate of `config`.
///
/// Replicates run in parallel; the result depends only on the configuration.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let pop = generate_population(config)?;
    let tau_fp = pop.outcomes.tau_fp;
    let outcomes: Vec<ReplicateOutcome> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(&pop, config, r))
        .collect();

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mut records = Vec::new();
            let mut exclusions = Vec::new();
            for (r, out) in outcomes.iter().enumerate() {
                match &out.per_method[k] {
                    Ok(rec) => records.push(rec.clone()),
                    Err(reason) => exclusions.push(Exclusion {
                        replicate: r,
                        reason: reason.clone(),
                    }),
                }
            }
            let summary = summarize(&records, exclusions.len(), tau_fp);
            MethodResult {
                method,
                records,
                exclusions,
                summary,
            }
        })
        .collect::<Vec<_>>();

    let reps = outcomes.len() as f64;
    let diagnostics = Diagnostics {
        mean_missing_rate: outcomes.iter().map(|o| o.missing_rate).sum::<f64>() / reps,
        mean_treated_rate: outcomes.iter().map(|o| o.treated_rate).sum::<f64>() / reps,
        population_digest: format!("{:016x}", pop.digest),
        population_fixed: outcomes.iter().all(|o| o.digest == pop.digest),
        exclusion_rates: methods.iter().map(|m| (m.method, m.exclusion_rate())).collect(),
    };
    Ok(ScenarioResult {
        scenario_id: config.scenario_id(),
        config: config.clone(),
        tau_fp,
        methods,
        diagnostics,
    })
}

/// Runs scenarios one after another.
pub fn run_grid(configs: &[ScenarioConfig]) -> Result<Vec<ScenarioResult>> {
    configs.iter().map(run_scenario).collect()
}
