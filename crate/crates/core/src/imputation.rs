//! Imputation plans for missing treatments and their materialization into
//! completed datasets.
//!
//! A plan holds one probability `q̂_i` per unit. For OMIT the propensity
//! `ê_i` is sharpened by the outcome model,
//!
//! ```text
//! q̂_i = ê_i f̂(y_i | x_i, 1) / (ê_i f̂(y_i | x_i, 1) + (1 - ê_i) f̂(y_i | x_i, 0)),
//! ```
//!
//! Naive MI uses `ê_i` alone and Naive+Y MI a single probit of `t` on the
//! covariates and the standardized outcome. Missing treatments are drawn as
//! independent Bernoulli(`q̂_i`) variables, once per completed dataset.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{complete_case_view, CompletedDataset, ObservationTable, Standardization};
use crate::error::{OmitError, Result};
use crate::regression::{
    clip_probability, fit_probit_matrix, FittedOutcomeModel, FittedPropensityModel,
};
use crate::rng::{CounterRng, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "OMIT")]
    Omit,
    #[serde(rename = "NaiveMI")]
    NaiveMi,
    #[serde(rename = "NaivePlusY")]
    NaivePlusY,
}

/// Result of sharpening one propensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sharpened {
    pub q: f64,
    /// Both densities were zero, so `q` fell back to the propensity.
    pub fallback: bool,
}

/// `e f1 / (e f1 + (1 - e) f0)`, clipped to `[1e-6, 1 - 1e-6]`.
pub fn sharpened_probability(e_hat: f64, f1: f64, f0: f64) -> Result<Sharpened> {
    if !(e_hat > 0.0 && e_hat < 1.0) {
        return Err(OmitError::ProbabilityDomain(e_hat));
    }
    if !(f1 >= 0.0 && f0 >= 0.0) || !f1.is_finite() || !f0.is_finite() {
        return Err(OmitError::InvalidInput(format!("densities must be finite and non-negative, got {f1}, {f0}")));
    }
    let num = e_hat * f1;
    let den = num + (1.0 - e_hat) * f0;
    if den == 0.0 {
        return Ok(Sharpened {
            q: clip_probability(e_hat),
            fallback: true,
        });
    }
    Ok(Sharpened {
        q: clip_probability(num / den),
        fallback: false,
    })
}

/// Same as [`sharpened_probability`] with log densities, which never
/// underflow for Gaussian outcome models.
pub fn sharpened_probability_ln(e_hat: f64, ln_f1: f64, ln_f0: f64) -> Result<Sharpened> {
    if !(e_hat > 0.0 && e_hat < 1.0) {
        return Err(OmitError::ProbabilityDomain(e_hat));
    }
    if ln_f1 == f64::NEG_INFINITY && ln_f0 == f64::NEG_INFINITY {
        return Ok(Sharpened {
            q: clip_probability(e_hat),
            fallback: true,
        });
    }
    if ln_f1 == ln_f0 {
        return Ok(Sharpened {
            q: clip_probability(e_hat),
            fallback: false,
        });
    }
    // logit q = logit e + ln f1 - ln f0
    let logit = e_hat.ln() - (-e_hat).ln_1p() + ln_f1 - ln_f0;
    if logit.is_nan() {
        return Err(OmitError::InvalidInput("undefined log-density ratio".into()));
    }
    let q = if logit >= 0.0 {
        1.0 / (1.0 + (-logit).exp())
    } else {
        let z = logit.exp();
        z / (1.0 + z)
    };
    Ok(Sharpened {
        q: clip_probability(q),
        fallback: false,
    })
}

/// Where a plan's probabilities came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanProvenance {
    pub propensity: FittedPropensityModel,
    pub outcome: Option<FittedOutcomeModel>,
    /// Complete-case standardization of the outcome (Naive+Y only).
    pub outcome_standardization: Option<Standardization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationPlan {
    pub strategy: Strategy,
    /// Imputation probability for missing units; the observed treatment
    /// (0 or 1) for the others.
    pub q_hat: Vec<f64>,
    pub missing: Vec<bool>,
    pub m: usize,
    pub seed: u64,
    pub provenance: PlanProvenance,
    /// Units whose sharpening fell back to the propensity.
    pub fallbacks: usize,
}

impl ImputationPlan {
    pub fn n_imputable(&self) -> usize {
        self.missing.iter().filter(|&&r| r).count()
    }

    /// `q̂_i` for the missing units, in row order.
    pub fn missing_probabilities(&self) -> Vec<f64> {
        self.q_hat
            .iter()
            .zip(&self.missing)
            .filter(|(_, &r)| r)
            .map(|(&q, _)| q)
            .collect()
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(OmitError::InvalidInput("number of imputations must be at least 1".into()));
    }
    Ok(())
}

fn plan_from(
    table: &ObservationTable,
    strategy: Strategy,
    probs: impl Fn(usize) -> Result<Sharpened>,
    m: usize,
    seed: u64,
    provenance: PlanProvenance,
) -> Result<ImputationPlan> {
    check_m(m)?;
    let mut fallbacks = 0;
    let q_hat = table
        .t()
        .iter()
        .enumerate()
        .map(|(i, t)| match t {
            Some(obs) => Ok(if *obs { 1.0 } else { 0.0 }),
            None => {
                let s = probs(i)?;
                fallbacks += usize::from(s.fallback);
                Ok(s.q)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImputationPlan {
        strategy,
        q_hat,
        missing: table.missing(),
        m,
        seed,
        provenance,
        fallbacks,
    })
}

/// OMIT: sharpen each missing unit's propensity with the outcome model.
pub fn plan_omit(
    table: &ObservationTable,
    ps_model: &FittedPropensityModel,
    y_model: &FittedOutcomeModel,
    m: usize,
    seed: u64,
) -> Result<ImputationPlan> {
    let e_hat = ps_model.predict(table.x())?;
    let x = table.x();
    let y = table.y();
    plan_from(
        table,
        Strategy::Omit,
        |i| {
            sharpened_probability_ln(
                e_hat[i],
                y_model.ln_density(y[i], x, i, true),
                y_model.ln_density(y[i], x, i, false),
            )
        },
        m,
        seed,
        PlanProvenance {
            propensity: ps_model.clone(),
            outcome: Some(y_model.clone()),
            outcome_standardization: None,
        },
    )
}

/// Naive MI: impute from the propensity alone.
pub fn plan_naive(
    table: &ObservationTable,
    ps_model: &FittedPropensityModel,
    m: usize,
    seed: u64,
) -> Result<ImputationPlan> {
    let e_hat = ps_model.predict(table.x())?;
    plan_from(
        table,
        Strategy::NaiveMi,
        |i| {
            Ok(Sharpened {
                q: e_hat[i],
                fallback: false,
            })
        },
        m,
        seed,
        PlanProvenance {
            propensity: ps_model.clone(),
            outcome: None,
            outcome_standardization: None,
        },
    )
}

/// Covariates with the standardized outcome appended as a last column.
fn with_standardized_outcome(x: &DMatrix<f64>, y_tilde: &[f64]) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut aug = DMatrix::zeros(n, d + 1);
    aug.columns_mut(0, d).copy_from(x);
    for (i, v) in y_tilde.iter().enumerate() {
        aug[(i, d)] = *v;
    }
    aug
}

/// Naive+Y MI: one probit of `t` on every covariate and the outcome,
/// standardized with complete-case mean and sd.
pub fn plan_naive_plus_y(table: &ObservationTable, m: usize, seed: u64) -> Result<ImputationPlan> {
    check_m(m)?;
    table.require_both_arms()?;
    let cases = complete_case_view(table);
    let scale = Standardization::fit(&cases.y)
        .ok_or_else(|| OmitError::ConstantColumn(table.outcome_name().to_string()))?;
    let cc_design = with_standardized_outcome(&cases.x, &scale.apply_all(&cases.y));
    let model = fit_probit_matrix(&cc_design, &cases.t)?;
    let full_design = with_standardized_outcome(table.x(), &scale.apply_all(table.y()));
    let probs = model.predict(&full_design)?;
    plan_from(
        table,
        Strategy::NaivePlusY,
        |i| {
            Ok(Sharpened {
                q: probs[i],
                fallback: false,
            })
        },
        m,
        seed,
        PlanProvenance {
            propensity: model.clone(),
            outcome: None,
            outcome_standardization: Some(scale),
        },
    )
}

/// Imputed treatments for dataset `index` (one-based).
///
/// The uniform for unit `i` in dataset `m` depends only on `(seed, i, m)`.
pub fn draw_treatments(plan: &ImputationPlan, index: usize) -> Vec<bool> {
    let mut rng = CounterRng::new(plan.seed, &[Purpose::Imputation as u64]);
    plan.q_hat
        .iter()
        .zip(&plan.missing)
        .enumerate()
        .map(|(i, (&q, &missing))| {
            if missing {
                rng.uniform(i as u64, index as u64) < q
            } else {
                q == 1.0
            }
        })
        .collect()
}

/// Materializes the plan's `m` completed datasets.
pub fn materialize<'a>(
    plan: &ImputationPlan,
    table: &'a ObservationTable,
) -> Result<Vec<CompletedDataset<'a>>> {
    if plan.q_hat.len() != table.n() || plan.missing != table.missing() {
        return Err(OmitError::Shape("plan does not belong to this table".into()));
    }
    Ok((1..=plan.m)
        .into_par_iter()
        .map(|index| CompletedDataset {
            base: table,
            t_star: draw_treatments(plan, index),
            imputation_index: index,
        })
        .collect())
}

/// Comparison of OMIT and Naive MI probabilities over missing units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityComparison {
    pub threshold: f64,
    pub n_missing: usize,
    /// Missing units with `q_omit > threshold`.
    pub n_compared: usize,
    /// Share of compared units with `q_omit > q_naive`, ties counted as one half.
    pub fraction_omit_greater: Option<f64>,
}

pub fn compare_probabilities(q_omit: &[f64], q_naive: &[f64], threshold: f64) -> ProbabilityComparison {
    let compared: Vec<(f64, f64)> = q_omit
        .iter()
        .zip(q_naive)
        .filter(|(&a, _)| a > threshold)
        .map(|(&a, &b)| (a, b))
        .collect();
    let score: f64 = compared
        .iter()
        .map(|&(a, b)| if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 })
        .sum();
    ProbabilityComparison {
        threshold,
        n_missing: q_omit.len(),
        n_compared: compared.len(),
        fraction_omit_greater: (!compared.is_empty()).then(|| score / compared.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{BasisTerm, OutcomeBasis};

    fn table(t: Vec<Option<bool>>, y: Vec<f64>, x: Vec<f64>) -> ObservationTable {
        let n = y.len();
        ObservationTable::new(vec!["x".into()], DMatrix::from_column_slice(n, 1, &x), y, t).unwrap()
    }

    fn ps(coef: Vec<f64>, predictors: Vec<usize>) -> FittedPropensityModel {
        FittedPropensityModel {
            coef,
            predictors,
            converged: true,
            iterations: 1,
            loglik: 0.0,
            loglik_trace: vec![],
        }
    }

    /// Outcome model `y ~ N(a + b t + c x, sigma)`.
    fn outcome(a: f64, b: f64, c: f64, sigma: f64) -> FittedOutcomeModel {
        FittedOutcomeModel {
            coef: vec![a, b, c],
            sigma,
            basis: OutcomeBasis::Terms(vec![]),
            terms: vec![
                BasisTerm::Intercept,
                BasisTerm::Treatment,
                BasisTerm::Covariate { column: 0, power: 1 },
            ],
            fitted_on: 0,
        }
    }

    #[test]
    fn sharpening_examples() {
        assert_eq!(sharpened_probability(0.5, 0.3, 0.3).unwrap().q, 0.5);
        let q = sharpened_probability(0.4, 2.0, 1.0).unwrap().q;
        assert!((q - 0.8 / 1.4).abs() < 1e-15);
        assert!((q - 0.571_429).abs() < 1e-6);
        assert_eq!(sharpened_probability(0.3, 0.2, 0.0).unwrap().q, 1.0 - 1e-6);
        let fb = sharpened_probability(0.3, 0.0, 0.0).unwrap();
        assert!(fb.fallback);
        assert_eq!(fb.q, 0.3);
        assert!(sharpened_probability(0.0, 1.0, 1.0).is_err());
        assert!(sharpened_probability(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn log_space_matches_density_space() {
        for &(e, f1, f0) in &[(0.4, 2.0, 1.0), (0.1, 0.01, 0.3), (0.9, 5.0, 5.0), (0.3, 1e-3, 2.0)] {
            let a = sharpened_probability(e, f1, f0).unwrap().q;
            let b = sharpened_probability_ln(e, f64::ln(f1), f64::ln(f0)).unwrap().q;
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert!(sharpened_probability_ln(0.4, f64::NEG_INFINITY, f64::NEG_INFINITY).unwrap().fallback);
        assert_eq!(sharpened_probability_ln(0.4, 0.0, f64::NEG_INFINITY).unwrap().q, 1.0 - 1e-6);
    }

    #[test]
    fn flat_outcome_model_reproduces_naive_plan() {
        let tab = table(
            vec![Some(true), None, Some(false), None, None],
            vec![1.0, 4.0, -2.0, 0.5, 9.0],
            vec![0.1, -0.3, 1.2, 0.0, 2.0],
        );
        let ps_model = ps(vec![-0.2, 0.35], vec![0]);
        let omit = plan_omit(&tab, &ps_model, &outcome(1.0, 0.0, 0.7, 2.0), 5, 11).unwrap();
        let naive = plan_naive(&tab, &ps_model, 5, 11).unwrap();
        for (a, b) in omit.q_hat.iter().zip(&naive.q_hat) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(naive.q_hat[0], 1.0);
        assert_eq!(naive.q_hat[2], 0.0);
    }

    #[test]
    fn well_separated_outcomes_pin_the_treatment() {
        // y | t=1 ~ N(40 + x, 0.1), y | t=0 ~ N(x, 0.1) with 0 < x < 10.
        let tab = table(
            vec![None, None, Some(true), Some(false)],
            vec![45.0, 5.0, 44.0, 3.0],
            vec![4.0, 4.0, 4.0, 3.0],
        );
        let model = outcome(0.0, 40.0, 1.0, 0.1f64.sqrt());
        let plan = plan_omit(&tab, &ps(vec![0.0], vec![]), &model, 3, 1).unwrap();
        assert!(plan.q_hat[0] >= 1.0 - 1e-6);
        assert!(plan.q_hat[1] <= 1e-6);
        assert_eq!(plan.fallbacks, 0);
    }

    #[test]
    fn naive_plan_uses_propensity_and_handles_no_missing() {
        let tab = table(vec![Some(true), None], vec![1.0, 2.0], vec![0.0, 0.0]);
        let coef = crate::regression::special::std_normal_quantile(0.4).unwrap();
        let plan = plan_naive(&tab, &ps(vec![coef], vec![]), 2, 0).unwrap();
        assert!((plan.q_hat[1] - 0.4).abs() < 1e-12);

        let full = table(vec![Some(true), Some(false)], vec![1.0, 2.0], vec![0.0, 1.0]);
        let plan = plan_naive(&full, &ps(vec![0.0], vec![]), 4, 0).unwrap();
        assert_eq!(plan.n_imputable(), 0);
        let sets = materialize(&plan, &full).unwrap();
        assert!(sets.iter().all(|d| d.t_star == vec![true, false]));
    }

    #[test]
    fn materialization_is_seeded_and_preserves_observed() {
        let n = 200;
        let t: Vec<Option<bool>> = (0..n).map(|i| if i % 3 == 0 { None } else { Some(i % 2 == 0) }).collect();
        let tab = table(t.clone(), vec![0.0; n], (0..n).map(|i| i as f64 / 50.0).collect());
        let plan = plan_naive(&tab, &ps(vec![0.1, 0.2], vec![0]), 6, 99).unwrap();
        let a = materialize(&plan, &tab).unwrap();
        let b = materialize(&plan, &tab).unwrap();
        assert_eq!(a.len(), 6);
        for (da, db) in a.iter().zip(&b) {
            assert_eq!(da.t_star, db.t_star);
            for (i, obs) in t.iter().enumerate() {
                if let Some(v) = obs {
                    assert_eq!(da.t_star[i], *v);
                }
            }
        }
        let other = plan_naive(&tab, &ps(vec![0.1, 0.2], vec![0]), 6, 100).unwrap();
        let c = materialize(&other, &tab).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.t_star != y.t_star));
    }

    #[test]
    fn bernoulli_frequency_matches_probability() {
        let tab = table(vec![None, Some(true)], vec![0.0, 0.0], vec![0.0, 0.0]);
        let mut plan = plan_naive(&tab, &ps(vec![0.0], vec![]), 10_000, 5).unwrap();
        plan.q_hat[0] = 0.5;
        let ones = materialize(&plan, &tab).unwrap().iter().filter(|d| d.t_star[0]).count();
        // 99% binomial interval half-width is 2.576 * 0.005 ~ 0.013
        assert!((ones as f64 / 10_000.0 - 0.5).abs() < 0.02, "{ones}");

        plan.q_hat[0] = 1.0 - 1e-6;
        let ones = materialize(&plan, &tab).unwrap().iter().filter(|d| d.t_star[0]).count();
        assert!(ones >= 9_990);
    }

    #[test]
    fn naive_plus_y_with_irrelevant_outcome() {
        // Outcome is a deterministic function unrelated to treatment within x;
        // plan still valid and probabilities in range.
        let n = 120;
        let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let t: Vec<Option<bool>> = (0..n)
            .map(|i| if i % 5 == 0 { None } else { Some((i * 31) % 7 < 3) })
            .collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13) % 17) as f64).collect();
        let tab = table(t, y, x);
        let plan = plan_naive_plus_y(&tab, 3, 2).unwrap();
        assert_eq!(plan.strategy, Strategy::NaivePlusY);
        assert_eq!(plan.provenance.propensity.coef.len(), 3);
        for q in plan.missing_probabilities() {
            assert!((1e-6..=1.0 - 1e-6).contains(&q));
        }
    }

    #[test]
    fn comparison_counts_ties_as_half() {
        let q = [0.3, 0.6, 0.1, 0.9];
        let c = compare_probabilities(&q, &q, 0.25);
        assert_eq!(c.n_compared, 3);
        assert_eq!(c.fraction_omit_greater, Some(0.5));
        let c = compare_probabilities(&[0.5, 0.7], &[0.4, 0.8], 0.25);
        assert_eq!(c.fraction_omit_greater, Some(0.5));
        let c = compare_probabilities(&q, &q, 1.1);
        assert_eq!(c.n_compared, 0);
        assert_eq!(c.fraction_omit_greater, None);
    }
}
