//! Bias algebra of the per-imputation IPW estimator and Monte Carlo checks
//! of the unbiasedness results.
//!
//! For a missing unit `i` with true propensity `e_i`, the imputation model
//! is summarized by `m_i11 = P(t* = 1 | t = 1)` and `m_i01 = P(t* = 1 | t = 0)`
//! (and their complements `m_i10`, `m_i00`). With true propensities in the
//! estimator its bias over treatment, missingness and imputation draws is
//!
//! ```text
//! B = -n⁻¹ Σ [ p_i1 y_i1 (1 - m_i11 + m_i10 e_i / (1 - e_i))
//!            - p_i0 y_i0 (1 - m_i00 + m_i01 (1 - e_i) / e_i) ]
//! ```
//!
//! where `p_it` is the probability that the treatment is missing when the
//! realized outcome is `y_it`. When missingness does not depend on the
//! outcome `p_i1 = p_i0` and this is the usual single-`p_i` expression.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PotentialOutcomeTable;
use crate::error::{OmitError, Result};
use crate::regression::special::{ln_std_normal_pdf, std_normal_cdf};
use crate::rng::{substream, Purpose};
use crate::simulation::population::{draw_covariates, outcome_means, true_propensities};
use crate::simulation::ScenarioConfig;

/// Monte Carlo checks pass when `|mean| <= PASS_SE * se`.
pub const PASS_SE: f64 = 4.0;

/// Gaussian outcome law `y | x, t ~ N(mu_t(x), sigma²)` with the means
/// evaluated per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    pub mu1: Vec<f64>,
    pub mu0: Vec<f64>,
    pub sigma: f64,
}

impl GaussianLaw {
    pub fn ln_density(&self, i: usize, y: f64, treated: bool) -> f64 {
        let mu = if treated { self.mu1[i] } else { self.mu0[i] };
        ln_std_normal_pdf((y - mu) / self.sigma) - self.sigma.ln()
    }

    pub fn density(&self, i: usize, y: f64, treated: bool) -> f64 {
        self.ln_density(i, y, treated).exp()
    }
}

/// Missingness law `P(r_i = 1 | x_i, y) = Φ(offset_i + gamma (y - center) / scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessLaw {
    pub offset: Vec<f64>,
    pub gamma: f64,
    pub y_center: f64,
    pub y_scale: f64,
}

impl MissingnessLaw {
    /// The same probability `p` for every unit.
    pub fn mcar(n: usize, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(OmitError::ProbabilityDomain(p));
        }
        let offset = crate::regression::special::std_normal_quantile(p.max(f64::MIN_POSITIVE))?;
        Ok(MissingnessLaw {
            offset: vec![if p == 0.0 { f64::NEG_INFINITY } else { offset }; n],
            gamma: 0.0,
            y_center: 0.0,
            y_scale: 1.0,
        })
    }

    pub fn prob(&self, i: usize, y: f64) -> f64 {
        let lin = self.offset[i] + self.gamma * (y - self.y_center) / self.y_scale;
        std_normal_cdf(lin)
    }
}

/// A population with known propensities, missingness probabilities and
/// outcome law.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleScenario {
    pub outcomes: PotentialOutcomeTable,
    pub e: Vec<f64>,
    /// Missingness probability when the realized outcome is `y_i1`.
    pub p1: Vec<f64>,
    /// Missingness probability when the realized outcome is `y_i0`.
    pub p0: Vec<f64>,
    pub law: GaussianLaw,
}

impl OracleScenario {
    pub fn new(
        outcomes: PotentialOutcomeTable,
        e: Vec<f64>,
        p1: Vec<f64>,
        p0: Vec<f64>,
        law: GaussianLaw,
    ) -> Result<Self> {
        let n = outcomes.len();
        for (name, len) in [("e", e.len()), ("p1", p1.len()), ("p0", p0.len()), ("mu1", law.mu1.len()), ("mu0", law.mu0.len())] {
            if len != n {
                return Err(OmitError::Shape(format!("{name} has {len} entries for {n} units")));
            }
        }
        if let Some(&bad) = e.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(OmitError::ProbabilityDomain(bad));
        }
        if let Some(&bad) = p1.iter().chain(&p0).find(|&&v| !(0.0..1.0).contains(&v)) {
            return Err(OmitError::ProbabilityDomain(bad));
        }
        if !(law.sigma > 0.0) {
            return Err(OmitError::NonPositiveSigma(law.sigma));
        }
        Ok(OracleScenario { outcomes, e, p1, p0, law })
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    /// Copy with every missingness probability multiplied by `factor`.
    pub fn scale_missingness(&self, factor: f64) -> Result<Self> {
        OracleScenario::new(
            self.outcomes.clone(),
            self.e.clone(),
            self.p1.iter().map(|p| p * factor).collect(),
            self.p0.iter().map(|p| p * factor).collect(),
            self.law.clone(),
        )
    }
}

/// Imputation model for one unit, indexed as `m_{imputed, true}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImputationProbQuad {
    pub m11: f64,
    pub m01: f64,
    pub m10: f64,
    pub m00: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleStrategy {
    /// Propensity sharpened by the true outcome law.
    Omit,
    /// Propensity alone.
    Naive,
}

/// `exp(a) / (exp(a) + exp(b))` without overflow.
fn share(a: f64, b: f64) -> f64 {
    let z = a - b;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (1.0 + ez)
    }
}

pub fn oracle_imputation_probs(s: &OracleScenario, strategy: OracleStrategy) -> Result<Vec<ImputationProbQuad>> {
    (0..s.n())
        .map(|i| {
            let e = s.e[i];
            let (m11, m01) = match strategy {
                OracleStrategy::Naive => (e, e),
                OracleStrategy::Omit => {
                    let (y1, y0) = (s.outcomes.y1[i], s.outcomes.y0[i]);
                    let le = e.ln();
                    let lne = (-e).ln_1p();
                    // d11 = f(y1 | t=1), d10 = f(y1 | t=0), d01 = f(y0 | t=1), d00 = f(y0 | t=0)
                    let (l11, l10) = (s.law.ln_density(i, y1, true), s.law.ln_density(i, y1, false));
                    let (l01, l00) = (s.law.ln_density(i, y0, true), s.law.ln_density(i, y0, false));
                    if (l11 == f64::NEG_INFINITY && l10 == f64::NEG_INFINITY)
                        || (l01 == f64::NEG_INFINITY && l00 == f64::NEG_INFINITY)
                    {
                        return Err(OmitError::InvalidInput(format!("zero total outcome density at unit {i}")));
                    }
                    (share(l11 + le, l10 + lne), share(l01 + le, l00 + lne))
                }
            };
            Ok(ImputationProbQuad {
                m11,
                m01,
                m10: 1.0 - m11,
                m00: 1.0 - m01,
            })
        })
        .collect()
}

pub fn bias_b(s: &OracleScenario, quads: &[ImputationProbQuad]) -> Result<f64> {
    if quads.len() != s.n() {
        return Err(OmitError::Shape(format!("{} quads for {} units", quads.len(), s.n())));
    }
    let total: f64 = (0..s.n())
        .map(|i| {
            let q = &quads[i];
            let e = s.e[i];
            let treated = s.p1[i] * s.outcomes.y1[i] * (1.0 - q.m11 + q.m10 * e / (1.0 - e));
            let control = s.p0[i] * s.outcomes.y0[i] * (1.0 - q.m00 + q.m01 * (1.0 - e) / e);
            treated - control
        })
        .sum();
    Ok(-total / s.n() as f64)
}

/// `-n⁻¹ Σ (p_i1 y_i1 - p_i0 y_i0)`, the bias under propensity-only imputation.
pub fn naive_bias_closed_form(s: &OracleScenario) -> f64 {
    let total: f64 = (0..s.n())
        .map(|i| s.p1[i] * s.outcomes.y1[i] - s.p0[i] * s.outcomes.y0[i])
        .sum();
    -total / s.n() as f64
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub replicates: usize,
    /// Mean of the checked statistic; it should be zero when `expect_zero`.
    pub mean: f64,
    pub mc_se: f64,
    pub standardized: f64,
    /// `|mean| <= 4 mc_se`.
    pub within_bound: bool,
    pub expect_zero: bool,
    /// The observed behavior matches the expectation.
    pub pass: bool,
    /// Replicates drawn again because a complete-case arm was empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redraws: Option<usize>,
}

impl CheckReport {
    fn from_samples(check: impl Into<String>, samples: &[f64], expect_zero: bool) -> Self {
        let r = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / r;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        let mc_se = (var / r).sqrt();
        let standardized = if mc_se > 0.0 {
            mean / mc_se
        } else if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        };
        let within_bound = mean.abs() <= PASS_SE * mc_se;
        CheckReport {
            check: check.into(),
            replicates: samples.len(),
            mean,
            mc_se,
            standardized,
            within_bound,
            expect_zero,
            pass: within_bound == expect_zero,
            redraws: None,
        }
    }

    /// An exact identity check: passes when `|error| <= tol`.
    fn exact(check: impl Into<String>, error: f64, tol: f64) -> Self {
        let ok = error.abs() <= tol;
        CheckReport {
            check: check.into(),
            replicates: 1,
            mean: error,
            mc_se: 0.0,
            standardized: 0.0,
            within_bound: ok,
            expect_zero: true,
            pass: ok,
            redraws: None,
        }
    }
}

/// Super-population: fixed covariates, propensities and laws from which
/// potential outcomes are redrawn.
#[derive(Debug, Clone)]
pub struct SuperPopulation {
    pub e: Vec<f64>,
    pub law: GaussianLaw,
    pub missingness: MissingnessLaw,
}

impl SuperPopulation {
    /// The simulation design of `config`, with the outcome standardization
    /// in the missingness model fixed at the population moments of the
    /// realized outcome.
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let x = draw_covariates(config.n, config.d, config.rho, config.seed)?;
        let e = true_propensities(&x, config);
        let (mu1, mu0) = outcome_means(&x, config.beta_y, config.variant.power());
        let n = config.n as f64;
        let center = (0..config.n).map(|i| e[i] * mu1[i] + (1.0 - e[i]) * mu0[i]).sum::<f64>() / n;
        let second = (0..config.n)
            .map(|i| e[i] * mu1[i] * mu1[i] + (1.0 - e[i]) * mu0[i] * mu0[i])
            .sum::<f64>()
            / n;
        let var = second - center * center + config.sigma * config.sigma;
        let alpha_r = config.alpha_r();
        Ok(SuperPopulation {
            missingness: MissingnessLaw {
                offset: (0..config.n).map(|i| alpha_r + config.beta_r2 * x[(i, 1)]).collect(),
                gamma: config.gamma,
                y_center: center,
                y_scale: var.sqrt(),
            },
            e,
            law: GaussianLaw {
                mu1,
                mu0,
                sigma: config.sigma,
            },
        })
    }

    /// Fresh potential outcomes `y_it ~ N(mu_t, sigma²)`, drawn independently.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<OracleScenario> {
        let n = self.e.len();
        let s = self.law.sigma;
        let mut y1 = Vec::with_capacity(n);
        let mut y0 = Vec::with_capacity(n);
        for i in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            y1.push(self.law.mu1[i] + s * a);
            y0.push(self.law.mu0[i] + s * b);
        }
        self.with_outcomes(PotentialOutcomeTable::new(y1, y0)?)
    }

    pub fn with_outcomes(&self, outcomes: PotentialOutcomeTable) -> Result<OracleScenario> {
        let p1 = (0..self.e.len()).map(|i| self.missingness.prob(i, outcomes.y1[i])).collect();
        let p0 = (0..self.e.len()).map(|i| self.missingness.prob(i, outcomes.y0[i])).collect();
        OracleScenario::new(outcomes, self.e.clone(), p1, p0, self.law.clone())
    }
}

fn check_tag(name: &str) -> u64 {
    name.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(u64::from(b)))
}

fn replicate_rng(seed: u64, tag: &str, r: usize) -> ChaCha8Rng {
    substream(seed, &[Purpose::Check as u64, check_tag(tag), r as u64])
}

/// Mean of `B` over `replicates` fresh potential-outcome draws.
///
/// With `Omit` the true-model imputation makes `E(B) = 0`; with `Naive` the
/// mean is `-n⁻¹ Σ E(p_i1 y_i1 - p_i0 y_i0)` and is expected to be nonzero.
pub fn verify_theorem1(
    sp: &SuperPopulation,
    strategy: OracleStrategy,
    replicates: usize,
    seed: u64,
) -> Result<CheckReport> {
    if replicates < 2 {
        return Err(OmitError::InvalidInput("need at least 2 replicates".into()));
    }
    let name = match strategy {
        OracleStrategy::Omit => "theorem1",
        OracleStrategy::Naive => "theorem1-naive",
    };
    let samples = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = sp.draw(&mut replicate_rng(seed, name, r))?;
            bias_b(&s, &oracle_imputation_probs(&s, strategy)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckReport::from_samples(name, &samples, strategy == OracleStrategy::Omit))
}

/// Fixed population for complete-case checks: missingness depends on
/// covariates only.
#[derive(Debug, Clone)]
pub struct CompleteCaseSetup {
    pub outcomes: PotentialOutcomeTable,
    pub e: Vec<f64>,
    pub p: Vec<f64>,
}

/// The settings of the complete-case check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prop1Condition {
    /// Homogeneous effects, missingness driven by `x_2`.
    Homogeneous,
    /// Heterogeneous effects, missingness with constant probability.
    Mcar,
    /// Heterogeneous effects, missingness driven by `x_2`. CC is biased.
    HeterogeneousMar,
}

impl Prop1Condition {
    pub fn label(self) -> &'static str {
        match self {
            Prop1Condition::Homogeneous => "prop1-homog",
            Prop1Condition::Mcar => "prop1-mcar",
            Prop1Condition::HeterogeneousMar => "prop1-negative-control",
        }
    }

    pub fn expect_unbiased(self) -> bool {
        self != Prop1Condition::HeterogeneousMar
    }
}

impl CompleteCaseSetup {
    /// Population of the simulation design with `beta_y` 1 (homogeneous)
    /// or 7 (heterogeneous), missingness level 0.3 and no outcome term in
    /// the missingness model.
    pub fn design(condition: Prop1Condition, n: usize, seed: u64) -> Result<Self> {
        let beta_y = if condition == Prop1Condition::Homogeneous { 1.0 } else { 7.0 };
        let config = ScenarioConfig {
            n,
            beta_y,
            sigma: 1.0,
            miss_level: 0.3,
            gamma: 0.0,
            beta_r2: if condition == Prop1Condition::Mcar { 0.0 } else { 0.75 },
            seed,
            ..ScenarioConfig::default()
        };
        let pop = crate::simulation::generate_population(&config)?;
        let e = true_propensities(&pop.x, &config);
        let alpha_r = config.alpha_r();
        let p = (0..n).map(|i| std_normal_cdf(alpha_r + config.beta_r2 * pop.x[(i, 1)])).collect();
        Ok(CompleteCaseSetup {
            outcomes: pop.outcomes,
            e,
            p,
        })
    }
}

/// `τ̂_CC - τ_fp` over `replicates` joint draws of treatment and missingness,
/// with true propensities. Draws whose complete cases miss an arm are
/// repeated and counted.
pub fn verify_proposition1(
    setup: &CompleteCaseSetup,
    name: &str,
    expect_unbiased: bool,
    replicates: usize,
    seed: u64,
) -> Result<CheckReport> {
    if replicates < 2 {
        return Err(OmitError::InvalidInput("need at least 2 replicates".into()));
    }
    let n = setup.e.len();
    let tau = setup.outcomes.tau_fp;
    let draws = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, name, r);
            let mut redraws = 0usize;
            loop {
                let mut sum = 0.0;
                let (mut n_obs, mut treated) = (0usize, 0usize);
                for i in 0..n {
                    let t = rng.random::<f64>() < setup.e[i];
                    let missing = rng.random::<f64>() < setup.p[i];
                    if missing {
                        continue;
                    }
                    n_obs += 1;
                    if t {
                        treated += 1;
                        sum += setup.outcomes.y1[i] / setup.e[i];
                    } else {
                        sum -= setup.outcomes.y0[i] / (1.0 - setup.e[i]);
                    }
                }
                if treated == 0 || treated == n_obs {
                    redraws += 1;
                    continue;
                }
                return (sum / n_obs as f64 - tau, redraws);
            }
        })
        .collect::<Vec<_>>();
    let samples: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut report = CheckReport::from_samples(name, &samples, expect_unbiased);
    report.redraws = Some(draws.iter().map(|d| d.1).sum());
    Ok(report)
}

/// Simulates treatment, missingness and one imputation per replicate on a
/// fixed population and compares the mean error of `τ̂^(m)` with `B`.
pub fn verify_bias_formula(
    s: &OracleScenario,
    strategy: OracleStrategy,
    replicates: usize,
    seed: u64,
) -> Result<CheckReport> {
    if replicates < 2 {
        return Err(OmitError::InvalidInput("need at least 2 replicates".into()));
    }
    let quads = oracle_imputation_probs(s, strategy)?;
    let b = bias_b(s, &quads)?;
    let tau = s.outcomes.tau_fp;
    let n = s.n();
    let name = match strategy {
        OracleStrategy::Omit => "bias-formula-omit",
        OracleStrategy::Naive => "bias-formula-naive",
    };
    let samples: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, name, r);
            let mut sum = 0.0;
            for i in 0..n {
                let e = s.e[i];
                let t = rng.random::<f64>() < e;
                let (y, p) = if t { (s.outcomes.y1[i], s.p1[i]) } else { (s.outcomes.y0[i], s.p0[i]) };
                let missing = rng.random::<f64>() < p;
                let t_star = if missing {
                    let q = if t { quads[i].m11 } else { quads[i].m01 };
                    rng.random::<f64>() < q
                } else {
                    t
                };
                sum += if t_star { y / e } else { -y / (1.0 - e) };
            }
            sum / n as f64 - tau - b
        })
        .collect();
    Ok(CheckReport::from_samples(name, &samples, true))
}

/// Exact algebraic identities on random populations, each to `1e-12`.
pub fn verify_bias_identities(n: usize, seed: u64) -> Result<Vec<CheckReport>> {
    const TOL: f64 = 1e-12;
    let config = ScenarioConfig {
        n,
        beta_y: 4.0,
        sigma: 1.0,
        seed,
        ..ScenarioConfig::default()
    };
    let sp = SuperPopulation::from_config(&config)?;
    let s = sp.draw(&mut replicate_rng(seed, "identities", 0))?;
    let mut reports = Vec::new();

    let perfect = vec![
        ImputationProbQuad {
            m11: 1.0,
            m01: 0.0,
            m10: 0.0,
            m00: 1.0,
        };
        n
    ];
    reports.push(CheckReport::exact("bias-perfect-imputation", bias_b(&s, &perfect)?, TOL));

    let naive = oracle_imputation_probs(&s, OracleStrategy::Naive)?;
    let err = bias_b(&s, &naive)? - naive_bias_closed_form(&s);
    reports.push(CheckReport::exact("bias-naive-closed-form", err, TOL));

    let zero = s.scale_missingness(0.0)?;
    let quads = oracle_imputation_probs(&zero, OracleStrategy::Omit)?;
    reports.push(CheckReport::exact("bias-no-missingness", bias_b(&zero, &quads)?, TOL));

    let omit = oracle_imputation_probs(&s, OracleStrategy::Omit)?;
    let half = s.scale_missingness(0.5)?;
    let err = bias_b(&s, &omit)? - 2.0 * bias_b(&half, &omit)?;
    reports.push(CheckReport::exact("bias-linear-in-p", err, TOL));

    let worst = omit
        .iter()
        .chain(&naive)
        .map(|q| (q.m11 + q.m10 - 1.0).abs().max((q.m01 + q.m00 - 1.0).abs()))
        .fold(0.0, f64::max);
    reports.push(CheckReport::exact("quad-normalization", worst, TOL));
    Ok(reports)
}

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckSuite {
    Theorem1,
    Prop1Homog,
    Prop1Mcar,
    BiasIdentities,
    BiasFormula,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Overrides each check's default replicate count.
    pub replicates: Option<usize>,
    pub n: usize,
    /// Runs the homogeneous complete-case check on a heterogeneous
    /// population, which must then fail.
    pub inject_heterogeneity: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            replicates: None,
            n: 1000,
            inject_heterogeneity: false,
        }
    }
}

pub const THEOREM1_REPLICATES: usize = 2000;
pub const PROP1_REPLICATES: usize = 500;
pub const BIAS_FORMULA_REPLICATES: usize = 1500;

fn theorem1_population(opts: &SuiteOptions) -> Result<SuperPopulation> {
    SuperPopulation::from_config(&ScenarioConfig {
        n: opts.n,
        beta_y: 4.0,
        sigma: 1.0,
        miss_level: 0.3,
        seed: opts.seed,
        ..ScenarioConfig::default()
    })
}

fn prop1(condition: Prop1Condition, opts: &SuiteOptions) -> Result<CheckReport> {
    let r = opts.replicates.unwrap_or(PROP1_REPLICATES);
    let (setup_condition, expect) = if opts.inject_heterogeneity && condition == Prop1Condition::Homogeneous {
        (Prop1Condition::HeterogeneousMar, true)
    } else {
        (condition, condition.expect_unbiased())
    };
    let setup = CompleteCaseSetup::design(setup_condition, opts.n, opts.seed)?;
    verify_proposition1(&setup, condition.label(), expect, r, opts.seed)
}

/// Runs `suite`; `All` adds the complete-case negative control.
pub fn run_suite(suite: CheckSuite, opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let wants = |s: CheckSuite| suite == s || suite == CheckSuite::All;
    if wants(CheckSuite::BiasIdentities) {
        out.extend(verify_bias_identities(opts.n, opts.seed)?);
    }
    if wants(CheckSuite::BiasFormula) {
        let sp = theorem1_population(opts)?;
        let s = sp.draw(&mut replicate_rng(opts.seed, "bias-formula", 0))?;
        let r = opts.replicates.unwrap_or(BIAS_FORMULA_REPLICATES);
        for strategy in [OracleStrategy::Omit, OracleStrategy::Naive] {
            out.push(verify_bias_formula(&s, strategy, r, opts.seed)?);
        }
    }
    if wants(CheckSuite::Theorem1) {
        let sp = theorem1_population(opts)?;
        let r = opts.replicates.unwrap_or(THEOREM1_REPLICATES);
        for strategy in [OracleStrategy::Omit, OracleStrategy::Naive] {
            out.push(verify_theorem1(&sp, strategy, r, opts.seed)?);
        }
    }
    if wants(CheckSuite::Prop1Homog) {
        out.push(prop1(Prop1Condition::Homogeneous, opts)?);
    }
    if wants(CheckSuite::Prop1Mcar) {
        out.push(prop1(Prop1Condition::Mcar, opts)?);
    }
    if suite == CheckSuite::All {
        out.push(prop1(Prop1Condition::HeterogeneousMar, opts)?);
    }
    Ok(out)
}
