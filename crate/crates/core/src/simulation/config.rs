use serde::{Deserialize, Serialize};

use crate::error::{OmitError, Result};
use crate::regression::special::std_normal_quantile;

/// Shape of the covariate effect in the outcome means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `x_2²` in both arms.
    #[default]
    Quadratic,
    /// `x_2³` in both arms.
    Cubic,
}

impl Variant {
    pub fn power(self) -> u32 {
        match self {
            Variant::Quadratic => 2,
            Variant::Cubic => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Quadratic => "quadratic",
            Variant::Cubic => "cubic",
        }
    }
}

/// Estimation methods compared in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// OMIT with the correctly specified outcome model.
    #[serde(rename = "OMIT_Correct")]
    OmitCorrect,
    /// OMIT with main effects and treatment interactions of every covariate.
    #[serde(rename = "OMIT_lm")]
    OmitLm,
    /// OMIT with the polynomial-augmented interaction basis.
    #[serde(rename = "OMIT_flex")]
    OmitFlex,
    #[serde(rename = "NaiveMI")]
    NaiveMi,
    #[serde(rename = "NaivePlusY")]
    NaivePlusY,
    #[serde(rename = "CC")]
    CompleteCase,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::OmitCorrect,
        Method::OmitLm,
        Method::OmitFlex,
        Method::NaiveMi,
        Method::NaivePlusY,
        Method::CompleteCase,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::OmitCorrect => "OMIT_Correct",
            Method::OmitLm => "OMIT_lm",
            Method::OmitFlex => "OMIT_flex",
            Method::NaiveMi => "NaiveMI",
            Method::NaivePlusY => "NaivePlusY",
            Method::CompleteCase => "CC",
        }
    }

    /// Methods run when a configuration does not list any.
    pub fn default_set() -> Vec<Method> {
        vec![Method::OmitCorrect, Method::OmitLm, Method::NaiveMi, Method::CompleteCase]
    }
}

fn default_n() -> usize {
    1000
}
fn default_d() -> usize {
    10
}
fn default_rho() -> f64 {
    0.4
}
fn default_replicates() -> usize {
    500
}
fn default_m() -> usize {
    20
}
fn default_level() -> f64 {
    0.95
}
fn default_treated_share() -> f64 {
    0.4
}
fn default_beta_t2() -> f64 {
    0.35
}
fn default_beta_r2() -> f64 {
    0.75
}
fn default_gamma() -> f64 {
    0.1
}
fn default_methods() -> Vec<Method> {
    Method::default_set()
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub beta_y: f64,
    pub sigma: f64,
    /// Target marginal missingness; the missingness intercept is its probit.
    pub miss_level: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_m", rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Treated share at `x_2 = 0`; the treatment intercept is its probit.
    #[serde(default = "default_treated_share")]
    pub treated_share: f64,
    #[serde(default = "default_beta_t2")]
    pub beta_t2: f64,
    #[serde(default = "default_beta_r2")]
    pub beta_r2: f64,
    /// Coefficient on the standardized realized outcome in the missingness model.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: default_n(),
            d: default_d(),
            rho: default_rho(),
            beta_y: 1.0,
            sigma: 1.0,
            miss_level: 0.3,
            replicates: default_replicates(),
            m: default_m(),
            variant: Variant::Quadratic,
            methods: default_methods(),
            seed: 0,
            level: default_level(),
            treated_share: default_treated_share(),
            beta_t2: default_beta_t2(),
            beta_r2: default_beta_r2(),
            gamma: default_gamma(),
        }
    }
}

/// Exchangeable correlation is positive definite iff `-1/(d-1) < rho < 1`.
pub fn check_exchangeable(rho: f64, d: usize) -> Result<()> {
    let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(rho < 1.0 && rho > lower) {
        return Err(OmitError::CorrelationNotPositiveDefinite { rho, d });
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_exchangeable(self.rho, self.d)?;
        let bad = |msg: String| Err(OmitError::Config(msg));
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if self.n < 4 * self.d {
            return bad(format!("n must be at least 4*d = {}, got {}", 4 * self.d, self.n));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(OmitError::NonPositiveSigma(self.sigma));
        }
        if !self.beta_y.is_finite() || !self.beta_t2.is_finite() || !self.beta_r2.is_finite() || !self.gamma.is_finite() {
            return bad("coefficients must be finite".into());
        }
        for (name, v) in [("miss_level", self.miss_level), ("treated_share", self.treated_share), ("level", self.level)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must be in (0,1), got {v}"));
            }
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.m < 2 {
            return bad(format!("M must be at least 2, got {}", self.m));
        }
        Ok(())
    }

    pub fn alpha_t(&self) -> f64 {
        std_normal_quantile(self.treated_share).expect("validated treated_share")
    }

    pub fn alpha_r(&self) -> f64 {
        std_normal_quantile(self.miss_level).expect("validated miss_level")
    }

    /// Stable identifier such as `quadratic_by4_s1_miss30`.
    pub fn scenario_id(&self) -> String {
        format!(
            "{}_by{}_s{}_miss{:02}",
            self.variant.label(),
            self.beta_y,
            self.sigma,
            (self.miss_level * 100.0).round() as i64
        )
    }
}

/// Axes of a scenario grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub beta_y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub miss: Vec<f64>,
}

/// A grid of scenarios read from JSON. Every field other than `grid` is
/// shared by all cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub grid: GridAxes,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default, rename = "M")]
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub level: Option<f64>,
}

impl GridConfig {
    /// Expands the grid, beta_y slowest and missingness fastest.
    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        let base = ScenarioConfig::default();
        let mut out = Vec::new();
        for &beta_y in &self.grid.beta_y {
            for &sigma in &self.grid.sigma {
                for &miss_level in &self.grid.miss {
                    let cfg = ScenarioConfig {
                        n: self.n.unwrap_or(base.n),
                        d: self.d.unwrap_or(base.d),
                        rho: self.rho.unwrap_or(base.rho),
                        beta_y,
                        sigma,
                        miss_level,
                        replicates: self.replicates.unwrap_or(base.replicates),
                        m: self.m.unwrap_or(base.m),
                        variant: self.variant,
                        methods: self.methods.clone().unwrap_or_else(Method::default_set),
                        seed: self.seed.unwrap_or(base.seed),
                        level: self.level.unwrap_or(base.level),
                        ..base.clone()
                    };
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }
}
