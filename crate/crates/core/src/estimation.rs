//! Inverse probability weighting and Rubin's combining rules.

use serde::{Serialize, Serializer};

use crate::data::ObservationTable;
use crate::error::{OmitError, Result};
use crate::regression::special::{std_normal_quantile, student_t_quantile};
use crate::regression::PROPENSITY_CLIP;

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Horvitz-Thompson IPW estimate on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpwEstimate {
    pub tau_hat: f64,
    /// With-replacement linearization variance of `tau_hat`.
    pub u: f64,
    pub n_used: usize,
    pub weights_summary: WeightSummary,
    /// Units whose propensity sits on a clipping bound.
    #[serde(skip)]
    pub clipped_weights: usize,
}

impl IpwEstimate {
    pub fn std_error(&self) -> f64 {
        self.u.sqrt()
    }

    /// Normal-theory interval `tau_hat ± z √u`.
    pub fn normal_interval(&self, level: f64) -> Result<(f64, f64)> {
        check_level(level)?;
        let z = std_normal_quantile(0.5 * (1.0 + level))?;
        let half = z * self.std_error();
        Ok((self.tau_hat - half, self.tau_hat + half))
    }
}

pub fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(OmitError::InvalidInput(format!("level must be in (0,1), got {level}")));
    }
    Ok(())
}

/// `tau_hat = n⁻¹ Σ ψ_i` with `ψ_i = y_i t_i / ê_i − y_i (1 − t_i) / (1 − ê_i)`
/// and `u = Σ (ψ_i − ψ̄)² / (n (n − 1))`.
pub fn ipw_estimate(y: &[f64], t_star: &[bool], e_hat: &[f64], denominator_n: usize) -> Result<IpwEstimate> {
    let n = y.len();
    if t_star.len() != n || e_hat.len() != n {
        return Err(OmitError::Shape(format!(
            "y has {n} entries, t has {}, e has {}",
            t_star.len(),
            e_hat.len()
        )));
    }
    if n < 2 || denominator_n < 2 {
        return Err(OmitError::InvalidInput(format!(
            "IPW needs at least 2 units, got {n} (denominator {denominator_n})"
        )));
    }
    if let Some(e) = e_hat.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(OmitError::ProbabilityDomain(*e));
    }
    let mut psi = Vec::with_capacity(n);
    let (mut wmin, mut wmax, mut wsum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut clipped = 0;
    for i in 0..n {
        let e = e_hat[i];
        if e <= PROPENSITY_CLIP || e >= 1.0 - PROPENSITY_CLIP {
            clipped += 1;
        }
        let w = if t_star[i] { 1.0 / e } else { 1.0 / (1.0 - e) };
        wmin = wmin.min(w);
        wmax = wmax.max(w);
        wsum += w;
        psi.push(if t_star[i] { y[i] * w } else { -y[i] * w });
    }
    let total: f64 = psi.iter().sum();
    let mean = total / n as f64;
    let ss: f64 = psi.iter().map(|p| (p - mean).powi(2)).sum();
    Ok(IpwEstimate {
        tau_hat: total / denominator_n as f64,
        u: ss / (n as f64 * (n as f64 - 1.0)),
        n_used: n,
        weights_summary: WeightSummary {
            min: wmin,
            max: wmax,
            mean: wsum / n as f64,
        },
        clipped_weights: clipped,
    })
}

/// IPW over the complete cases only, divided by `n_obs`.
pub fn ipw_complete_case(table: &ObservationTable, e_hat: &[f64]) -> Result<IpwEstimate> {
    if e_hat.len() != table.n() {
        return Err(OmitError::Shape(format!("{} propensities for {} units", e_hat.len(), table.n())));
    }
    table.require_both_arms()?;
    let mut y = Vec::new();
    let mut t = Vec::new();
    let mut e = Vec::new();
    for i in 0..table.n() {
        if let Some(ti) = table.t()[i] {
            y.push(table.y()[i]);
            t.push(ti);
            e.push(e_hat[i]);
        }
    }
    let n_obs = y.len();
    ipw_estimate(&y, &t, &e, n_obs)
}

fn serialize_df<S: Serializer>(nu: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if nu.is_finite() {
        s.serialize_f64(*nu)
    } else {
        s.serialize_none()
    }
}

/// Multiple-imputation inference from M completed-data analyses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledEstimate {
    pub tau_bar: f64,
    pub u_bar: f64,
    pub b: f64,
    #[serde(rename = "T_M")]
    pub t_m: f64,
    /// Degrees of freedom; `+inf` (serialized as null) when `b = 0`.
    #[serde(serialize_with = "serialize_df")]
    pub nu: f64,
    #[serde(serialize_with = "serialize_ci")]
    pub ci: (f64, f64),
    pub level: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

fn serialize_ci<S: Serializer>(ci: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
    [ci.0, ci.1].serialize(s)
}

impl PooledEstimate {
    pub fn std_error(&self) -> f64 {
        self.t_m.sqrt()
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci.0 <= value && value <= self.ci.1
    }
}

/// Rubin's rules: τ̄, ū, b, `T_M = (1 + 1/M) b + ū`,
/// `ν = (M − 1)(1 + ū / ((1 + 1/M) b))²` and a t interval.
pub fn pool(estimates: &[IpwEstimate], level: f64) -> Result<PooledEstimate> {
    check_level(level)?;
    let m = estimates.len();
    if m < 2 {
        return Err(OmitError::InvalidInput(format!("pooling needs M >= 2, got {m}")));
    }
    let mf = m as f64;
    let tau_bar = estimates.iter().map(|e| e.tau_hat).sum::<f64>() / mf;
    let u_bar = estimates.iter().map(|e| e.u).sum::<f64>() / mf;
    let b = estimates.iter().map(|e| (e.tau_hat - tau_bar).powi(2)).sum::<f64>() / (mf - 1.0);
    let between = (1.0 + 1.0 / mf) * b;
    let t_m = between + u_bar;
    let (nu, crit) = if b > 0.0 {
        let nu = (mf - 1.0) * (1.0 + u_bar / between).powi(2);
        (nu, student_t_quantile(0.5 * (1.0 + level), nu)?)
    } else {
        (f64::INFINITY, std_normal_quantile(0.5 * (1.0 + level))?)
    };
    let half = crit * t_m.sqrt();
    Ok(PooledEstimate {
        tau_bar,
        u_bar,
        b,
        t_m,
        nu,
        ci: (tau_bar - half, tau_bar + half),
        level,
        m,
    })
}
