//! Finite populations and per-replicate treatment and missingness draws.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{check_exchangeable, ScenarioConfig};
use crate::data::{ObservationTable, PotentialOutcomeTable, Standardization};
use crate::error::{OmitError, Result};
use crate::regression::special::std_normal_cdf;
use crate::rng::{digest_f64, substream, CounterRng, Purpose};

/// Lower Cholesky factor of `(1 - rho) I + rho 11'`.
pub fn exchangeable_cholesky(d: usize, rho: f64) -> Result<DMatrix<f64>> {
    check_exchangeable(rho, d)?;
    let corr = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
    corr.cholesky()
        .map(|c| c.l())
        .ok_or(OmitError::CorrelationNotPositiveDefinite { rho, d })
}

/// `n` draws from a standard `d`-variate normal with exchangeable correlation.
///
/// The stream depends on `(seed, n, d, rho)` only, so every grid cell that
/// shares these values shares the covariates.
pub fn draw_covariates(n: usize, d: usize, rho: f64, seed: u64) -> Result<DMatrix<f64>> {
    let l = exchangeable_cholesky(d, rho)?;
    let mut rng = substream(seed, &[Purpose::Covariates as u64, n as u64, d as u64, rho.to_bits()]);
    let mut z = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(z * l.transpose())
}

/// Covariates and potential outcomes, fixed across replicates.
#[derive(Debug, Clone)]
pub struct Population {
    pub x: DMatrix<f64>,
    pub mu1: Vec<f64>,
    pub mu0: Vec<f64>,
    pub outcomes: PotentialOutcomeTable,
    /// Digest of covariates and potential outcomes.
    pub digest: u64,
}

/// Outcome means `(2 + x_1 + beta_y x_2^k, 1 + x_1 + x_2^k)` for every row.
pub fn outcome_means(x: &DMatrix<f64>, beta_y: f64, power: u32) -> (Vec<f64>, Vec<f64>) {
    (0..x.nrows())
        .map(|i| {
            let h = x[(i, 1)].powi(power as i32);
            (2.0 + x[(i, 0)] + beta_y * h, 1.0 + x[(i, 0)] + h)
        })
        .unzip()
}

pub fn generate_population(config: &ScenarioConfig) -> Result<Population> {
    config.validate()?;
    let x = draw_covariates(config.n, config.d, config.rho, config.seed)?;
    let (mu1, mu0) = outcome_means(&x, config.beta_y, config.variant.power());
    let mut rng = substream(config.seed, &[Purpose::OutcomeNoise as u64, config.n as u64]);
    let mut y1 = Vec::with_capacity(config.n);
    let mut y0 = Vec::with_capacity(config.n);
    // One noise draw per unit serves both arms, so unit effects are exactly
    // mu1 - mu0.
    for i in 0..config.n {
        let eps: f64 = rng.sample(StandardNormal);
        y1.push(mu1[i] + config.sigma * eps);
        y0.push(mu0[i] + config.sigma * eps);
    }
    let mut all: Vec<f64> = x.iter().copied().collect();
    all.extend_from_slice(&y1);
    all.extend_from_slice(&y0);
    let digest = digest_f64(&all);
    Ok(Population {
        x,
        mu1,
        mu0,
        outcomes: PotentialOutcomeTable::new(y1, y0)?,
        digest,
    })
}

/// True propensities `Φ(alpha_t + beta_t2 x_2)`.
pub fn true_propensities(x: &DMatrix<f64>, config: &ScenarioConfig) -> Vec<f64> {
    let alpha = config.alpha_t();
    (0..x.nrows())
        .map(|i| std_normal_cdf(alpha + config.beta_t2 * x[(i, 1)]))
        .collect()
}

/// One replicate's observed data with the hidden truth kept alongside.
#[derive(Debug, Clone)]
pub struct ReplicateData {
    pub table: ObservationTable,
    pub t_true: Vec<bool>,
    pub e_true: Vec<f64>,
    /// Missingness probabilities given the realized outcome.
    pub p_missing: Vec<f64>,
}

impl ReplicateData {
    pub fn missing_rate(&self) -> f64 {
        self.table.n_missing() as f64 / self.table.n() as f64
    }

    pub fn treated_rate(&self) -> f64 {
        self.t_true.iter().filter(|&&t| t).count() as f64 / self.t_true.len() as f64
    }
}

pub fn covariate_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// Draws treatments and missingness for replicate `replicate`.
///
/// Treatment uniforms depend on `(seed, replicate)` and missingness uniforms
/// likewise, so at a fixed seed the realized missing set only grows with the
/// missingness level.
pub fn assign_and_mask(pop: &Population, config: &ScenarioConfig, replicate: usize) -> Result<ReplicateData> {
    let n = pop.x.nrows();
    let e_true = true_propensities(&pop.x, config);
    let mut ut = CounterRng::new(config.seed, &[Purpose::Treatment as u64, replicate as u64]);
    let t_true: Vec<bool> = (0..n).map(|i| ut.uniform(i as u64, 0) < e_true[i]).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| if t_true[i] { pop.outcomes.y1[i] } else { pop.outcomes.y0[i] })
        .collect();
    let scale = Standardization::fit(&y).ok_or_else(|| OmitError::ConstantColumn("y".into()))?;
    let alpha_r = config.alpha_r();
    let mut ur = CounterRng::new(config.seed, &[Purpose::Missingness as u64, replicate as u64]);
    let mut p_missing = Vec::with_capacity(n);
    let mut t_obs = Vec::with_capacity(n);
    for i in 0..n {
        let p = std_normal_cdf(alpha_r + config.beta_r2 * pop.x[(i, 1)] + config.gamma * scale.apply(y[i]));
        p_missing.push(p);
        t_obs.push(if ur.uniform(i as u64, 0) < p { None } else { Some(t_true[i]) });
    }
    let table = ObservationTable::with_names(
        covariate_names(config.d),
        "y".into(),
        "t".into(),
        pop.x.clone(),
        y,
        t_obs,
    )?;
    Ok(ReplicateData {
        table,
        t_true,
        e_true,
        p_missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            seed: 17,
            ..ScenarioConfig::default()
        }
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn cholesky_reproduces_correlation() {
        let l = exchangeable_cholesky(4, 0.4).unwrap();
        let s = &l * l.transpose();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.4 };
                assert!((s[(i, j)] - want).abs() < 1e-14);
            }
        }
        assert!(exchangeable_cholesky(10, 1.0).is_err());
        assert!(exchangeable_cholesky(10, -0.2).is_err());
    }

    #[test]
    fn covariate_correlations_near_target() {
        let x = draw_covariates(1000, 10, 0.4, 3).unwrap();
        for (a, b) in [(0, 1), (2, 7), (4, 9)] {
            let c: Vec<f64> = x.column(a).iter().copied().collect();
            let d: Vec<f64> = x.column(b).iter().copied().collect();
            let r = corr(&c, &d);
            assert!((r - 0.4).abs() < 0.08, "corr({a},{b}) = {r}");
        }
    }

    #[test]
    fn homogeneous_effect_when_beta_is_one() {
        let pop = generate_population(&cfg()).unwrap();
        assert!(pop.outcomes.unit_effects().iter().all(|t| (t - 1.0).abs() < 1e-12));
        assert!((pop.outcomes.tau_fp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heterogeneous_ate_matches_covariate_moment() {
        let c = ScenarioConfig { beta_y: 4.0, ..cfg() };
        let pop = generate_population(&c).unwrap();
        let mean_sq = pop.x.column(1).iter().map(|v| v * v).sum::<f64>() / 1000.0;
        let mean_mu = pop.mu1.iter().zip(&pop.mu0).map(|(a, b)| a - b).sum::<f64>() / 1000.0;
        assert!((mean_mu - (1.0 + 3.0 * mean_sq)).abs() < 1e-12);
        assert!((pop.outcomes.tau_fp - mean_mu).abs() < 1e-12);
        assert!((pop.outcomes.tau_fp - 4.0).abs() < 0.5);
    }

    #[test]
    fn population_is_deterministic_and_shared() {
        let a = generate_population(&cfg()).unwrap();
        let b = generate_population(&cfg()).unwrap();
        assert_eq!(a.digest, b.digest);
        let other_cell = generate_population(&ScenarioConfig { miss_level: 0.1, ..cfg() }).unwrap();
        assert_eq!(a.digest, other_cell.digest);
        let other_seed = generate_population(&ScenarioConfig { seed: 18, ..cfg() }).unwrap();
        assert_ne!(a.digest, other_seed.digest);
    }

    #[test]
    fn treated_and_missing_shares() {
        let c = ScenarioConfig { beta_y: 4.0, ..cfg() };
        let pop = generate_population(&c).unwrap();
        let (mut treated, mut missing) = (0.0, 0.0);
        for r in 0..40 {
            let rep = assign_and_mask(&pop, &c, r).unwrap();
            treated += rep.treated_rate();
            missing += rep.missing_rate();
        }
        assert!((treated / 40.0 - 0.40).abs() < 0.02, "{}", treated / 40.0);
        // x_2 and the outcome widen the probit, so the realized share
        // sits a little above the nominal 0.30 (about 0.34)
        assert!((missing / 40.0 - 0.34).abs() < 0.03, "{}", missing / 40.0);
    }

    #[test]
    fn missingness_is_monotone_in_level() {
        let base = cfg();
        let pop = generate_population(&base).unwrap();
        let sets: Vec<Vec<bool>> = [0.1, 0.3, 0.5]
            .iter()
            .map(|&m| assign_and_mask(&pop, &ScenarioConfig { miss_level: m, ..base.clone() }, 2).unwrap().table.missing())
            .collect();
        for w in sets.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(a, b)| !a || *b));
        }
    }

    #[test]
    fn observed_outcome_follows_true_treatment() {
        let pop = generate_population(&cfg()).unwrap();
        let rep = assign_and_mask(&pop, &cfg(), 0).unwrap();
        for i in 0..rep.table.n() {
            let want = if rep.t_true[i] { pop.outcomes.y1[i] } else { pop.outcomes.y0[i] };
            assert_eq!(rep.table.y()[i], want);
            if let Some(t) = rep.table.t()[i] {
                assert_eq!(t, rep.t_true[i]);
            }
        }
    }
}
