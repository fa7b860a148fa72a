//! Synthetic stand-in for a child-development cohort with a partly missing
//! binary income indicator.
//!
//! The layout mirrors a typical observational extract: 2189 children, nine
//! covariates (five binary), a test-score outcome near 100 and roughly a
//! quarter treated. About a fifth of the treatment indicators are hidden at
//! random given covariates and outcome. The treatment raises the score, more
//! so for children of mothers with high test scores.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::ObservationTable;
use crate::error::Result;
use crate::regression::special::std_normal_cdf;
use crate::rng::{substream, Purpose};

pub const STANDIN_N: usize = 2189;

pub const STANDIN_COVARIATES: [&str; 9] = [
    "female",
    "nonwhite",
    "birth_weight",
    "mother_afqt",
    "mother_age",
    "mother_college",
    "breastfed",
    "daycare",
    "premature",
];
pub const STANDIN_OUTCOME: &str = "piatm";
pub const STANDIN_TREATMENT: &str = "high_income";

#[derive(Debug, Clone)]
pub struct StandIn {
    pub table: ObservationTable,
    pub t_true: Vec<bool>,
    /// Average of the unit-level effects built into the outcome.
    pub true_ate: f64,
}

fn bern(rng: &mut impl Rng, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

pub fn generate_standin(seed: u64) -> Result<StandIn> {
    let n = STANDIN_N;
    let mut rng = substream(seed, &[Purpose::StandIn as u64]);
    let mut x = DMatrix::zeros(n, STANDIN_COVARIATES.len());
    let mut y = Vec::with_capacity(n);
    let mut t_true = Vec::with_capacity(n);
    let mut t_obs = Vec::with_capacity(n);
    let mut effect_sum = 0.0;
    for i in 0..n {
        let mut z = || -> f64 { rng.sample(StandardNormal) };
        let (z_afqt, z_age, z_bw, z_out) = (z(), z(), z(), z());
        let nonwhite = bern(&mut rng, 0.35);
        let female = bern(&mut rng, 0.5);
        let afqt_z = 0.8 * z_afqt - 0.6 * (nonwhite - 0.35);
        let age_z = 0.7 * z_age + 0.4 * afqt_z;
        let college = bern(&mut rng, std_normal_cdf(-0.9 + 0.7 * afqt_z + 0.3 * age_z));
        let premature = bern(&mut rng, 0.1);
        let bw_z = 0.9 * z_bw - 1.2 * premature + 0.1;
        let breastfed = bern(&mut rng, std_normal_cdf(-0.8 + 0.4 * college + 0.2 * afqt_z));
        let daycare = bern(&mut rng, 0.45);

        let e = std_normal_cdf(-0.95 + 0.45 * afqt_z + 0.25 * age_z + 0.45 * college - 0.3 * nonwhite);
        let t = rng.random::<f64>() < e;
        let effect = 5.0 + 2.0 * afqt_z + 1.5 * college;
        effect_sum += effect;
        let base = 99.0 + 4.0 * afqt_z + 1.5 * college - 2.0 * nonwhite + 0.8 * bw_z + breastfed
            - 0.5 * female
            + 0.5 * daycare;
        let yi = base + if t { effect } else { 0.0 } + 11.0 * z_out;
        let r = std_normal_cdf(-0.95 - 0.3 * age_z - 0.3 * college + 0.35 * nonwhite - 0.15 * (yi - 100.0) / 12.0);
        let missing = rng.random::<f64>() < r;

        let row = [
            female,
            nonwhite,
            118.0 + 18.0 * bw_z,
            (45.0 + 25.0 * afqt_z).clamp(1.0, 99.0),
            24.0 + 3.5 * age_z,
            college,
            breastfed,
            daycare,
            premature,
        ];
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
        y.push(yi);
        t_true.push(t);
        t_obs.push(if missing { None } else { Some(t) });
    }
    let table = ObservationTable::with_names(
        STANDIN_COVARIATES.iter().map(|s| s.to_string()).collect(),
        STANDIN_OUTCOME.into(),
        STANDIN_TREATMENT.into(),
        x,
        y,
        t_obs,
    )?;
    Ok(StandIn {
        table,
        t_true,
        true_ate: effect_sum / n as f64,
    })
}
