//! Propensity and outcome regressions.

mod ols;
mod probit;
pub mod qr;
pub mod special;

pub use ols::{
    build_design, build_interaction_design, fit_ols, fit_outcome_model, gaussian_density,
    BasisTerm, FittedOutcomeModel, LeastSquaresFit, OutcomeBasis, SIGMA_FLOOR,
};
pub use probit::{
    clip_probability, fit_probit, fit_probit_matrix, predict_propensity, FittedPropensityModel,
    MAX_ITERATIONS, PROPENSITY_CLIP, SEPARATION_ETA, STEP_TOLERANCE,
};
