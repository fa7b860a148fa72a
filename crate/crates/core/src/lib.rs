//! Outcome-assisted multiple imputation of missing treatments (OMIT).
//!
//! The crate covers the whole pipeline for estimating an average treatment
//! effect when some treatment indicators are missing at random:
//!
//! * [`data`]: observation tables, CSV ingestion and standardization.
//! * [`regression`]: probit propensity models, least-squares outcome models
//!   and the special functions they rely on.
//! * [`imputation`]: OMIT, Naive MI and Naive+Y MI imputation plans and the
//!   materialization of completed datasets.
//! * [`estimation`]: inverse probability weighting and Rubin's combining rules.
//! * [`theory`]: closed-form bias algebra and Monte Carlo checks of the
//!   unbiasedness results.
//! * [`analysis`]: the same pipeline applied once to a user table.
//! * [`simulation`]: the scenario grid used to compare the methods.

pub mod analysis;
pub mod data;
pub mod error;
pub mod estimation;
pub mod imputation;
pub mod regression;
pub mod rng;
pub mod simulation;
pub mod theory;

pub use analysis::{analyze, AnalysisMethod, AnalysisOptions, AnalysisReport};
pub use data::{
    complete_case_view, load_csv, standardize_columns, write_csv, ColumnSchema, ColumnSelector,
    CompleteCases, CompletedDataset, ObservationTable, PotentialOutcomeTable, Standardization,
};
pub use error::{OmitError, Result};
pub use estimation::{ipw_complete_case, ipw_estimate, pool, IpwEstimate, PooledEstimate};
pub use imputation::{
    compare_probabilities, materialize, plan_naive, plan_naive_plus_y, plan_omit,
    sharpened_probability, ImputationPlan, Strategy,
};
pub use regression::{
    build_interaction_design, fit_ols, fit_outcome_model, fit_probit, gaussian_density,
    FittedOutcomeModel, FittedPropensityModel, OutcomeBasis,
};
pub use simulation::{
    generate_standin, run_scenario, summarize_grid, GridConfig, Method, ScenarioConfig,
    ScenarioResult, Variant,
};
pub use theory::{
    bias_b, oracle_imputation_probs, run_suite, CheckReport, CheckSuite, ImputationProbQuad, OracleScenario,
    OracleStrategy, SuiteOptions,
};
