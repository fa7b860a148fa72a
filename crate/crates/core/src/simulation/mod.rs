//! The simulation study: populations, the scenario grid and summaries.

mod config;
pub mod population;
mod scenario;
pub mod standin;
mod summary;

pub use config::{check_exchangeable, GridAxes, GridConfig, Method, ScenarioConfig, Variant};
pub use population::{assign_and_mask, generate_population, Population, ReplicateData};
pub use scenario::{
    correct_basis, run_grid, run_scenario, Diagnostics, Exclusion, MethodResult, MethodSummary,
    ReplicateRecord, ScenarioResult, VALIDITY_CEILING,
};
pub use standin::{generate_standin, StandIn};
pub use summary::summarize_grid;
