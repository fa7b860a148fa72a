//! Fixtures shared by the benchmarks.

use omit_core::simulation::{assign_and_mask, generate_population, ReplicateData};
use omit_core::ScenarioConfig;

/// One replicate of the simulation design at `beta_y = 4`, 30% missing.
pub fn replicate(n: usize, seed: u64) -> ReplicateData {
    let config = ScenarioConfig {
        n,
        beta_y: 4.0,
        miss_level: 0.3,
        seed,
        ..ScenarioConfig::default()
    };
    let pop = generate_population(&config).expect("valid fixture config");
    assign_and_mask(&pop, &config, 0).expect("fixture replicate")
}
