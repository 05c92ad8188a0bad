//! Experiment orchestration: seeded randomness streams, claim suites,
//! Monte Carlo simulation, scaling fits and the wrap-up counting check.

pub mod claims;
pub mod seeds;
pub mod simulate;
pub mod wrapup;

pub use claims::{verify_claims, ClaimId, ClaimReport, ClaimSuiteConfig, Violation};
pub use seeds::{derive_seed, stream};
pub use simulate::{
    fit_power_law, scaling_study, simulate, write_scaling_csv, write_trials_csv, ExperimentConfig, PowerFit,
    ScalingReport, Simulation, SimulationSummary, TrialRecord,
};
pub use wrapup::{optimal_error, strategy_error, wrapup_sanity};
