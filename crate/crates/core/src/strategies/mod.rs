//! Strategies, schedulers and experiments built on the semantics.

pub mod analysis;
pub mod cfg;
mod engine;
pub mod experiment;
pub mod stats;

pub use analysis::{exhaustive_round_analysis, split_fixed_point, RoundAnalysis};
pub use cfg::CfgPlayer;
pub use engine::{
    continue_simulation, patience, run_simulation, AlwaysConsent, Context, Outcome, Passive, Payoff, PayoffReport, Scheduler,
    StopReason, Strategies, Strategy,
};
pub use experiment::{cfg_experiment, cfg_profile, monte_carlo, run_seeds, Experiment, ExperimentReport, RunSummary};

#[cfg(test)]
mod tests;
