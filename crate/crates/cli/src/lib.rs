//! Configuration, λ sweeps and report export for the `philap` command.

pub mod config;
pub mod export;
pub mod sweep;

pub use config::{BumpConfig, Config, ConfigError, DomainConfig, SolverConfig, SweepConfig};
pub use export::{export_all, read_json, read_profile, write_branch_csv, ExportError, CSV_HEADER};
pub use sweep::{
    run_sweep, solve_one, sweep_problem, EnergyBranch, LambdaBar, LambdaPoint, Problem, Profile,
    ProfileSource, RadialBranch, SweepOutcome, SweepReport, SCHEMA_VERSION,
};
