//! Scenario files, trajectory runs, CSV output and the Fock-space cross-check
//! behind the `rsf` binary.

pub mod config;
pub mod csv;
pub mod error;
pub mod library;
pub mod oracle;
pub mod plan;
pub mod run;

pub use config::Scenario;
pub use error::CliError;
pub use oracle::{oracle_check, OracleReport};
pub use plan::Plan;
pub use run::{run_plan, Table};

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let s = Scenario::from_toml(text)?;
    Plan::new(&s)?;
    Ok(s)
}

pub fn run_scenario(s: &Scenario, dt: Option<f64>) -> Result<Table, CliError> {
    run_plan(&Plan::new(s)?, dt)
}
