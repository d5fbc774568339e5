//! Command implementations behind the `pdgc` binary.

pub mod analyze;
pub mod config;
pub mod error;
pub mod lattice_cmd;

use std::path::Path;

use pdgc::synthetic::{scenario, ScenarioParams};

pub use analyze::{run_analysis, write_outputs, AnalysisReport};
pub use config::{ConfigFile, Settings};
pub use error::{CliError, CliResult};

/// Simulates a named scenario and writes it as CSV.
pub fn simulate_to_file(name: &str, params: ScenarioParams, seed: u64, out: &Path) -> CliResult<()> {
    let (series, _) = scenario(name, params, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    series.write_csv(out)?;
    Ok(())
}
