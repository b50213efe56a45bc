//! Batch front-end for the summation protocol: scenario runs, exhaustive
//! sweeps, coupling-map transpilation and density-matrix metrics.

pub mod error;
pub mod scenario;
pub mod sweep;

use std::path::Path;

use serde::Serialize;

use qsum_core::density::DensityFile;
use qsum_core::metrics::{compare, MetricReport};
use qsum_core::transpile::{transpile, validate, Violation};
use qsum_core::{Circuit, CouplingMap, TranspileReport};

pub use error::{CliError, Result};
pub use scenario::{Overrides, RunDocument, Scenario};
pub use sweep::{SweepConfig, SweepTable};

use error::read;

/// Exit status for a run whose verification check failed.
pub const EXIT_ABORTED: i32 = 2;
pub const EXIT_INPUT: i32 = 1;

pub fn run_scenario(path: &Path, overrides: &Overrides) -> Result<RunDocument> {
    let mut scenario = Scenario::load(path)?;
    scenario.apply(overrides);
    scenario.run()
}

pub fn run_sweep(path: &Path, overrides: &Overrides) -> Result<SweepTable> {
    let mut config = SweepConfig::parse(&read(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if let Some(v) = overrides.shots {
        config.shots = v;
    }
    if let Some(v) = overrides.seed {
        config.seed = v;
    }
    if let Some(v) = overrides.oracle_mode {
        config.oracle_mode = v;
    }
    config.run()
}

#[derive(Debug, Clone, Serialize)]
pub struct TranspileDocument {
    /// Violations of the input circuit against the map.
    pub violations_before: Vec<Violation>,
    pub report: TranspileReport,
    pub circuit: String,
}

pub fn transpile_files(circuit_path: &Path, map_path: &Path) -> Result<TranspileDocument> {
    let parse_err = |path: &Path, e: qsum_core::Error| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let circuit =
        Circuit::parse_text(&read(circuit_path)?).map_err(|e| parse_err(circuit_path, e))?;
    let map = CouplingMap::from_json(&read(map_path)?).map_err(|e| parse_err(map_path, e))?;
    let violations_before = validate(&circuit, &map);
    let (out, report) = transpile(&circuit, &map)?;
    Ok(TranspileDocument {
        violations_before,
        report,
        circuit: out.to_text(),
    })
}

pub fn metrics_files(rho_t: &Path, rho_e: &Path) -> Result<MetricReport> {
    let load = |path: &Path| {
        DensityFile::parse(&read(path)?).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    };
    Ok(compare(&load(rho_t)?, &load(rho_e)?)?)
}
