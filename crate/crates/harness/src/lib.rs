//! Monte Carlo experiments and command-line tooling for `spike-spectra`.

pub mod config;
pub mod diagnostics;
pub mod emit;
pub mod error;
pub mod model;
pub mod presets;
pub mod runner;

pub use config::{CellConfig, ExperimentConfig, FactorDesign, Noise, Outputs, Scenario};
pub use diagnostics::{run_eigcheck, EigcheckSummary};
pub use emit::{emit, emit_all, Format};
pub use error::{HarnessError, Result};
pub use model::ModelSpec;
pub use runner::{run, run_with_workers, CellResult, ExperimentResult};
