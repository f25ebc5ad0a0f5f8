//! Command-line front end for `ssusy-core`: JSON run configs, check
//! registry, spectra, audits and convergence studies with versioned reports.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{resolve, RunConfig};
pub use error::CliError;
pub use report::{Report, Status};
pub use run::{execute, Command};
