//! Config-driven runs: JSON in, CSV tables and JSON sidecars out.

mod config;
mod run;

pub use config::*;
pub use run::*;
