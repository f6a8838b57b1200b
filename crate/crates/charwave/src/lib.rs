//! Configuration, orchestration and file output for the `charwave` command.
//!
//! A run reads a strict JSON config ([`config::parse_config`]), executes one
//! experiment ([`run::run`]) and writes `fields/*.csv`, `map.csv`,
//! `history.json` and `report.json` under the output directory.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, Experiment, RunConfig};
pub use error::CliError;
pub use run::{run, Figure, RunReport};
