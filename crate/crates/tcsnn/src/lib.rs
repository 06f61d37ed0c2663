//! File formats, experiment runner and command line support for the
//! `tcsnn-core` simulator.
//!
//! * [`events`]: line-oriented spike event files,
//! * [`netfile`]: JSON network descriptions and readout weight snapshots,
//! * [`config`]: the versioned TOML experiment config,
//! * [`experiment`]: ratio sweeps with JSON/CSV reports and raster export.

pub mod config;
mod error;
pub mod events;
pub mod experiment;
pub mod netfile;

pub use crate::config::{DatasetSource, Experiment, ExperimentConfig, ResourceRow};
pub use crate::error::{Error, Result};
pub use crate::events::{export_events, load_events, parse_events, write_events};
pub use crate::experiment::{emit_raster, run_experiment, write_reports, RunReport, SummaryRow};
pub use crate::netfile::{export_network, import_network, WeightSnapshot};
