//! Experiment configuration, presets, run persistence, SVG plots,
//! manufactured-solution studies and sweeps built on `dnls-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod post;
pub mod presets;
pub mod run;
pub mod studies;

pub use config::{parse_config, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use run::{execute, load_run, persist, run_experiment, RunOutcome, RunRecord};
