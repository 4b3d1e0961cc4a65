//! File formats, output sinks and the command-line front end for
//! `lagoon-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod forcing_io;
pub mod mesh_io;
pub mod output;
pub mod report;

pub use config::{load_config, Config};
pub use error::{AppError, EXIT_FAULT, EXIT_GATE, EXIT_OK};
