//! Run configuration and export formats.

mod config;
mod export;

pub use config::{RunConfig, KEYS};
pub use export::{fmt_c64, fmt_f64, parse_f64, CsvTable, ExportRecord, Payload, SCHEMA_VERSION};
