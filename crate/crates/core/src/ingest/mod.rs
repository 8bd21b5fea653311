//! Series ingestion, synthetic fallback series, single-series monitoring and
//! the command-line interface.

pub mod cli;
pub mod generate;
pub mod monitor;
pub mod series;

pub use cli::cli_main;
pub use generate::{gen_bll_series, gen_ili_series};
pub use monitor::{load_trace, monitor_series, MonitorConfig, MonitorModel, MonitorTrace, TraceRow};
pub use series::{load_series_csv, Schema, SeriesRecord};
