//! Monte Carlo studies: configuration, replication engine, summaries and
//! table output.

pub mod config;
pub mod error_control;
pub mod studies;
pub mod summary;
pub mod table;

pub use config::{DefectSource, StudyConfig, StudyDesign, DEFAULT_MASTER_SEED, DEFAULT_REPS};
pub use error_control::{run_error_control, ErrorControlConfig, ErrorControlResult};
pub use studies::{run_study, simulate_study, CellOutcome, RepOutcome, StudyRun};
pub use summary::{summarize, SummaryRow};
pub use table::{emit_table, load_table, parse_table, render_table, Metadata, TableFormat};
