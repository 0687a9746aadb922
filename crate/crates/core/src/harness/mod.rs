//! Experiment configuration, single runs and weak-scaling sweeps, and the
//! CSV/JSON result files.
mod config;
mod run;
mod table;

pub use config::{parse_counts, parse_spaces, ExperimentConfig, SpaceChoice};
pub use run::{build_problem, run_scaling, run_single, RunRecord, SpaceResult};
pub use table::{csv_rows, emit_csv, parse_csv, read_csv, rows_to_csv, CsvRow, CSV_HEADER};

/// Writes records as pretty JSON.
pub fn write_json(records: &[RunRecord], path: impl AsRef<std::path::Path>) -> crate::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(records)?)?;
    Ok(())
}
