//! Scenario files, the built-in scenario library, the experiment runner,
//! and JSON/CSV reports.
//!
//! The file format and CSV columns are documented in `docs/scenario-format.md`.

mod builtins;
mod format;
mod report;
mod runner;

use thiserror::Error;

pub use builtins::{builtin, builtin_names, builtin_source};
pub use format::{load_scenario, parse_scenario, Expectations, Experiment, MdpSpec, Params, ScenarioFile, TupleSpec};
pub use report::{render_report, write_report, ExperimentReport, ReportFormat, RunRecord, Verdict, CSV_COLUMNS};
pub use runner::{run_experiment, run_experiment_with_seed};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("unknown built-in scenario {0:?}")]
    UnknownBuiltin(String),
}
