//! Batch driver for the scanpath engine: `preprocess`, `run`, `report` and
//! `validate`, exposed as functions so they can be exercised in tests.

pub mod config;
pub mod preprocess;
pub mod report;
pub mod run;
pub mod util;
pub mod validate;

pub use config::{LoadedConfig, ModelKind, RunConfig};
pub use preprocess::cmd_preprocess;
pub use report::{cmd_report, ReportOptions};
pub use run::cmd_run;
pub use validate::cmd_validate;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FATAL: i32 = 1;
    pub const PARTIAL: i32 = 2;
}
