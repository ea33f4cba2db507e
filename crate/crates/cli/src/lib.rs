//! Experiment runner: TOML configs in, CSV tables and a JSON-lines report out.

pub mod config;
pub mod output;
pub mod pipelines;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const RUN_ERROR: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RESOURCE: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}
