//! Front end for the reset add-on workflow: project configuration, the
//! `analyze`, `design` and `simulate` commands, file output, and the local
//! HTTP service. The CLI binary and the service share [`commands`], so both
//! produce identical reports for identical inputs.

pub mod commands;
pub mod config;
pub mod output;
pub mod service;

pub use commands::{AngleUnit, CommandError, SCHEMA_VERSION};
pub use config::{ConfigError, FieldError, ProjectConfig};

/// Environment variable that caps worker threads.
pub const THREADS_ENV: &str = "RESETLOOP_THREADS";

/// Thread cap from [`THREADS_ENV`]; `None` when unset, empty, or not a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sizes the global rayon pool from [`THREADS_ENV`]. Later calls are no-ops.
pub fn init_threads() -> Option<usize> {
    let n = thread_cap()?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Some(n)
}
