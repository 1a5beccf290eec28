//! Configuration files and subcommands of the `rbf-lab` binary.

pub mod commands;
pub mod config;

pub use config::ExperimentConfig;

/// Process exit code for a library error.
pub fn exit_code(err: &rbf_lab::Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}
