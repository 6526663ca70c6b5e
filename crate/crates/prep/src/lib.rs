//! File formats, run configuration and the end-to-end pipeline around
//! `prep-core`.

pub mod config;
pub mod io;
pub mod pipeline;

pub use config::{Alpha, RunConfig};

/// Process exit code for an error: 1 when the numerics failed, 2 for
/// everything else (bad input, IO).
pub fn exit_code(e: &anyhow::Error) -> i32 {
    let numerical = e
        .chain()
        .any(|c| c.downcast_ref::<prep_core::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        1
    } else {
        2
    }
}
