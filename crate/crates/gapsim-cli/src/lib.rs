//! Library surface of the gapsim CLI: configuration resolution, experiment
//! drivers, and stable output formats, kept callable from integration tests.

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;

/// Process exit code for an error, documented in `--help`.
pub fn exit_code(err: &gapsim::Error) -> i32 {
    use gapsim::Error::*;
    match err {
        KernelSpec { .. } | Param(_) | AlphaOne | Intervals(_) => 2,
        Embedding { .. } => 4,
        InsufficientData { .. } | Range { .. } | HorizonExhausted { .. } | UndefinedRatio { .. }
        | NotSpd { .. } | NearSingular { .. } | NonFinite { .. } | Unsorted(_) => 5,
    }
}

/// Machine-readable error record printed to stderr on failure.
pub fn error_record(err: &gapsim::Error) -> serde_json::Value {
    serde_json::json!({
        "error": format!("{err:?}").split([' ', '{']).next().unwrap_or("Unknown"),
        "message": err.to_string(),
        "exit_code": exit_code(err),
    })
}
