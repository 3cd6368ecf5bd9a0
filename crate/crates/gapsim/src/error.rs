use thiserror::Error;

/// Errors surfaced by the simulation and estimation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },

    #[error("invalid kernel spec `{spec}`: {reason}")]
    KernelSpec { spec: String, reason: String },

    #[error("alpha = 1 is not supported for polynomial-decay kernels")]
    AlphaOne,

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(
        "circulant embedding failed at padded size {padded_size}: \
         min eigenvalue {min_eig:.6e} below tolerance {tol:.6e}"
    )]
    Embedding {
        min_eig: f64,
        padded_size: usize,
        tol: f64,
    },

    #[error("covariance matrix not positive definite at pivot {index}")]
    NotSpd { index: usize },

    #[error(
        "conditional covariance near-singular between grid points {left:.9} and {right:.9}"
    )]
    NearSingular { left: f64, right: f64 },

    #[error(
        "horizon exhausted: zero at {last_zero:.6} has no recorded successor in window \
         [0, {window:.6}]; extend the simulated domain"
    )]
    HorizonExhausted { last_zero: f64, window: f64 },

    #[error("query {query:.6} outside valid range [{lo:.6}, {hi:.6}]")]
    Range { query: f64, lo: f64, hi: f64 },

    #[error("insufficient data: need {need}, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("undefined splitting ratio: zero marginal count for interval {interval}")]
    UndefinedRatio { interval: usize },

    #[error("sample not sorted at index {0}")]
    Unsorted(usize),

    #[error("invalid interval configuration: {0}")]
    Intervals(String),
}

pub type Result<T> = std::result::Result<T, Error>;
