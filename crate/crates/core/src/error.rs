use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interval [{lo}, {hi}] lies outside the dual domain")]
    OutsideDomain { lo: f64, hi: f64 },

    #[error("decomposition would leave a negative remainder: density infimum {infimum} on J is below m = {m}")]
    NonNegativityViolation { m: f64, infimum: f64 },

    #[error("gram matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, jitter tried up to {max_jitter:e})")]
    NotPsd { min_eigenvalue: f64, max_jitter: f64 },

    #[error("grid has {count} points, above the configured maximum of {max}")]
    GridTooLarge { count: usize, max: usize },

    #[error("lattice {k}Z + {offset} is not aligned with the sample grid")]
    LatticeMisaligned { k: u32, offset: f64 },

    #[error("no sampled path satisfied the event ({n_paths} paths); switch to a rare-event estimator")]
    ZeroSuccesses { n_paths: usize },

    #[error("every sequential-conditioning draw had zero weight ({n_draws} draws)")]
    ZeroWeight { n_draws: usize },

    #[error("insufficient points for a fit: {got} given, {need} needed")]
    InsufficientPoints { got: usize, need: usize },

    #[error("no grid translation gives a lattice average below q = {q} (grid mean {grid_mean})")]
    NoSplitFound { q: f64, grid_mean: f64 },

    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("N = {0} outside the supported range 1..=20")]
    OutOfRange(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
