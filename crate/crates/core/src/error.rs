use std::path::PathBuf;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{quantity} = {value} outside its domain: {expected}")]
    Domain {
        quantity: &'static str,
        value: f64,
        expected: String,
    },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("point ({x:.4}, {y:.4}) at path index {index} lies outside the field domain")]
    OutsideField { index: usize, x: f64, y: f64 },

    #[error("region does not fit in the grid; requires the domain to cover {required}")]
    RegionOutsideGrid { required: String },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("clock horizon exceeded: requested t = {requested}, path reaches F(T) = {available}; extend the path")]
    HorizonExceeded { requested: f64, available: f64 },

    #[error("censored fraction {fraction:.4} exceeds {limit}; increase the path horizon")]
    Censoring { fraction: f64, limit: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("not enough data for a fit: {0}")]
    InsufficientData(String),

    #[error("excursion margin violated on {violations} of {total} paths; enlarge the grid domain")]
    Excursion { violations: usize, total: usize },

    #[error("unknown campaign `{0}`; expected one of field-sample, measure-scaling, exit-moments, exit-tails, heat-kernel, ondiag, offdiag, feller-scan, gamma-zero-suite")]
    UnknownCampaign(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
