use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue {index} did not converge after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("eigenpair {index} residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge {
        index: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("matrix is not positive definite: pivot {pivot} is {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("Lanczos breakdown persisted after {restarts} restarts ({converged} of {requested} pairs converged)")]
    LanczosBreakdown {
        restarts: usize,
        converged: usize,
        requested: usize,
    },

    #[error("only {converged} eigenpairs converged, {requested} requested")]
    Unconverged { converged: usize, requested: usize },

    #[error("potential {value:.6e} at grid point {point} ({coords:?}) violates the bounds [{lower:.6e}, {upper:.6e}]")]
    PotentialBounds {
        point: usize,
        coords: Vec<f64>,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("threshold {requested} exceeds the harvested spectrum limit {limit}")]
    BeyondHarvest { requested: f64, limit: f64 },

    #[error("weight overflow: mu*L = {product:.1} > 700, accumulate in log domain instead")]
    WeightOverflow { product: f64 },

    #[error("box half-width {half_width} is smaller than R + 2 = {required}")]
    BoxTooSmall { half_width: f64, required: f64 },

    #[error("empty subspace")]
    EmptySubspace,

    #[error("no decay to fit: {0}")]
    NoDecay(String),

    #[error("observation Gramian is numerically singular (smallest eigenvalue {smallest:.3e})")]
    SingularGramian { smallest: f64 },

    #[error("s = {s} >= 1, bound inapplicable (requires alpha < tau1 - 2 tau2 / 3)")]
    BoundInapplicable { s: f64 },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
