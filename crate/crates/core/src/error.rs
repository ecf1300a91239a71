use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {coord} = {value} lies outside the open interval ({lower}, {upper})")]
    OutsideSupport {
        coord: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("non-finite value for particle {particle}")]
    NonFinite { particle: usize },

    #[error("diverged at iteration {iteration}: particle {particle} is non-finite")]
    Diverged { iteration: usize, particle: usize },

    #[error("all particles coincide; the median bandwidth is zero")]
    DegenerateBandwidth,

    #[error("no particle is alive")]
    EmptyTracker,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("target `{0}` has no direct sampler")]
    NoOracle(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
