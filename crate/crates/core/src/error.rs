use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("divergent model: t = {t} must exceed r + 1 = {}", r + 1.0)]
    DivergentModel { r: f64, t: f64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("energy {energy} lies within {distance:e} of the pole at {pole}")]
    PoleProximity {
        energy: Complex64,
        pole: f64,
        distance: f64,
    },

    #[error("secular solver failed at Lambda = {lambda}: {reason}")]
    SolverFailure { lambda: Complex64, reason: String },

    #[error("c-normalization ill-conditioned at Lambda = {lambda} (state {state}, |psi^T psi|/|psi|^2 = {ratio:e})")]
    IllConditionedNormalization {
        lambda: Complex64,
        state: usize,
        ratio: f64,
    },

    #[error("oracle range exceeded: N = {n}, limit {limit}")]
    OracleRange { n: usize, limit: usize },

    #[error("incomplete exceptional point search: found {found} of {expected} classes")]
    IncompleteSearch {
        found: usize,
        expected: usize,
        points: Vec<Complex64>,
    },

    #[error("trajectory matching ambiguous on lambda interval [{lo}, {hi}]")]
    TrajectoryAmbiguity { lo: f64, hi: f64 },

    #[error("B undefined at Lambda = {lambda}: exceptional point")]
    BUndefinedAtEp { lambda: Complex64 },

    #[error("branch point at Lambda = {lambda}")]
    BranchPoint { lambda: Complex64 },

    #[error("contour error: {0}")]
    Contour(String),

    #[error("theta singular at Lambda = {lambda} (tan^2 theta = -1)")]
    ThetaSingular { lambda: Complex64 },

    #[error("loop resolution insufficient: min step overlap {min_overlap} with {samples} samples")]
    LoopResolution { min_overlap: f64, samples: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
