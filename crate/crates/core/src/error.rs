use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {point:?} lies outside the grid box (axis {axis}, coordinate {coordinate})")]
    OutOfDomain {
        point: Vec<f64>,
        axis: usize,
        coordinate: f64,
    },

    #[error("sphere of radius {radius} around {center:?} leaves the grid box")]
    DomainEscape { center: Vec<f64>, radius: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projected SOR did not converge after {iterations} sweeps (last max update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "monotone family violated at node {node}: u(t={t_low}) exceeds u(t={t_high}) by {excess:e}"
    )]
    MonotonicityViolation {
        node: usize,
        t_low: f64,
        t_high: f64,
        excess: f64,
    },

    #[error("positivity set reaches the outer boundary at t = {t}; use a larger domain")]
    PositivityTouchesBoundary { t: f64 },

    #[error("zero boundary norm")]
    ZeroBoundaryNorm,

    #[error("polynomial is not divisible by x_{variable}")]
    NotDivisible { variable: usize },

    #[error("not singular-quadratic (normalized misfit {misfit:.3e})")]
    NotSingularQuadratic { misfit: f64 },

    #[error("not in the stratum of frequency at least 3 (estimated frequency {frequency:.4})")]
    NotInSigmaAtLeast3 { frequency: f64 },

    #[error("point {0:?} is not within one cell of the discrete free boundary")]
    NotOnFreeBoundary(Vec<f64>),

    #[error(
        "inadmissible homogeneity {lambda}; admissible set is {{1,2,3,4,...}} ∪ {{3/2,7/2,11/2,...}}"
    )]
    InadmissibleHomogeneity { lambda: f64 },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
