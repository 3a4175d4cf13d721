use num_complex::Complex64;
use thiserror::Error;

use crate::parse::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 16")]
    InvalidGrid(usize),

    #[error("grid sizes differ ({left} vs {right}); resample before combining")]
    GridMismatch { left: usize, right: usize },

    #[error("argument increment {increment:.3} at sample {index} is at least pi/2; refine the grid")]
    AliasedArgument { index: usize, increment: f64 },

    #[error("symbol comes within {min_modulus:e} of zero (sample {index})")]
    NearZeroSymbol { index: usize, min_modulus: f64 },

    #[error("Nyquist coefficient {nyquist:e} exceeds 1e-10; function is not resolved on this grid")]
    UnderResolved { nyquist: f64 },

    #[error("loop passes within tolerance of divisor points {}", join_points(points))]
    DivisorCollision { points: Vec<Complex64> },

    #[error("reparameterization derivative {derivative} <= 0 at sample {index}")]
    NotDiffeomorphism { index: usize, derivative: f64 },

    #[error("polynomial has a root {root} on the unit circle")]
    RootOnContour { root: Complex64 },

    #[error("expression is not a polynomial")]
    NotPolynomial,

    #[error("rational function must be nonzero")]
    ZeroFunction,

    #[error("LU pivot magnitude {pivot:e} below 1e-13 at step {step}")]
    SingularTruncation { step: usize, pivot: f64 },

    #[error("internal dimension {dim_n} too small: need at least {required} for outer truncation {trunc_m}")]
    PaddingTooSmall { dim_n: usize, trunc_m: usize, required: usize },

    #[error("Toeplitz dimension {dim_n} exceeds grid capacity {capacity}")]
    DimensionExceedsGrid { dim_n: usize, capacity: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn join_points(points: &[Complex64]) -> String {
    points.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(", ")
}
