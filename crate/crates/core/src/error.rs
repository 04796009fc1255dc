use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{samples} samples cannot resolve cutoff {cutoff} (need at least {required})")]
    InsufficientSamples { samples: usize, cutoff: usize, required: usize },

    #[error("product needs a grid of {required} nodes, above the dealiasing capacity {limit}")]
    CapacityExceeded { required: usize, limit: usize },

    #[error("point lies within {distance:e} of the unit circle; use the Cauchy projectors for boundary values")]
    OnContour { distance: f64 },

    #[error("loop (nearly) vanishes at node {node}: |f| = {modulus:e}")]
    Vanishing { node: usize, modulus: f64 },

    #[error("loop under-resolved: {0}")]
    UnderResolved(String),

    #[error("nonzero global index {winding}: the normalized factorization does not exist")]
    NonzeroIndex { winding: i64 },

    #[error("loop outside solvable neighborhood (condition {condition:e}, jump residual {residual:e})")]
    OutsideSolvableNeighborhood { condition: f64, residual: f64 },

    #[error("singular matrix{}", .0.map(|n| format!(" at node {n}")).unwrap_or_default())]
    Singular(Option<usize>),

    #[error("branch error: winding {winding} prevents a single-valued logarithm")]
    Branch { winding: i64 },

    #[error("index {index} outside the resolved range ±{bound}")]
    IndexOutOfRange { index: i64, bound: i64 },

    #[error("not a diffeomorphism: minimal lift derivative {min_derivative:e}")]
    NotMonotone { min_derivative: f64 },

    #[error("inversion of the lift failed at θ = {theta}")]
    InversionFailed { theta: f64 },

    #[error("poles {0} and {1} coincide")]
    CoincidentPoles(usize, usize),

    #[error("residues do not sum to zero: |ΣA| = {norm:e}")]
    UnbalancedResidues { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
