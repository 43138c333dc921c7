use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("polytope is not Delzant at vertex {vertex:?}: {reason}")]
    NotDelzant { vertex: Vec<String>, reason: String },

    #[error("facet index {index} out of range (polytope has {count} facets)")]
    FacetIndex { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("projection has rank {rank} but {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("projection image lattice has index {index} (not lattice-surjective)")]
    NonPrimitiveImage { index: u64 },

    #[error("point is not interior: facet {facet} has value {value}")]
    NotInterior { facet: usize, value: f64 },

    #[error("point lies outside the polytope: facet {facet} has value {value}")]
    Exterior { facet: usize, value: f64 },

    #[error("empty slice: {0}")]
    EmptySlice(String),

    #[error("matrix is not positive definite{0}")]
    NotPositiveDefinite(String),

    #[error(
        "Newton inversion did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("non-finite integrand value at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("quadrature resolution {0} is below the minimum of 8")]
    Resolution(usize),

    #[error("theta grid of size {size} aliases weight difference {diff}")]
    Aliasing { size: usize, diff: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse weight expression: {0}")]
    Expression(String),
}
