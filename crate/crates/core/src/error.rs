use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("perturbation fraction {0} outside [0, 0.3]")]
    PerturbOutOfRange(f64),
    #[error("mesh needs at least one subdivision per side")]
    NoSubdivisions,
    #[error("triangle {triangle} references node {node}, but the mesh has {count} nodes")]
    NodeOutOfRange {
        triangle: usize,
        node: usize,
        count: usize,
    },
    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("polynomial degree {0} is not supported (0..=4)")]
    UnsupportedDegree(usize),
    #[error("no quadrature rule of degree {0} (maximum 8)")]
    UnsupportedQuadrature(usize),
    #[error("continuous spaces need degree >= 1")]
    ContinuousDegreeZero,
    #[error("unknown element pair `{0}`")]
    UnknownPair(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pair {0} does not satisfy both embedding conditions")]
    NotEmbedding(String),
    #[error("zero pivot at row {0} during factorization")]
    ZeroPivot(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("problem too large for a dense solve: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
}
