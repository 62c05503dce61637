use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vectors are linearly dependent at index {index}")]
    RankDeficient { index: usize },

    #[error("non-finite value encountered{0}")]
    NonFinite(String),

    #[error("expected a unit vector, found norm {norm}")]
    NotUnit { norm: f64 },

    #[error("vectors are not orthogonal (dot product {dot})")]
    NotOrthogonal { dot: f64 },

    #[error("cross-ratio is degenerate: two parameters coincide")]
    DegenerateCrossRatio,

    #[error(
        "no Clifford system with m = {m} on R^{l}: Radon-Hurwitz bound allows m <= {max_m}"
    )]
    RadonHurwitz { m: usize, l: usize, max_m: usize },

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point violates constraints (residual {residual:e})")]
    ConstraintViolation { residual: f64 },

    #[error("projection onto constraint set did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionFailed { iterations: usize, residual: f64 },

    #[error("shape operator asymmetry {value:e} exceeds {limit:e}")]
    Asymmetry { value: f64, limit: f64 },

    #[error("vector is not normal to the submanifold (tangential component {component:e})")]
    NotNormal { component: f64 },

    #[error("expected 4 distinct principal curvatures, found {g}")]
    CurvatureCount { g: usize },

    #[error("base point t = {t} is outside the fiber chart")]
    ChartDomain { t: f64 },

    #[error("surface passes within {distance:e} of the stereographic pole")]
    PoleProximity { distance: f64 },

    #[error("transformed Legendre line has no normalizable point-sphere/great-sphere pair; perturb the transform")]
    DegenerateLine,

    #[error("critical point search unreliable: {converged} of {starts} starts converged; use more starts")]
    UnreliableSearch { converged: usize, starts: usize },

    #[error("tangent rank {rank} below manifold dimension {dim}")]
    TangentRank { rank: usize, dim: usize },
}
