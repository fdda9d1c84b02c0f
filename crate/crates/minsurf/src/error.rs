use thiserror::Error;

/// Errors shared across the exact and numeric layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient dimension {0} out of supported range 3..=8")]
    DimensionOutOfRange(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("rotation axis degenerates for i = {0}")]
    DegenerateAxis(usize),
    #[error("permutation is not a bijection of 1..=n")]
    NotAPermutation,
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("zero normal vector")]
    ZeroNormal,
    #[error("polytope is empty or lower-dimensional than requested")]
    DegeneratePolytope,
    #[error("domain is not convex or not a hyperplane slab of codimension 1")]
    BadDomain,
    #[error("grid spacing {h} too large for domain (inradius ~ {inradius})")]
    SpacingTooLarge { h: f64, inradius: f64 },
    #[error("solver did not converge after {iters} iterations; residual history {history:?}")]
    NonConvergence { iters: usize, history: Vec<f64> },
    #[error("solver diverged (NaN or overflow)")]
    Diverged,
    #[error("integration step too large: first-integral drift {drift}")]
    StepTooLarge { drift: f64 },
    #[error("profile for n = 3 has infinite slab width; cannot normalize")]
    InfiniteSlab,
    #[error("point lies outside the projected catenoid domain")]
    OutsideCatenoid,
    #[error("waist condition violated: side {side} >= {bound}")]
    WaistCondition { side: f64, bound: f64 },
    #[error("exhaustion lost monotonicity at b = {b}: drop of {drop}")]
    MonotonicityViolation { b: f64, drop: f64 },
    #[error("barrier violated at b = {b}: excess {excess}")]
    BarrierViolation { b: f64, excess: f64 },
    #[error("construction for the P-surface requires n = 4 (blocked for n >= 5 by the rotation obstruction)")]
    UnsupportedPDimension(usize),
    #[error("patch gluing mismatch: {0}")]
    GluingMismatch(String),
    #[error("hyperplane does not intersect the mesh")]
    EmptyIntersection,
    #[error("mesh file malformed: {0}")]
    BadMeshFile(String),
    #[error("scherk sheet count k must be >= 2, got {0}")]
    BadSheetCount(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
