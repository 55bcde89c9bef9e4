//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors raised by the geometric and analytic operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies at or beyond the declared reach, so the nearest-point
    /// projection is not guaranteed to be single-valued there.
    #[error("point at distance {dist:.6e} is outside the projection tube (reach {reach:.6e})")]
    OutsideTube { dist: f64, reach: f64 },

    /// A sampled-backend refinement failed to stabilize.
    #[error("projection refinement did not converge: {0}")]
    NoConvergence(String),

    /// A tangent frame is rank-deficient at a sample.
    #[error("degenerate tangent frame at sample {0}")]
    DegenerateTangent(usize),

    /// An input point fails the on-manifold check.
    #[error("point is not on the manifold (distance {dist:.6e}, tolerance {tol:.6e})")]
    NotOnManifold { dist: f64, tol: f64 },

    /// The manifold misses the ball used for the comparability constant.
    #[error("manifold does not intersect the closed ball of radius {0}")]
    EmptyIntersection(f64),

    /// A plane-domain map lacks the constant-tail marker.
    #[error("plane-domain map has no constant tail: {0}")]
    TailNotConstant(String),

    /// A mollifier profile violates one of its normalization bounds.
    #[error("mollifier bound violated: {0}")]
    BoundViolation(String),

    /// The averaging slab was requested with a zero or negative floor height.
    #[error("slab floor must be strictly positive (got {0})")]
    SlabTooShallow(f64),

    /// No cube generation fits inside the slab.
    #[error("no cube generation fits the slab: {0}")]
    EmptyRange(String),

    /// A cube boundary leaves the region covered by the averaged field.
    #[error("cube boundary leaves the averaged-field slab: {0}")]
    CoverageGap(String),

    /// Bounded mode requires a declared sup bound on the map.
    #[error("bounded mode requires a declared L-bound on the map")]
    MissingBound,

    /// An interior node of a good cube left the projection tube.
    #[error("interior node of a good cube left the tube (cube {0})")]
    TubeEscape(String),

    /// A bad-cube boundary point has no resolvable on-manifold trace value.
    #[error("bad-cube boundary trace is not on the manifold: {0}")]
    BoundaryNotOnManifold(String),

    /// The energy module flagged the map as divergent.
    #[error("map has non-finite energy at this resolution")]
    NonFiniteEnergy,

    /// A map is non-constant at the inversion pole, so it cannot be
    /// transported to a plane map with a constant tail.
    #[error("map is non-constant at the inversion pole (oscillation {osc:.4e} > {tol:.4e})")]
    PoleOnSupport { osc: f64, tol: f64 },

    /// A hyperbolic region touches the boundary sphere, where the volume
    /// density is non-integrable.
    #[error("region closure meets the unit sphere (outer radius {0})")]
    BoundaryTouch(f64),

    /// Too few tail samples to classify volume growth.
    #[error("need at least {need} tail radii, got {got}")]
    InsufficientRadii { need: usize, got: usize },

    /// No positive constants satisfy the calibration family.
    #[error("estimate fit infeasible: {0}")]
    FitInfeasible(String),

    /// Malformed input file or inconsistent specification.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
