//! Desk-scale construction and validation of singular extensions of
//! critical fractional Sobolev maps into embedded targets with positive
//! reach, together with the growth diagnostics that license non-compact
//! targets.
//!
//! The pipeline mirrors the construction it validates:
//!
//! 1. [`geometry`] carries the embedded target: nearest-point projection,
//!    sampled Federer reach, geodesic distance, and the chordal-geodesic
//!    comparability constant.
//! 2. [`energy`] evaluates the critical Gagliardo seminorm, its truncation
//!    above a value jump, and the gap potential of a discretized boundary
//!    map.
//! 3. [`averaging`] builds the extension by averaging on a half-space slab.
//! 4. [`cubes`] enumerates the scale-adic cube families, classifies cubes as
//!    good or bad against the half-reach tube, and selects the scale ratio.
//! 5. [`extension`] assembles the singular extension (reprojection on good
//!    regions, homogeneous extension on bad cubes), its distribution
//!    function, weak norm, and the estimate-shape verification.
//! 6. [`conformal`] transports maps between half-space, Euclidean ball and
//!    Poincare ball, and computes hyperbolic measures.
//! 7. [`diagnostics`] fits volume growth and checks warped-product
//!    admissibility for the embedding criterion.

pub mod averaging;
pub mod config;
pub mod conformal;
pub mod cubes;
pub mod det;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod extension;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod surface;

pub use config::{Constants, Tolerances};
pub use error::{Error, Result};
pub use geometry::{
    ComparabilityConstant, EmbeddedManifold, ManifoldKind, ProjectionBackend, ReachEstimate,
    WarpProfile,
};
pub use surface::{Domain, SurfaceMap};
