//! Calibration constants and tolerances.

use serde::{Deserialize, Serialize};

/// Calibration constants of the construction. The averaging-count constant
/// and the threshold fraction are not explicit in the estimates they come
/// from; they are configuration inputs whose stability (not specific value)
/// is what the test suite checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Constants {
    /// Threshold fraction in (0,1) used for the value-jump cutoff
    /// `delta = eta * half_reach / 2`.
    pub eta: f64,
    /// Counting-bound constant entering the scale-ratio selection
    /// `lambda = 1 + exp(2 * c1 * ...)`.
    pub c1: f64,
    /// Safety factor multiplying the bad-cube threshold `half_reach / 2`.
    /// Discrete boundary maxima underestimate the true sup, so the factor
    /// biases borderline cubes toward bad.
    pub bad_safety: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            eta: 0.5,
            c1: 0.01,
            bad_safety: 0.9,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(crate::Error::InvalidInput(format!(
                "eta must be in (0,1), got {}",
                self.eta
            )));
        }
        if !(self.c1 > 0.0) {
            return Err(crate::Error::InvalidInput(format!(
                "c1 must be positive, got {}",
                self.c1
            )));
        }
        if !(self.bad_safety > 0.0 && self.bad_safety <= 1.0) {
            return Err(crate::Error::InvalidInput(format!(
                "bad_safety must be in (0,1], got {}",
                self.bad_safety
            )));
        }
        Ok(())
    }
}

/// Numerical tolerances used by the geometry backends.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum distance at which a point counts as lying on the manifold.
    pub on_manifold: f64,
    /// Convergence tolerance (ambient length) of sampled projections.
    pub projection: f64,
    /// Relative sup-norm change at which geodesic distance fields are
    /// considered refinement-converged.
    pub geodesic_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on_manifold: 1e-8,
            projection: 1e-10,
            geodesic_rel: 5e-3,
        }
    }
}
