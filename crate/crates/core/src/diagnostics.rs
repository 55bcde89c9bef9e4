//! Volume-growth fitting and the embedding-criterion checks.
//!
//! The sufficient criterion for a tubed Euclidean embedding of a complete
//! manifold combines 1-bounded geometry with uniformly polynomial volume
//! growth; exponential growth rules an embedding out. Growth is classified
//! from geodesic-ball volumes at several base points: stabilizing log-log
//! slopes give a polynomial degree, a stabilizing log-linear slope with
//! growing log-log slopes is the exponential signature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::geodesic::WarpedGrid;
use crate::geometry::{EmbeddedManifold, WarpProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Polynomial,
    Exponential,
    Inconclusive,
}

/// Growth fit over sampled geodesic-ball volumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthFit {
    pub radii: Vec<f64>,
    /// One volume row per base point.
    pub volumes: Vec<Vec<f64>>,
    pub fitted_degree: i64,
    /// Stabilized log-log tail slope before rounding.
    pub tail_slope: f64,
    pub fit_residual: f64,
    pub classification: GrowthClass,
    /// Monomial envelope coefficient: c R^degree dominates all samples at
    /// all base points.
    pub envelope_coefficient: f64,
}

impl GrowthFit {
    /// Re-check envelope dominance at every sample and base point.
    pub fn envelope_dominates(&self) -> bool {
        self.volumes.iter().all(|row| {
            row.iter().zip(self.radii.iter()).all(|(v, r)| {
                self.envelope_coefficient * r.powi(self.fitted_degree as i32) >= v * (1.0 - 1e-9)
            })
        })
    }
}

/// Closed-form model geometries plus declared metadata routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SyntheticModel {
    /// Euclidean plane: ball area pi R^2.
    Euclidean,
    /// Hyperbolic plane: ball area 4 pi sinh^2(R/2).
    Hyperbolic,
    /// Flat cylinder of the given radius: Euclidean below the wrap scale,
    /// linear growth beyond.
    FlatCylinder { radius: f64 },
    /// Universal covering of a compact manifold, with the fundamental-group
    /// growth class supplied as metadata.
    Covering { group_growth: GrowthClass },
}

/// Geodesic-ball area of a model geometry.
pub fn model_ball_volume(model: &SyntheticModel, radius: f64) -> Result<f64> {
    Ok(match model {
        SyntheticModel::Euclidean => std::f64::consts::PI * radius * radius,
        SyntheticModel::Hyperbolic => {
            4.0 * std::f64::consts::PI * (0.5 * radius).sinh().powi(2)
        }
        SyntheticModel::FlatCylinder { radius: r } => {
            let half_wrap = std::f64::consts::PI * r;
            if radius <= half_wrap {
                std::f64::consts::PI * radius * radius
            } else {
                2.0 * half_wrap * (radius * radius - half_wrap * half_wrap).sqrt()
                    + 2.0 * radius * radius * (half_wrap / radius).asin()
            }
        }
        SyntheticModel::Covering { .. } => {
            return Err(Error::InvalidInput(
                "covering growth is declared metadata, not a computable volume".into(),
            ))
        }
    })
}

/// Fit growth from per-base-point volume rows.
pub fn growth_fit_from_volumes(radii: &[f64], volumes: Vec<Vec<f64>>) -> Result<GrowthFit> {
    let tail = radii.len() / 2;
    if radii.len() < 5 || radii.len() - tail < 4 {
        return Err(Error::InsufficientRadii {
            need: 4,
            got: radii.len().saturating_sub(tail),
        });
    }
    for w in radii.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput("radii must be increasing".into()));
        }
    }
    for row in &volumes {
        if row.len() != radii.len() {
            return Err(Error::InvalidInput("volume row length mismatch".into()));
        }
        for w in row.windows(2) {
            if w[1] < w[0] * (1.0 - 1e-12) {
                return Err(Error::InvalidInput(
                    "volumes must be nondecreasing in the radius".into(),
                ));
            }
        }
    }

    // slopes from the base point with the largest volumes (the envelope is
    // uniform, so the worst row drives the classification)
    let row = worst_row(&volumes);
    let mut loglog = Vec::new();
    let mut loglin = Vec::new();
    for i in tail..radii.len() - 1 {
        let dv = (row[i + 1].max(1e-300) / row[i].max(1e-300)).ln();
        loglog.push(dv / (radii[i + 1] / radii[i]).ln());
        loglin.push(dv / (radii[i + 1] - radii[i]));
    }
    let spread = |v: &[f64]| {
        let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (mx - mn) / mean.abs().max(1e-9)
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let loglog_spread = spread(&loglog);
    let loglin_spread = spread(&loglin);
    let loglog_mean = mean(&loglog);
    let loglin_mean = mean(&loglin);
    let loglog_growing = loglog.last().unwrap() > &(loglog.first().unwrap() * 1.3);

    let (classification, tail_slope, residual) = if loglog_spread <= 0.2 {
        (GrowthClass::Polynomial, loglog_mean, loglog_spread)
    } else if loglin_spread <= 0.2 && loglin_mean > 0.05 && loglog_growing {
        (GrowthClass::Exponential, loglin_mean, loglin_spread)
    } else {
        (GrowthClass::Inconclusive, loglog_mean, loglog_spread)
    };

    let fitted_degree = tail_slope.round().max(0.0) as i64;
    let mut envelope: f64 = 0.0;
    if classification == GrowthClass::Polynomial {
        for row in &volumes {
            for (v, r) in row.iter().zip(radii.iter()) {
                envelope = envelope.max(v / r.powi(fitted_degree as i32));
            }
        }
    }
    Ok(GrowthFit {
        radii: radii.to_vec(),
        volumes,
        fitted_degree,
        tail_slope,
        fit_residual: residual,
        classification,
        envelope_coefficient: envelope,
    })
}

fn worst_row(volumes: &[Vec<f64>]) -> Vec<f64> {
    let len = volumes[0].len();
    (0..len)
        .map(|i| {
            volumes
                .iter()
                .map(|row| row[i])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Growth fit of a model geometry (homogeneous: 3 identical base points).
pub fn growth_fit_model(model: &SyntheticModel, radii: &[f64]) -> Result<GrowthFit> {
    let row: Result<Vec<f64>> = radii.iter().map(|&r| model_ball_volume(model, r)).collect();
    let row = row?;
    growth_fit_from_volumes(radii, vec![row; 3])
}

/// Growth fit of a warped cylinder by mesh summation of geodesic-ball
/// areas, at base points spread over one period of the warping.
pub fn growth_fit_warped(
    manifold: &EmbeddedManifold,
    radii: &[f64],
    base_points: usize,
) -> Result<GrowthFit> {
    let chart = manifold
        .warped_chart()
        .ok_or_else(|| Error::InvalidInput("growth summation needs a warped cylinder".into()))?;
    let window = manifold.window();
    let r_max = radii.iter().cloned().fold(0.0f64, f64::max);
    if r_max > 0.8 * window {
        return Err(Error::InvalidInput(format!(
            "largest radius {r_max} would leave the truncation window {window}"
        )));
    }
    let nt = 257;
    let ntheta = 96;
    let grid = WarpedGrid::build(manifold, nt, ntheta)?;
    let dt = grid.ts[1] - grid.ts[0];
    let dth = grid.thetas[1] - grid.thetas[0];
    let mut volumes = Vec::with_capacity(base_points);
    for b in 0..base_points {
        // spread base points over one period of the warping profile
        let t0 = (b as f64 + 0.5) / base_points as f64 * 2.0 * std::f64::consts::PI
            - std::f64::consts::PI;
        let i0 = (((t0 + window) / dt).round() as usize).min(nt - 1);
        let dist = grid.graph.dijkstra(i0 * ntheta);
        let row: Vec<f64> = radii
            .iter()
            .map(|&radius| {
                let mut area = 0.0;
                for i in 0..nt {
                    let f = chart.f(grid.ts[i]);
                    for j in 0..ntheta {
                        if dist[i * ntheta + j] <= radius {
                            area += f * dt * dth;
                        }
                    }
                }
                area
            })
            .collect();
        volumes.push(row);
    }
    growth_fit_from_volumes(radii, volumes)
}

/// Admissibility record of a warping function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarpedAdmissibility {
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    /// sup |f^(k)| on the window for k = 1, 2, 3.
    pub derivative_bounds: [f64; 3],
    /// Gauss curvature bound sup|f''| / inf f of the warped metric.
    pub curvature_sup: f64,
    /// sup |f'| < 1 is required for the surface-of-revolution embedding.
    pub embeddable_as_revolution: bool,
    pub verdict: bool,
    pub violated: Option<String>,
}

/// Check 0 < a <= f <= b with bounded derivatives up to order 3 on the
/// window, and report the closed-form curvature bound.
pub fn warped_admissible(profile: &WarpProfile, window: f64) -> WarpedAdmissibility {
    let samples = 8192;
    let inf_f = profile.inf(window, samples);
    let global = match profile {
        WarpProfile::Constant { value } => Some((*value, *value)),
        WarpProfile::SinOffset { base, amplitude, .. } => {
            (base - amplitude.abs() > 0.0).then_some((base - amplitude.abs(), base + amplitude.abs()))
        }
        WarpProfile::Exponential { .. } => None,
    };
    let derivative_bounds = [
        profile.sup_abs(1, window, samples),
        profile.sup_abs(2, window, samples),
        profile.sup_abs(3, window, samples),
    ];
    let curvature_sup = if inf_f > 0.0 {
        derivative_bounds[1] / inf_f
    } else {
        f64::INFINITY
    };
    let embeddable = derivative_bounds[0] < 1.0;
    let (verdict, violated) = if global.is_none() {
        (false, Some("upper bound b (f is unbounded)".into()))
    } else if !(inf_f > 0.0) {
        (false, Some("lower bound a (f is not positive)".into()))
    } else {
        (true, None)
    };
    WarpedAdmissibility {
        lower_bound: global.map(|g| g.0).unwrap_or(inf_f),
        upper_bound: global.map(|g| g.1),
        derivative_bounds,
        curvature_sup,
        embeddable_as_revolution: embeddable,
        verdict,
        violated,
    }
}

/// Evidence of 1-bounded geometry feeding the embedding verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryEvidence {
    /// Admissible warping: f bounded with derivatives up to order 3.
    Warped { admissibility: WarpedAdmissibility },
    /// Declared metadata for model spaces.
    Declared {
        injectivity_positive: bool,
        curvature_bound_order: u32,
    },
    /// Universal covering of a compact manifold (bounded geometry comes
    /// with compactness of the base).
    CompactCovering,
    None,
}

impl GeometryEvidence {
    fn one_bounded(&self) -> bool {
        match self {
            GeometryEvidence::Warped { admissibility } => admissibility.verdict,
            GeometryEvidence::Declared {
                injectivity_positive,
                curvature_bound_order,
            } => *injectivity_positive && *curvature_bound_order >= 1,
            GeometryEvidence::CompactCovering => true,
            GeometryEvidence::None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingVerdict {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub admits_tubed_embedding_by_criterion: EmbeddingVerdict,
    pub growth: GrowthClass,
    pub one_bounded_geometry: bool,
    pub conditions: Vec<(String, String)>,
}

/// The criterion is sufficient, not characterizing: polynomial growth plus
/// 1-bounded geometry gives yes; exponential growth violates a necessary
/// condition and gives no; anything else is unknown.
pub fn tubed_verdict(growth: GrowthClass, evidence: &GeometryEvidence) -> VerdictReport {
    let bounded = evidence.one_bounded();
    let verdict = match growth {
        GrowthClass::Exponential => EmbeddingVerdict::No,
        GrowthClass::Polynomial if bounded => EmbeddingVerdict::Yes,
        _ => EmbeddingVerdict::Unknown,
    };
    let conditions = vec![
        (
            "uniformly_polynomial_growth".to_string(),
            format!("{growth:?}"),
        ),
        ("one_bounded_geometry".to_string(), bounded.to_string()),
    ];
    VerdictReport {
        admits_tubed_embedding_by_criterion: verdict,
        growth,
        one_bounded_geometry: bounded,
        conditions,
    }
}

/// Geometric ladder of radii for growth sampling.
pub fn radius_ladder(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    let ratio = (r_max / r_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| r_min * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_plane_degree_two_exact_envelope() {
        let radii = radius_ladder(0.5, 40.0, 12);
        let fit = growth_fit_model(&SyntheticModel::Euclidean, &radii).unwrap();
        assert_eq!(fit.classification, GrowthClass::Polynomial);
        assert_eq!(fit.fitted_degree, 2);
        assert!((fit.envelope_coefficient - std::f64::consts::PI).abs() < 1e-12);
        assert!(fit.envelope_dominates());
    }

    #[test]
    fn flat_cylinder_linear_tail() {
        let radii = radius_ladder(0.5, 50.0, 12);
        let fit = growth_fit_model(&SyntheticModel::FlatCylinder { radius: 1.0 }, &radii).unwrap();
        assert_eq!(fit.classification, GrowthClass::Polynomial);
        assert_eq!(fit.fitted_degree, 1);
        assert!(fit.envelope_dominates());
    }

    #[test]
    fn hyperbolic_plane_exponential() {
        let radii = radius_ladder(1.0, 20.0, 10);
        let fit = growth_fit_model(&SyntheticModel::Hyperbolic, &radii).unwrap();
        assert_eq!(fit.classification, GrowthClass::Exponential);
    }

    #[test]
    fn too_few_radii() {
        let radii = radius_ladder(1.0, 4.0, 4);
        assert!(matches!(
            growth_fit_model(&SyntheticModel::Euclidean, &radii),
            Err(Error::InsufficientRadii { .. })
        ));
    }

    #[test]
    fn warped_admissibility_example() {
        let profile = WarpProfile::SinOffset {
            base: 2.0,
            amplitude: 0.25,
            frequency: 1.0,
        };
        let adm = warped_admissible(&profile, 6.0);
        assert!(adm.verdict);
        assert!((adm.lower_bound - 1.75).abs() < 1e-12);
        assert_eq!(adm.upper_bound, Some(2.25));
        for k in 0..3 {
            assert!(adm.derivative_bounds[k] <= 0.25 + 1e-9);
        }
        assert!(adm.curvature_sup <= 0.25 / 1.75 + 1e-9);
        assert!(adm.embeddable_as_revolution);
    }

    #[test]
    fn exponential_warp_not_admissible() {
        let adm = warped_admissible(&WarpProfile::Exponential { rate: 1.0 }, 4.0);
        assert!(!adm.verdict);
        assert!(adm.violated.as_deref().unwrap_or("").contains("upper bound b"));
    }

    #[test]
    fn verdict_logic() {
        let declared = GeometryEvidence::Declared {
            injectivity_positive: true,
            curvature_bound_order: 3,
        };
        let yes = tubed_verdict(GrowthClass::Polynomial, &declared);
        assert_eq!(
            yes.admits_tubed_embedding_by_criterion,
            EmbeddingVerdict::Yes
        );
        // hyperbolic space satisfies every other hypothesis yet fails the
        // necessary growth condition
        let no = tubed_verdict(GrowthClass::Exponential, &declared);
        assert_eq!(no.admits_tubed_embedding_by_criterion, EmbeddingVerdict::No);
        let unk = tubed_verdict(GrowthClass::Polynomial, &GeometryEvidence::None);
        assert_eq!(
            unk.admits_tubed_embedding_by_criterion,
            EmbeddingVerdict::Unknown
        );
    }

    #[test]
    fn degree_stable_under_range_doubling() {
        for model in [
            SyntheticModel::Euclidean,
            SyntheticModel::FlatCylinder { radius: 1.0 },
        ] {
            let fit1 = growth_fit_model(&model, &radius_ladder(0.5, 25.0, 10)).unwrap();
            let fit2 = growth_fit_model(&model, &radius_ladder(0.5, 50.0, 12)).unwrap();
            assert!(
                (fit1.fitted_degree - fit2.fitted_degree).abs() == 0,
                "{model:?}: {} vs {}",
                fit1.fitted_degree,
                fit2.fitted_degree
            );
        }
    }
}
