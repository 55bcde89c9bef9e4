//! Critical Gagliardo energy, truncated energy, and gap potential.
//!
//! For a map u on an m-dimensional domain the kernel is
//!     d(u(x), u(y))^{m+1} / |x - y|^{2m},
//! the critical pairing for which the double integral is conformally
//! balanced. The gap potential drops the numerator and keeps only pairs
//! whose values differ by at least delta.
//!
//! Near-diagonal handling: pairs closer than the local mesh scale are
//! excluded from the raw sum and restored by Richardson extrapolation
//! across two exclusion bands. For smooth maps the excluded band scales
//! linearly in the band width for both m = 1 and m = 2, so the linear
//! extrapolation `2 raw[b] - raw[2b]` converges; a band increment that
//! refuses to shrink is the divergence signature (the kernel of a genuine
//! jump integrates like log).

use serde::{Deserialize, Serialize};

use crate::det::det_sum_vec;
use crate::error::{Error, Result};
use crate::geometry::EmbeddedManifold;
use crate::quadrature::{gauss_legendre, integrate};
use crate::surface::{Mesh, SurfaceMap, ValueMetric};

/// Ratio of consecutive band increments above which the pair sum is flagged
/// as divergent (smooth maps give about 0.5, a jump gives about 1 or more).
const DIVERGENCE_RATIO: f64 = 0.75;

/// A computed energy value with its refinement-based error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub error_estimate: f64,
    pub divergent: bool,
}

/// Full per-map energy report at one truncation threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub m: usize,
    pub gagliardo: f64,
    pub truncated: f64,
    pub gap_potential: f64,
    pub delta: f64,
    pub quadrature_error_estimate: f64,
    pub divergent: bool,
}

/// All pair quantities from one scan: raw sums at exclusion bands x1, x2,
/// x4, and per-delta truncated/gap sums on the band-1 pair set.
#[derive(Debug, Clone)]
pub struct PairQuantities {
    pub raw: [f64; 3],
    pub truncated: Vec<f64>,
    pub gap: Vec<f64>,
    pub deltas: Vec<f64>,
    pub divergent: bool,
    pub error_estimate: f64,
}

impl PairQuantities {
    /// Richardson-extrapolated Gagliardo value.
    pub fn gagliardo(&self) -> f64 {
        2.0 * self.raw[0] - self.raw[1]
    }
}

/// One scan over all node pairs (plus analytic tail terms for plane
/// domains), shared by every energy quantity so the inequality chains hold
/// pair-by-pair at the quadrature level.
pub fn pair_quantities(
    map: &SurfaceMap,
    manifold: Option<&EmbeddedManifold>,
    deltas: &[f64],
) -> Result<PairQuantities> {
    for &d in deltas {
        if !(d > 0.0) {
            return Err(Error::InvalidInput(format!(
                "truncation threshold must be positive, got {d}"
            )));
        }
    }
    if map.domain.is_plane() && map.tail.is_none() {
        return Err(Error::TailNotConstant(
            "pair quadrature on a plane domain needs the constant tail".into(),
        ));
    }
    let metric = ValueMetric::build(map, manifold)?;
    let m = map.m();
    let p = (m + 1) as i32;
    let layout = map.mesh.layout();
    let n = map.len();
    let pd = map.mesh.pos_dim();
    let nd = deltas.len();
    let width = 3 + 2 * nd;

    let acc = det_sum_vec(n, width, |i, acc| {
        let xi = &layout.pos[i * pd..(i + 1) * pd];
        let wi = layout.weights[i];
        let si = layout.scale[i];
        for j in (i + 1)..n {
            let xj = &layout.pos[j * pd..(j + 1) * pd];
            let mut r2 = 0.0;
            for k in 0..pd {
                let d = xi[k] - xj[k];
                r2 += d * d;
            }
            let r = r2.sqrt();
            let band = si + layout.scale[j];
            if r < band {
                continue;
            }
            let d = metric.d(map, i, j);
            let kw = 2.0 * wi * layout.weights[j] / r2.powi(m as i32);
            let kernel = d.powi(p) * kw;
            acc[0] += kernel;
            if r >= 2.0 * band {
                acc[1] += kernel;
                if r >= 4.0 * band {
                    acc[2] += kernel;
                }
            }
            for (t, &delta) in deltas.iter().enumerate() {
                if d >= delta {
                    acc[3 + 2 * t] += kernel;
                    acc[3 + 2 * t + 1] += kw;
                }
            }
        }
        // analytic tail terms for plane domains
        if map.domain.is_plane() {
            tail_terms(map, &metric, &layout, i, m, deltas, acc);
        }
    });

    let raw = [acc[0], acc[1], acc[2]];
    let truncated: Vec<f64> = (0..nd).map(|t| acc[3 + 2 * t]).collect();
    let gap: Vec<f64> = (0..nd).map(|t| acc[3 + 2 * t + 1]).collect();
    let near = raw[0] - raw[1];
    let far = raw[1] - raw[2];
    let scale = 1e-9 * (1.0 + raw[0].abs());
    let divergent = near > scale && near >= DIVERGENCE_RATIO * far && far > 0.0;
    let error_estimate = near.abs().max((near - 0.5 * far).abs());
    Ok(PairQuantities {
        raw,
        truncated,
        gap,
        deltas: deltas.to_vec(),
        divergent,
        error_estimate,
    })
}

/// Closed-form contribution of (inside node, constant tail) pairs. The
/// (outside x outside) block vanishes because the integrand is zero there.
fn tail_terms(
    map: &SurfaceMap,
    metric: &ValueMetric,
    layout: &crate::surface::MeshLayout,
    i: usize,
    m: usize,
    deltas: &[f64],
    acc: &mut [f64],
) {
    let d = metric.d_tail(map, i);
    let wi = layout.weights[i];
    let si = layout.scale[i];
    let p = (m + 1) as i32;
    match (&map.mesh, m) {
        (Mesh::Line { window, .. }, 1) => {
            let x = layout.pos[i];
            for (edge, sign) in [(window.1, 1.0f64), (window.0, -1.0)] {
                let gap_dist = (sign * (edge - x)).max(0.0);
                for (b, mult) in [(0usize, 1.0f64), (1, 2.0), (2, 4.0)] {
                    let lo = gap_dist.max(mult * si);
                    let integral = wi / lo;
                    let kernel = d.powi(p) * integral;
                    acc[b] += kernel;
                    if b == 0 {
                        for (t, &delta) in deltas.iter().enumerate() {
                            if d >= delta {
                                acc[3 + 2 * t] += kernel;
                                acc[3 + 2 * t + 1] += integral;
                            }
                        }
                    }
                }
            }
        }
        (Mesh::Grid { window, .. }, 2) => {
            let x = [layout.pos[2 * i], layout.pos[2 * i + 1]];
            for (b, mult) in [(0usize, 1.0f64), (1, 2.0), (2, 4.0)] {
                let integral = wi * rect_complement_integral(&x, window, mult * si);
                let kernel = d.powi(p) * integral;
                acc[b] += kernel;
                if b == 0 {
                    for (t, &delta) in deltas.iter().enumerate() {
                        if d >= delta {
                            acc[3 + 2 * t] += kernel;
                            acc[3 + 2 * t + 1] += integral;
                        }
                    }
                }
            }
        }
        _ => {}
    }
}

/// Integral of |x - y|^{-4} over the complement of the window rectangle
/// (distance at least `cut` from x), by inclusion-exclusion over half-planes
/// and corner quadrants.
fn rect_complement_integral(x: &[f64; 2], window: &(f64, f64, f64, f64), cut: f64) -> f64 {
    let a_r = (window.1 - x[0]).max(cut);
    let a_l = (x[0] - window.0).max(cut);
    let b_t = (window.3 - x[1]).max(cut);
    let b_b = (x[1] - window.2).max(cut);
    let half = |a: f64| std::f64::consts::PI / (4.0 * a * a);
    let mut total = half(a_r) + half(a_l) + half(b_t) + half(b_b);
    for (a, b) in [(a_r, b_t), (a_r, b_b), (a_l, b_t), (a_l, b_b)] {
        total -= corner_quadrant_integral(a, b);
    }
    total.max(0.0)
}

/// Integral of (s^2 + t^2)^{-2} over the quadrant s >= a, t >= b.
/// Inner integral closed-form, outer by Gauss-Legendre after mapping
/// [a, inf) to (0, 1].
fn corner_quadrant_integral(a: f64, b: f64) -> f64 {
    let inner = |s: f64| {
        std::f64::consts::FRAC_PI_4 / (s * s * s)
            - b / (2.0 * s * s * (s * s + b * b))
            - (b / s).atan() / (2.0 * s * s * s)
    };
    let rule = gauss_legendre(32);
    integrate(&rule, 0.0, 1.0, |u| {
        let u = u.max(1e-300);
        let s = a / u;
        inner(s) * a / (u * u)
    })
}

pub fn gagliardo_energy(
    map: &SurfaceMap,
    manifold: Option<&EmbeddedManifold>,
) -> Result<EnergyValue> {
    let q = pair_quantities(map, manifold, &[])?;
    Ok(EnergyValue {
        value: q.gagliardo(),
        error_estimate: q.error_estimate,
        divergent: q.divergent,
    })
}

pub fn truncated_energy(
    map: &SurfaceMap,
    manifold: Option<&EmbeddedManifold>,
    delta: f64,
) -> Result<f64> {
    let q = pair_quantities(map, manifold, &[delta])?;
    Ok(q.truncated[0])
}

pub fn gap_potential(
    map: &SurfaceMap,
    manifold: Option<&EmbeddedManifold>,
    delta: f64,
) -> Result<f64> {
    let q = pair_quantities(map, manifold, &[delta])?;
    Ok(q.gap[0])
}

pub fn energy_report(
    map: &SurfaceMap,
    manifold: Option<&EmbeddedManifold>,
    delta: f64,
) -> Result<EnergyReport> {
    let q = pair_quantities(map, manifold, &[delta])?;
    Ok(EnergyReport {
        m: map.m(),
        gagliardo: q.gagliardo(),
        truncated: q.truncated[0],
        gap_potential: q.gap[0],
        delta,
        quadrature_error_estimate: q.error_estimate,
        divergent: q.divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::surface::Domain;

    #[test]
    fn constant_map_zero_energy() {
        let m = fixtures::unit_circle();
        let u = fixtures::constant_circle_map(256, 0.3);
        let e = gagliardo_energy(&u, Some(&m)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(!e.divergent);
    }

    #[test]
    fn truncation_below_gagliardo() {
        let m = fixtures::unit_circle();
        let u = fixtures::identity_circle_map(512);
        let q = pair_quantities(&u, Some(&m), &[0.3, 1.0, 2.5]).unwrap();
        let e = q.gagliardo();
        for (t, g) in q.truncated.iter().zip(q.gap.iter()) {
            assert!(*t <= e);
            assert!(*g >= 0.0);
        }
        // monotone in delta
        assert!(q.truncated[0] >= q.truncated[1]);
        assert!(q.truncated[1] >= q.truncated[2]);
        assert!(q.gap[0] >= q.gap[1]);
    }

    #[test]
    fn truncation_above_diameter_empty() {
        let m = fixtures::unit_circle();
        let u = fixtures::identity_circle_map(256);
        // diameter of the unit circle is pi < 4
        let q = pair_quantities(&u, Some(&m), &[4.0]).unwrap();
        assert_eq!(q.truncated[0], 0.0);
        assert_eq!(q.gap[0], 0.0);
    }

    #[test]
    fn hard_step_flagged_divergent() {
        let m = fixtures::unit_circle();
        let u = fixtures::step_circle_map(1024);
        let e = gagliardo_energy(&u, Some(&m)).unwrap();
        assert!(e.divergent);
    }

    #[test]
    fn smooth_map_not_flagged() {
        let m = fixtures::unit_circle();
        let u = fixtures::identity_circle_map(1024);
        let e = gagliardo_energy(&u, Some(&m)).unwrap();
        assert!(!e.divergent);
    }

    #[test]
    fn plane_requires_tail_marker() {
        // raw construction bypassing SurfaceMap::new is not possible from
        // outside; an S1 map relabelled as a plane map must be rejected
        let mesh = crate::surface::uniform_line_mesh(32, 0.0, 1.0);
        let map = SurfaceMap {
            domain: Domain::PlaneR1Tail,
            mesh,
            values: vec![1.0; 64],
            value_dim: 2,
            l_bound: None,
            tail: None,
        };
        assert!(matches!(
            pair_quantities(&map, None, &[]),
            Err(Error::TailNotConstant(_))
        ));
    }

    #[test]
    fn delta_must_be_positive() {
        let m = fixtures::unit_circle();
        let u = fixtures::constant_circle_map(64, 0.0);
        assert!(pair_quantities(&u, Some(&m), &[0.0]).is_err());
    }
}
