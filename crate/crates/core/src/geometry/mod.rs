//! Isometrically embedded targets with positive reach.
//!
//! Every target is carried around as an explicit Euclidean embedding with a
//! nearest-point projection that is single-valued on the open tube of radius
//! `reach`. Analytic kinds (circle, sphere, flat torus, cylinder, flat patch)
//! have closed-form projection, reach and geodesic distance; warped
//! cylinders and point clouds fall back to sampled backends.

pub mod geodesic;
pub mod reach;
pub mod warped;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
pub use reach::ReachEstimate;
pub use warped::{WarpProfile, WarpedChart};

/// Point-cloud backend data: flat point array plus per-point orthonormal
/// tangent frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudData {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    /// Flat, stride = ambient_dim.
    pub points: Vec<f64>,
    /// Flat, stride = ambient_dim * intrinsic_dim (frame vectors contiguous).
    pub frames: Vec<f64>,
}

impl CloudData {
    pub fn len(&self) -> usize {
        if self.ambient_dim == 0 {
            0
        } else {
            self.points.len() / self.ambient_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn frame_vec(&self, i: usize, k: usize) -> &[f64] {
        let base = (i * self.intrinsic_dim + k) * self.ambient_dim;
        &self.frames[base..base + self.ambient_dim]
    }
}

/// The supported embedding kinds with their canonical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Circle of the given radius in R^2, centred at the origin.
    Circle { radius: f64 },
    /// Round sphere of the given radius in R^3.
    Sphere { radius: f64 },
    /// Flat torus S^1(r1) x S^1(r2) in R^4.
    CliffordTorus { r1: f64, r2: f64 },
    /// Right circular cylinder of the given radius around the x3-axis in R^3.
    Cylinder { radius: f64 },
    /// Surface of revolution realizing the warped metric dt^2 + f^2 dtheta^2.
    WarpedCylinder { profile: WarpProfile },
    /// Flat convex square [-halfwidth, halfwidth]^2 in R^2; infinite reach.
    FlatPatch { halfwidth: f64 },
    /// Sampled manifold: points with tangent frames.
    PointCloud { data: CloudData },
}

/// Which projection backend a manifold uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionBackend {
    Analytic,
    Sampled,
}

/// An isometric Euclidean embedding with positive reach.
#[derive(Debug)]
pub struct EmbeddedManifold {
    kind: ManifoldKind,
    ambient_dim: usize,
    intrinsic_dim: usize,
    backend: ProjectionBackend,
    is_compact: bool,
    /// Geodesic diameter; infinite for non-compact kinds.
    diameter: f64,
    /// Truncation half-width of the working window for non-compact kinds.
    window: f64,
    tol: Tolerances,
    chart: Option<WarpedChart>,
    sampled_reach: OnceLock<f64>,
}

pub const MAX_AMBIENT_DIM: usize = 4;

impl EmbeddedManifold {
    pub fn new(kind: ManifoldKind, window: Option<f64>, tol: Tolerances) -> Result<Self> {
        let window = window.unwrap_or(8.0);
        let (ambient, intrinsic, backend, compact, diameter, chart) = match &kind {
            ManifoldKind::Circle { radius } => {
                check_positive(*radius, "radius")?;
                (2, 1, ProjectionBackend::Analytic, true, std::f64::consts::PI * radius, None)
            }
            ManifoldKind::Sphere { radius } => {
                check_positive(*radius, "radius")?;
                (3, 2, ProjectionBackend::Analytic, true, std::f64::consts::PI * radius, None)
            }
            ManifoldKind::CliffordTorus { r1, r2 } => {
                check_positive(*r1, "r1")?;
                check_positive(*r2, "r2")?;
                let d = (std::f64::consts::PI * r1).hypot(std::f64::consts::PI * r2);
                (4, 2, ProjectionBackend::Analytic, true, d, None)
            }
            ManifoldKind::Cylinder { radius } => {
                check_positive(*radius, "radius")?;
                (3, 2, ProjectionBackend::Analytic, false, f64::INFINITY, None)
            }
            ManifoldKind::WarpedCylinder { profile } => {
                let chart = WarpedChart::new(profile.clone(), window)?;
                (3, 2, ProjectionBackend::Sampled, false, f64::INFINITY, Some(chart))
            }
            ManifoldKind::FlatPatch { halfwidth } => {
                check_positive(*halfwidth, "halfwidth")?;
                (
                    2,
                    2,
                    ProjectionBackend::Analytic,
                    true,
                    2.0 * std::f64::consts::SQRT_2 * halfwidth,
                    None,
                )
            }
            ManifoldKind::PointCloud { data } => {
                if data.is_empty() {
                    return Err(Error::InvalidInput("empty point cloud".into()));
                }
                if data.ambient_dim > MAX_AMBIENT_DIM {
                    return Err(Error::InvalidInput(format!(
                        "ambient dimension {} exceeds supported maximum {}",
                        data.ambient_dim, MAX_AMBIENT_DIM
                    )));
                }
                (
                    data.ambient_dim,
                    data.intrinsic_dim,
                    ProjectionBackend::Sampled,
                    true,
                    f64::INFINITY,
                    None,
                )
            }
        };
        Ok(EmbeddedManifold {
            kind,
            ambient_dim: ambient,
            intrinsic_dim: intrinsic,
            backend,
            is_compact: compact,
            diameter,
            window,
            tol,
            chart,
            sampled_reach: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn backend(&self) -> ProjectionBackend {
        self.backend
    }

    pub fn is_compact(&self) -> bool {
        self.is_compact
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// The reach of the embedding: closed form where available, otherwise
    /// the cached sampled Federer infimum.
    pub fn reach(&self) -> f64 {
        match &self.kind {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere { radius } => *radius,
            ManifoldKind::Cylinder { radius } => *radius,
            ManifoldKind::CliffordTorus { r1, r2 } => r1.min(*r2),
            ManifoldKind::FlatPatch { .. } => f64::INFINITY,
            ManifoldKind::WarpedCylinder { .. } | ManifoldKind::PointCloud { .. } => *self
                .sampled_reach
                .get_or_init(|| match self.federer_reach(20_000) {
                    Ok(est) => est.value,
                    Err(_) => 0.0,
                }),
        }
    }

    /// Closed-form reach for analytic kinds, used to cross-check sampling.
    pub fn analytic_reach(&self) -> Option<f64> {
        match &self.kind {
            ManifoldKind::Circle { radius }
            | ManifoldKind::Sphere { radius }
            | ManifoldKind::Cylinder { radius } => Some(*radius),
            ManifoldKind::CliffordTorus { r1, r2 } => Some(r1.min(*r2)),
            ManifoldKind::FlatPatch { .. } => Some(f64::INFINITY),
            _ => None,
        }
    }

    /// Half the reach; the construction reprojects only inside this margin,
    /// where the projection is smooth up to the boundary.
    pub fn half_reach(&self) -> f64 {
        0.5 * self.reach()
    }

    /// Distance from an ambient point to the manifold. Total: outside the
    /// tube it still returns the true distance for analytic kinds and the
    /// best sampled distance otherwise.
    pub fn dist_to(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.ambient_dim);
        match &self.kind {
            ManifoldKind::Circle { radius } => (z[0].hypot(z[1]) - radius).abs(),
            ManifoldKind::Sphere { radius } => {
                ((z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt() - radius).abs()
            }
            ManifoldKind::Cylinder { radius } => (z[0].hypot(z[1]) - radius).abs(),
            ManifoldKind::CliffordTorus { r1, r2 } => {
                let da = z[0].hypot(z[1]) - r1;
                let db = z[2].hypot(z[3]) - r2;
                da.hypot(db)
            }
            ManifoldKind::FlatPatch { halfwidth } => {
                let dx = (z[0].abs() - halfwidth).max(0.0);
                let dy = (z[1].abs() - halfwidth).max(0.0);
                dx.hypot(dy)
            }
            ManifoldKind::WarpedCylinder { .. } => {
                self.chart.as_ref().expect("warped chart").distance(z).0
            }
            ManifoldKind::PointCloud { data } => {
                let mut best = f64::INFINITY;
                for i in 0..data.len() {
                    best = best.min(dist(z, data.point(i)));
                }
                best
            }
        }
    }

    /// True iff the point lies within `margin` of the manifold.
    pub fn tube_membership(&self, z: &[f64], margin: f64) -> bool {
        self.dist_to(z) <= margin
    }

    /// True iff the point lies on the manifold up to the on-manifold tolerance.
    pub fn on_manifold(&self, z: &[f64]) -> bool {
        self.dist_to(z) <= self.tol.on_manifold
    }

    /// Nearest-point projection into `out`. Errors with `OutsideTube` where
    /// the nearest point stops being unique: for the round analytic kinds
    /// that is the medial axis (the centre, the symmetry axis, or a
    /// degenerate block), which sits at distance exactly the reach on the
    /// inner side; sampled backends refuse conservatively at or beyond the
    /// reach.
    pub fn project_into(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(z.len(), self.ambient_dim);
        debug_assert_eq!(out.len(), self.ambient_dim);
        const DEGENERATE: f64 = 1e-12;
        let ambiguous = |reach: f64| Error::OutsideTube {
            dist: reach,
            reach,
        };
        match &self.kind {
            ManifoldKind::Circle { radius } => {
                let rho = z[0].hypot(z[1]);
                if rho < DEGENERATE {
                    return Err(ambiguous(*radius));
                }
                out[0] = radius * z[0] / rho;
                out[1] = radius * z[1] / rho;
            }
            ManifoldKind::Sphere { radius } => {
                let rho = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
                if rho < DEGENERATE {
                    return Err(ambiguous(*radius));
                }
                for k in 0..3 {
                    out[k] = radius * z[k] / rho;
                }
            }
            ManifoldKind::Cylinder { radius } => {
                let rho = z[0].hypot(z[1]);
                if rho < DEGENERATE {
                    return Err(ambiguous(*radius));
                }
                out[0] = radius * z[0] / rho;
                out[1] = radius * z[1] / rho;
                out[2] = z[2];
            }
            ManifoldKind::CliffordTorus { r1, r2 } => {
                let ra = z[0].hypot(z[1]);
                let rb = z[2].hypot(z[3]);
                if ra < DEGENERATE || rb < DEGENERATE {
                    return Err(ambiguous(r1.min(*r2)));
                }
                out[0] = r1 * z[0] / ra;
                out[1] = r1 * z[1] / ra;
                out[2] = r2 * z[2] / rb;
                out[3] = r2 * z[3] / rb;
            }
            ManifoldKind::FlatPatch { halfwidth } => {
                out[0] = z[0].clamp(-halfwidth, *halfwidth);
                out[1] = z[1].clamp(-halfwidth, *halfwidth);
            }
            ManifoldKind::WarpedCylinder { .. } => {
                let d = self.dist_to(z);
                let reach = self.reach();
                if d >= reach {
                    return Err(Error::OutsideTube { dist: d, reach });
                }
                let chart = self.chart.as_ref().expect("warped chart");
                let (p, _) = chart.project(z, self.tol.projection)?;
                out.copy_from_slice(&p);
            }
            ManifoldKind::PointCloud { data } => {
                let d = self.dist_to(z);
                let reach = self.reach();
                if d >= reach {
                    return Err(Error::OutsideTube { dist: d, reach });
                }
                let mut best = f64::INFINITY;
                let mut arg = 0;
                for i in 0..data.len() {
                    let d = dist(z, data.point(i));
                    if d < best {
                        best = d;
                        arg = i;
                    }
                }
                out.copy_from_slice(data.point(arg));
            }
        }
        Ok(())
    }

    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ambient_dim];
        self.project_into(z, &mut out)?;
        Ok(out)
    }

    /// Geodesic distance between two on-manifold points.
    pub fn geodesic(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        for z in [p, q] {
            let d = self.dist_to(z);
            if d > self.tol.on_manifold.max(1e-7) {
                return Err(Error::NotOnManifold {
                    dist: d,
                    tol: self.tol.on_manifold,
                });
            }
        }
        Ok(match &self.kind {
            ManifoldKind::Circle { radius } => {
                radius * wrap_angle(q[1].atan2(q[0]) - p[1].atan2(p[0]))
            }
            ManifoldKind::Sphere { radius } => {
                let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / (radius * radius);
                radius * dot.clamp(-1.0, 1.0).acos()
            }
            ManifoldKind::Cylinder { radius } => {
                let dth = wrap_angle(q[1].atan2(q[0]) - p[1].atan2(p[0]));
                (radius * dth).hypot(q[2] - p[2])
            }
            ManifoldKind::CliffordTorus { r1, r2 } => {
                let d1 = wrap_angle(q[1].atan2(q[0]) - p[1].atan2(p[0])) * r1;
                let d2 = wrap_angle(q[3].atan2(q[2]) - p[3].atan2(p[2])) * r2;
                d1.hypot(d2)
            }
            ManifoldKind::FlatPatch { .. } => dist(p, q),
            ManifoldKind::WarpedCylinder { .. } | ManifoldKind::PointCloud { .. } => {
                geodesic::graph_distance(self, p, q)?
            }
        })
    }

    /// Chordal-to-geodesic comparability constant on the part of the
    /// manifold inside the closed ambient ball of radius 2L.
    pub fn comparability(&self, l_bound: f64, sample_count: usize) -> Result<ComparabilityConstant> {
        if !(l_bound > 0.0) {
            return Err(Error::InvalidInput(format!(
                "L must be positive, got {l_bound}"
            )));
        }
        let ball = 2.0 * l_bound;
        let samples = self.sample_points(sample_count.max(16));
        let nu = self.ambient_dim;
        let idx: Vec<usize> = (0..samples.len() / nu)
            .filter(|&i| norm(&samples[i * nu..(i + 1) * nu]) <= ball)
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptyIntersection(ball));
        }
        let mut k_max: f64 = 1.0;
        let mut pairs = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            let p = &samples[i * nu..(i + 1) * nu];
            for &j in idx.iter().skip(a + 1) {
                let q = &samples[j * nu..(j + 1) * nu];
                let chord = dist(p, q);
                if chord < 1e-12 {
                    continue;
                }
                let geo = self.geodesic(p, q)?;
                k_max = k_max.max(geo / chord);
                pairs += 1;
            }
        }
        // closed-form sup where the full round factor lies inside the ball:
        // arc/chord <= pi/2 with equality at antipodal pairs
        if let Some(exact) = self.analytic_comparability(ball) {
            k_max = k_max.max(exact);
        }
        Ok(ComparabilityConstant {
            k: k_max,
            l: l_bound,
            sample_count: pairs,
        })
    }

    fn analytic_comparability(&self, ball: f64) -> Option<f64> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        match &self.kind {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere { radius } => {
                (*radius <= ball).then_some(half_pi)
            }
            ManifoldKind::Cylinder { radius } => (*radius <= ball).then_some(half_pi),
            ManifoldKind::CliffordTorus { r1, r2 } => {
                (r1.hypot(*r2) <= ball).then_some(half_pi)
            }
            ManifoldKind::FlatPatch { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Structured parameter samples, flat with stride `ambient_dim`.
    pub fn sample_points(&self, n_target: usize) -> Vec<f64> {
        self.sample_with_frames(n_target).points
    }

    /// Structured samples with orthonormal tangent frames.
    pub fn sample_with_frames(&self, n_target: usize) -> SampleSet {
        let nu = self.ambient_dim;
        let dim = self.intrinsic_dim;
        let mut points = Vec::new();
        let mut frames = Vec::new();
        match &self.kind {
            ManifoldKind::Circle { radius } => {
                let n = n_target.max(8);
                for i in 0..n {
                    let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                    points.extend_from_slice(&[radius * th.cos(), radius * th.sin()]);
                    frames.extend_from_slice(&[-th.sin(), th.cos()]);
                }
            }
            ManifoldKind::Sphere { radius } => {
                let g = grid_side(n_target);
                for i in 0..g {
                    // offset latitudes avoid the degenerate poles
                    let th = std::f64::consts::PI * (i as f64 + 0.5) / g as f64;
                    for j in 0..g {
                        let ph = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / g as f64;
                        let (st, ct) = (th.sin(), th.cos());
                        let (sp, cp) = (ph.sin(), ph.cos());
                        points.extend_from_slice(&[radius * st * cp, radius * st * sp, radius * ct]);
                        frames.extend_from_slice(&[ct * cp, ct * sp, -st]);
                        frames.extend_from_slice(&[-sp, cp, 0.0]);
                    }
                }
            }
            ManifoldKind::Cylinder { radius } => {
                let g = grid_side(n_target);
                for i in 0..g {
                    let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / g as f64;
                    for j in 0..g {
                        let z = -self.window + 2.0 * self.window * (j as f64 + 0.5) / g as f64;
                        points.extend_from_slice(&[radius * th.cos(), radius * th.sin(), z]);
                        frames.extend_from_slice(&[-th.sin(), th.cos(), 0.0]);
                        frames.extend_from_slice(&[0.0, 0.0, 1.0]);
                    }
                }
            }
            ManifoldKind::CliffordTorus { r1, r2 } => {
                let g = grid_side(n_target);
                for i in 0..g {
                    let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / g as f64;
                    for j in 0..g {
                        let b = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / g as f64;
                        points.extend_from_slice(&[
                            r1 * a.cos(),
                            r1 * a.sin(),
                            r2 * b.cos(),
                            r2 * b.sin(),
                        ]);
                        frames.extend_from_slice(&[-a.sin(), a.cos(), 0.0, 0.0]);
                        frames.extend_from_slice(&[0.0, 0.0, -b.sin(), b.cos()]);
                    }
                }
            }
            ManifoldKind::FlatPatch { halfwidth } => {
                let g = grid_side(n_target);
                for i in 0..g {
                    let x = -halfwidth + 2.0 * halfwidth * (i as f64 + 0.5) / g as f64;
                    for j in 0..g {
                        let y = -halfwidth + 2.0 * halfwidth * (j as f64 + 0.5) / g as f64;
                        points.extend_from_slice(&[x, y]);
                        frames.extend_from_slice(&[1.0, 0.0]);
                        frames.extend_from_slice(&[0.0, 1.0]);
                    }
                }
            }
            ManifoldKind::WarpedCylinder { .. } => {
                let chart = self.chart.as_ref().expect("warped chart");
                let g = grid_side(n_target);
                for i in 0..g {
                    let t = -self.window + 2.0 * self.window * (i as f64 + 0.5) / g as f64;
                    for j in 0..g {
                        let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / g as f64;
                        points.extend_from_slice(&chart.point(t, th));
                        let fr = chart.frame(t, th);
                        frames.extend_from_slice(&fr[0]);
                        frames.extend_from_slice(&fr[1]);
                    }
                }
            }
            ManifoldKind::PointCloud { data } => {
                points = data.points.clone();
                frames = data.frames.clone();
            }
        }
        SampleSet {
            ambient_dim: nu,
            intrinsic_dim: dim,
            points,
            frames,
        }
    }

    /// Sampled Federer reach over `pair_target` ordered point pairs.
    pub fn federer_reach(&self, pair_target: usize) -> Result<ReachEstimate> {
        reach::federer_reach(self, pair_target)
    }

    pub(crate) fn chart_ref(&self) -> Option<&WarpedChart> {
        self.chart.as_ref()
    }
}

/// Comparability constant `K` with `d(p,q) <= K |p-q|` on the sampled pairs
/// inside the 2L-ball.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComparabilityConstant {
    pub k: f64,
    pub l: f64,
    pub sample_count: usize,
}

/// A structured sample of the manifold with tangent frames.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub points: Vec<f64>,
    pub frames: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn frame_vec(&self, i: usize, k: usize) -> &[f64] {
        let base = (i * self.intrinsic_dim + k) * self.ambient_dim;
        &self.frames[base..base + self.ambient_dim]
    }
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn grid_side(n_target: usize) -> usize {
    ((n_target.max(16)) as f64).sqrt().ceil() as usize
}

/// Wrap an angle difference into [0, pi].
pub fn wrap_angle(dth: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = dth.rem_euclid(two_pi);
    if d > std::f64::consts::PI {
        d = two_pi - d;
    }
    d
}

pub fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;

    fn unit_circle() -> EmbeddedManifold {
        EmbeddedManifold::new(ManifoldKind::Circle { radius: 1.0 }, None, Tolerances::default())
            .unwrap()
    }

    #[test]
    fn circle_radial_projection() {
        let m = unit_circle();
        let p = m.project(&[2.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
    }

    #[test]
    fn circle_centre_outside_tube() {
        let m = unit_circle();
        match m.project(&[0.0, 0.0]) {
            Err(Error::OutsideTube { dist, reach }) => {
                assert_eq!(dist, 1.0);
                assert_eq!(reach, 1.0);
            }
            other => panic!("expected OutsideTube, got {other:?}"),
        }
    }

    #[test]
    fn cylinder_axis_outside_tube() {
        let m = EmbeddedManifold::new(
            ManifoldKind::Cylinder { radius: 1.0 },
            Some(8.0),
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            m.project(&[0.0, 0.0, 5.0]),
            Err(Error::OutsideTube { .. })
        ));
    }

    #[test]
    fn torus_blockwise_projection() {
        let m = EmbeddedManifold::new(
            ManifoldKind::CliffordTorus { r1: 1.0, r2: 1.0 },
            None,
            Tolerances::default(),
        )
        .unwrap();
        let p = m.project(&[1.5, 0.0, 0.5, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!((p[2] - 1.0).abs() < 1e-15);
        let d = m.dist_to(&[1.5, 0.0, 0.5, 0.0]);
        assert!((d - (0.5f64.powi(2) + 0.5f64.powi(2)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tube_membership_circle() {
        let m = unit_circle();
        assert!(m.tube_membership(&[1.3, 0.0], 0.5));
        assert!(!m.tube_membership(&[0.2, 0.0], 0.5));
    }

    #[test]
    fn geodesic_antipodal_circle() {
        let m = unit_circle();
        let d = m.geodesic(&[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!((d - std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(m.geodesic(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn geodesic_requires_on_manifold() {
        let m = unit_circle();
        assert!(matches!(
            m.geodesic(&[0.5, 0.0], &[1.0, 0.0]),
            Err(Error::NotOnManifold { .. })
        ));
    }

    #[test]
    fn cylinder_unrolled_distance() {
        let m = EmbeddedManifold::new(
            ManifoldKind::Cylinder { radius: 1.0 },
            Some(8.0),
            Tolerances::default(),
        )
        .unwrap();
        let d = m.geodesic(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 2.0]).unwrap();
        let expect = (std::f64::consts::PI.powi(2) + 4.0).sqrt();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn comparability_circle_is_half_pi() {
        let m = unit_circle();
        let k = m.comparability(2.0, 400).unwrap();
        assert!((k.k - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn comparability_flat_patch_is_one() {
        let m = EmbeddedManifold::new(
            ManifoldKind::FlatPatch { halfwidth: 1.0 },
            None,
            Tolerances::default(),
        )
        .unwrap();
        let k = m.comparability(3.0, 200).unwrap();
        assert!((k.k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparability_empty_ball() {
        let m = unit_circle();
        assert!(matches!(
            m.comparability(0.1, 100),
            Err(Error::EmptyIntersection(_))
        ));
    }

    #[test]
    fn projection_idempotent_warped() {
        let m = EmbeddedManifold::new(
            ManifoldKind::WarpedCylinder {
                profile: WarpProfile::SinOffset {
                    base: 2.0,
                    amplitude: 0.25,
                    frequency: 1.0,
                },
            },
            Some(6.0),
            Tolerances::default(),
        )
        .unwrap();
        let z = [1.0, 2.1, 0.4];
        let p = m.project(&z).unwrap();
        let p2 = m.project(&p).unwrap();
        assert!(dist(&p, &p2) < 1e-9);
        assert!(m.on_manifold(&p));
    }

    #[test]
    fn on_manifold_warped_samples() {
        let m = EmbeddedManifold::new(
            ManifoldKind::WarpedCylinder {
                profile: WarpProfile::SinOffset {
                    base: 2.0,
                    amplitude: 0.25,
                    frequency: 1.0,
                },
            },
            Some(6.0),
            Tolerances::default(),
        )
        .unwrap();
        let s = m.sample_points(64);
        for i in 0..s.len() / 3 {
            assert!(m.tube_membership(&s[3 * i..3 * i + 3], 0.01));
        }
    }
}
