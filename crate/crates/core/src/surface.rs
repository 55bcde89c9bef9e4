//! Discretized boundary maps.
//!
//! A `SurfaceMap` is a mesh of domain nodes with quadrature weights and an
//! ambient value per node. Plane domains carry a constant tail outside their
//! window so finite-energy plane maps are exactly representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, wrap_angle, EmbeddedManifold, ManifoldKind};

/// Supported map domains. The critical exponent pair is tied to the domain
/// dimension m: kernel d^{m+1} / |x-y|^{2m}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Unit circle, m = 1.
    SphereS1,
    /// Unit 2-sphere, m = 2.
    SphereS2,
    /// Real line with a constant tail, m = 1.
    PlaneR1Tail,
    /// Plane with a constant tail, m = 2.
    PlaneR2Tail,
    /// Unit circle seen as the boundary sphere of the Poincare ball, m = 1.
    PoincareBoundary,
}

impl Domain {
    pub fn m(&self) -> usize {
        match self {
            Domain::SphereS1 | Domain::PlaneR1Tail | Domain::PoincareBoundary => 1,
            Domain::SphereS2 | Domain::PlaneR2Tail => 2,
        }
    }

    pub fn is_plane(&self) -> bool {
        matches!(self, Domain::PlaneR1Tail | Domain::PlaneR2Tail)
    }
}

/// Structured node layouts per domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Mesh {
    /// n nodes at theta_i = 2 pi (i + 1/2) / n on the unit circle.
    Circle { n: usize },
    /// Ordered 1-d nodes inside a window; weights are cell widths.
    Line {
        nodes: Vec<f64>,
        window: (f64, f64),
    },
    /// Offset latitude-longitude grid on the unit 2-sphere.
    LatLon { nlat: usize, nlon: usize },
    /// Uniform nx x ny grid over a rectangle window.
    Grid {
        nx: usize,
        ny: usize,
        window: (f64, f64, f64, f64),
    },
}

impl Mesh {
    pub fn len(&self) -> usize {
        match self {
            Mesh::Circle { n } => *n,
            Mesh::Line { nodes, .. } => nodes.len(),
            Mesh::LatLon { nlat, nlon } => nlat * nlon,
            Mesh::Grid { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of the node position coordinates used in |x - y|.
    pub fn pos_dim(&self) -> usize {
        match self {
            Mesh::Circle { .. } => 2,
            Mesh::Line { .. } => 1,
            Mesh::LatLon { .. } => 3,
            Mesh::Grid { .. } => 2,
        }
    }

    /// Flat position array (stride `pos_dim`), quadrature weights, and a
    /// local length scale per node for near-diagonal handling.
    pub fn layout(&self) -> MeshLayout {
        match self {
            Mesh::Circle { n } => {
                let n = *n;
                let mut pos = Vec::with_capacity(2 * n);
                let w = 2.0 * std::f64::consts::PI / n as f64;
                for i in 0..n {
                    let th = theta_node(i, n);
                    pos.push(th.cos());
                    pos.push(th.sin());
                }
                MeshLayout {
                    pos,
                    weights: vec![w; n],
                    scale: vec![w; n],
                }
            }
            Mesh::Line { nodes, window } => {
                let n = nodes.len();
                let mut weights = Vec::with_capacity(n);
                for i in 0..n {
                    let lo = if i == 0 {
                        window.0
                    } else {
                        0.5 * (nodes[i - 1] + nodes[i])
                    };
                    let hi = if i + 1 == n {
                        window.1
                    } else {
                        0.5 * (nodes[i] + nodes[i + 1])
                    };
                    weights.push(hi - lo);
                }
                MeshLayout {
                    pos: nodes.clone(),
                    scale: weights.clone(),
                    weights,
                }
            }
            Mesh::LatLon { nlat, nlon } => {
                let (nlat, nlon) = (*nlat, *nlon);
                let mut pos = Vec::with_capacity(3 * nlat * nlon);
                let mut weights = Vec::with_capacity(nlat * nlon);
                let mut scale = Vec::with_capacity(nlat * nlon);
                let dth = std::f64::consts::PI / nlat as f64;
                let dph = 2.0 * std::f64::consts::PI / nlon as f64;
                for i in 0..nlat {
                    let th = (i as f64 + 0.5) * dth;
                    for j in 0..nlon {
                        let ph = (j as f64 + 0.5) * dph;
                        pos.push(th.sin() * ph.cos());
                        pos.push(th.sin() * ph.sin());
                        pos.push(th.cos());
                        let w = th.sin() * dth * dph;
                        weights.push(w);
                        scale.push(w.sqrt().max(dth));
                    }
                }
                MeshLayout { pos, weights, scale }
            }
            Mesh::Grid { nx, ny, window } => {
                let (nx, ny) = (*nx, *ny);
                let hx = (window.1 - window.0) / nx as f64;
                let hy = (window.3 - window.2) / ny as f64;
                let mut pos = Vec::with_capacity(2 * nx * ny);
                for j in 0..ny {
                    for i in 0..nx {
                        pos.push(window.0 + (i as f64 + 0.5) * hx);
                        pos.push(window.2 + (j as f64 + 0.5) * hy);
                    }
                }
                MeshLayout {
                    pos,
                    weights: vec![hx * hy; nx * ny],
                    scale: vec![(hx * hy).sqrt(); nx * ny],
                }
            }
        }
    }
}

/// Circle node angle; offset so distinguished points (poles) never land on
/// a node.
pub fn theta_node(i: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64
}

pub struct MeshLayout {
    pub pos: Vec<f64>,
    pub weights: Vec<f64>,
    pub scale: Vec<f64>,
}

/// A discretized boundary map u : X^m -> N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMap {
    pub domain: Domain,
    pub mesh: Mesh,
    /// Flat node values, stride `value_dim`.
    pub values: Vec<f64>,
    pub value_dim: usize,
    /// Declared ambient sup bound, if any.
    pub l_bound: Option<f64>,
    /// Constant value outside the window (plane domains only).
    pub tail: Option<Vec<f64>>,
}

impl SurfaceMap {
    pub fn new(
        domain: Domain,
        mesh: Mesh,
        values: Vec<f64>,
        value_dim: usize,
        l_bound: Option<f64>,
        tail: Option<Vec<f64>>,
    ) -> Result<Self> {
        if value_dim == 0 || values.len() != mesh.len() * value_dim {
            return Err(Error::InvalidInput(format!(
                "value table size {} does not match {} nodes x dim {}",
                values.len(),
                mesh.len(),
                value_dim
            )));
        }
        if domain.is_plane() {
            match &tail {
                None => {
                    return Err(Error::TailNotConstant(
                        "plane-domain map requires a declared constant tail".into(),
                    ))
                }
                Some(t) if t.len() != value_dim => {
                    return Err(Error::InvalidInput(
                        "tail value dimension mismatch".into(),
                    ))
                }
                _ => {}
            }
        } else if tail.is_some() {
            return Err(Error::InvalidInput(
                "tail markers only apply to plane domains".into(),
            ));
        }
        let map = SurfaceMap {
            domain,
            mesh,
            values,
            value_dim,
            l_bound,
            tail,
        };
        if let Some(l) = l_bound {
            let sup = map.sup_norm();
            if sup > l * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "declared L-bound {l} exceeded by a value of norm {sup}"
                )));
            }
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn m(&self) -> usize {
        self.domain.m()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.value_dim..(i + 1) * self.value_dim]
    }

    pub fn sup_norm(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..self.len() {
            sup = sup.max(crate::geometry::norm(self.value(i)));
        }
        if let Some(t) = &self.tail {
            sup = sup.max(crate::geometry::norm(t));
        }
        sup
    }

    /// Check that all node values (and the tail) lie on the manifold.
    pub fn validate_on_manifold(&self, manifold: &EmbeddedManifold) -> Result<()> {
        let tol = manifold.tolerances().on_manifold;
        for i in 0..self.len() {
            let d = manifold.dist_to(self.value(i));
            if d > tol {
                return Err(Error::NotOnManifold { dist: d, tol });
            }
        }
        if let Some(t) = &self.tail {
            let d = manifold.dist_to(t);
            if d > tol {
                return Err(Error::NotOnManifold { dist: d, tol });
            }
        }
        Ok(())
    }

    /// Piecewise-linear interpolation of a 1-d plane map, constant outside
    /// the window. Used by the averaging extension.
    pub fn interp_line(&self, x: f64, out: &mut [f64]) {
        let (nodes, window) = match &self.mesh {
            Mesh::Line { nodes, window } => (nodes, window),
            _ => panic!("interp_line on a non-line mesh"),
        };
        let tail = self.tail.as_ref().expect("plane map has a tail");
        let vd = self.value_dim;
        if x <= window.0 || x >= window.1 {
            out.copy_from_slice(tail);
            return;
        }
        let n = nodes.len();
        if x <= nodes[0] {
            // blend from the tail at the window edge to the first node
            let t = (x - window.0) / (nodes[0] - window.0);
            lerp(tail, self.value(0), t, out);
            return;
        }
        if x >= nodes[n - 1] {
            let t = (x - nodes[n - 1]) / (window.1 - nodes[n - 1]);
            lerp(self.value(n - 1), tail, t, out);
            return;
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if nodes[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
        lerp(self.value(lo), self.value(hi), t, out);
        let _ = vd;
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
    for k in 0..out.len() {
        out[k] = a[k] + t * (b[k] - a[k]);
    }
}

/// Fast geodesic distance between map values, specialized per target kind.
/// Closed-form targets only; graph-backend targets are rejected because the
/// pair quadrature would need O(n^2) shortest-path queries.
pub enum ValueMetric {
    /// d = |v - w| (flat convex targets or raw vector values).
    Euclidean { dim: usize },
    /// Values cached as angles on a circle of radius r.
    Circle { r: f64, theta: Vec<f64>, tail: Option<f64> },
    /// Values on a round 2-sphere of radius r.
    Sphere { r: f64, dim: usize },
    /// Values cached as angle pairs on a flat torus.
    Torus {
        r1: f64,
        r2: f64,
        ang: Vec<(f64, f64)>,
        tail: Option<(f64, f64)>,
    },
    /// Values cached as (angle, height) on a cylinder of radius r.
    Cylinder {
        r: f64,
        ang_z: Vec<(f64, f64)>,
        tail: Option<(f64, f64)>,
    },
}

impl ValueMetric {
    pub fn build(map: &SurfaceMap, manifold: Option<&EmbeddedManifold>) -> Result<ValueMetric> {
        let Some(m) = manifold else {
            return Ok(ValueMetric::Euclidean { dim: map.value_dim });
        };
        match m.kind() {
            ManifoldKind::FlatPatch { .. } => Ok(ValueMetric::Euclidean { dim: map.value_dim }),
            ManifoldKind::Circle { radius } => {
                let theta = (0..map.len())
                    .map(|i| {
                        let v = map.value(i);
                        v[1].atan2(v[0])
                    })
                    .collect();
                let tail = map.tail.as_ref().map(|t| t[1].atan2(t[0]));
                Ok(ValueMetric::Circle {
                    r: *radius,
                    theta,
                    tail,
                })
            }
            ManifoldKind::Sphere { radius } => Ok(ValueMetric::Sphere {
                r: *radius,
                dim: map.value_dim,
            }),
            ManifoldKind::CliffordTorus { r1, r2 } => {
                let ang = (0..map.len())
                    .map(|i| {
                        let v = map.value(i);
                        (v[1].atan2(v[0]), v[3].atan2(v[2]))
                    })
                    .collect();
                let tail = map
                    .tail
                    .as_ref()
                    .map(|t| (t[1].atan2(t[0]), t[3].atan2(t[2])));
                Ok(ValueMetric::Torus {
                    r1: *r1,
                    r2: *r2,
                    ang,
                    tail,
                })
            }
            ManifoldKind::Cylinder { radius } => {
                let ang_z = (0..map.len())
                    .map(|i| {
                        let v = map.value(i);
                        (v[1].atan2(v[0]), v[2])
                    })
                    .collect();
                let tail = map.tail.as_ref().map(|t| (t[1].atan2(t[0]), t[2]));
                Ok(ValueMetric::Cylinder {
                    r: *radius,
                    ang_z,
                    tail,
                })
            }
            ManifoldKind::WarpedCylinder { .. } | ManifoldKind::PointCloud { .. } => {
                Err(Error::InvalidInput(
                    "pair quadrature needs a closed-form geodesic backend".into(),
                ))
            }
        }
    }

    /// Geodesic distance between the values at nodes i and j.
    #[inline]
    pub fn d(&self, map: &SurfaceMap, i: usize, j: usize) -> f64 {
        match self {
            ValueMetric::Euclidean { .. } => dist(map.value(i), map.value(j)),
            ValueMetric::Circle { r, theta, .. } => r * wrap_angle(theta[i] - theta[j]),
            ValueMetric::Sphere { r, .. } => {
                let a = map.value(i);
                let b = map.value(j);
                let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (r * r);
                r * dot.clamp(-1.0, 1.0).acos()
            }
            ValueMetric::Torus { r1, r2, ang, .. } => {
                let (a1, a2) = ang[i];
                let (b1, b2) = ang[j];
                (r1 * wrap_angle(a1 - b1)).hypot(r2 * wrap_angle(a2 - b2))
            }
            ValueMetric::Cylinder { r, ang_z, .. } => {
                let (a, za) = ang_z[i];
                let (b, zb) = ang_z[j];
                (r * wrap_angle(a - b)).hypot(za - zb)
            }
        }
    }

    /// Geodesic distance between the value at node i and the tail value.
    #[inline]
    pub fn d_tail(&self, map: &SurfaceMap, i: usize) -> f64 {
        match self {
            ValueMetric::Euclidean { .. } => {
                dist(map.value(i), map.tail.as_ref().expect("tail"))
            }
            ValueMetric::Circle { r, theta, tail } => {
                r * wrap_angle(theta[i] - tail.expect("tail angle"))
            }
            ValueMetric::Sphere { r, .. } => {
                let a = map.value(i);
                let b = map.tail.as_ref().expect("tail");
                let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (r * r);
                r * dot.clamp(-1.0, 1.0).acos()
            }
            ValueMetric::Torus { r1, r2, ang, tail } => {
                let (a1, a2) = ang[i];
                let (b1, b2) = tail.expect("tail angles");
                (r1 * wrap_angle(a1 - b1)).hypot(r2 * wrap_angle(a2 - b2))
            }
            ValueMetric::Cylinder { r, ang_z, tail } => {
                let (a, za) = ang_z[i];
                let (b, zb) = tail.expect("tail");
                (r * wrap_angle(a - b)).hypot(za - zb)
            }
        }
    }
}

/// Uniform line mesh with n cells over [lo, hi]; nodes at cell midpoints.
pub fn uniform_line_mesh(n: usize, lo: f64, hi: f64) -> Mesh {
    let h = (hi - lo) / n as f64;
    Mesh::Line {
        nodes: (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(),
        window: (lo, hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_map_requires_tail() {
        let mesh = uniform_line_mesh(8, 0.0, 1.0);
        let values = vec![0.0; 16];
        let err = SurfaceMap::new(Domain::PlaneR1Tail, mesh, values, 2, None, None);
        assert!(matches!(err, Err(Error::TailNotConstant(_))));
    }

    #[test]
    fn l_bound_enforced() {
        let mesh = Mesh::Circle { n: 4 };
        let values = vec![2.0, 0.0, 0.0, 2.0, -2.0, 0.0, 0.0, -2.0];
        let err = SurfaceMap::new(Domain::SphereS1, mesh, values, 2, Some(1.0), None);
        assert!(err.is_err());
    }

    #[test]
    fn line_weights_cover_window() {
        let mesh = uniform_line_mesh(16, -1.0, 3.0);
        let layout = mesh.layout();
        let total: f64 = layout.weights.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn circle_weights_cover_circle() {
        let mesh = Mesh::Circle { n: 64 };
        let layout = mesh.layout();
        let total: f64 = layout.weights.iter().sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn latlon_weights_cover_sphere() {
        let mesh = Mesh::LatLon { nlat: 48, nlon: 96 };
        let layout = mesh.layout();
        let total: f64 = layout.weights.iter().sum();
        // midpoint rule in latitude: first-order accurate area
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn interp_line_blends_to_tail() {
        let mesh = uniform_line_mesh(4, 0.0, 4.0);
        // values 1,2,3,4 at nodes 0.5, 1.5, 2.5, 3.5; tail 0
        let map = SurfaceMap::new(
            Domain::PlaneR1Tail,
            mesh,
            vec![1.0, 2.0, 3.0, 4.0],
            1,
            None,
            Some(vec![0.0]),
        )
        .unwrap();
        let mut out = [0.0];
        map.interp_line(2.0, &mut out);
        assert!((out[0] - 2.5).abs() < 1e-12);
        map.interp_line(5.0, &mut out);
        assert_eq!(out[0], 0.0);
        map.interp_line(0.25, &mut out);
        assert!((out[0] - 0.5).abs() < 1e-12);
    }
}
