//! Conformal transport between the half-space, the Euclidean ball, and the
//! Poincare ball, plus hyperbolic volume.
//!
//! The half-space {y > 0} maps onto the unit ball by an inversion centred
//! at -e composed with a reflection, chosen so the point at infinity goes
//! to the north pole e. On the boundary this restricts to the inverse
//! stereographic projection. The map is conformal with derivative scale
//! 2 / |x + e|^2, and the critical kernel d^{m+1} / |x-y|^{2m} is exactly
//! balanced under it, so boundary energies transport within quadrature
//! error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::distribution::{distribution_report, DistributionReport};
use crate::geometry::wrap_angle;
use crate::surface::{theta_node, Domain, Mesh, SurfaceMap};

/// Hyperbolic computations exclude a collar at the boundary sphere where
/// the volume density is non-integrable.
pub const BOUNDARY_COLLAR: f64 = 1.0 / 64.0;

/// Half-space point (x', y) to ball point; dimension from the slice length.
pub fn half_space_to_ball(x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let y = x[d - 1];
    let mut denom = (y + 1.0) * (y + 1.0);
    for &c in &x[..d - 1] {
        denom += c * c;
    }
    for k in 0..d - 1 {
        out[k] = 2.0 * x[k] / denom;
    }
    out[d - 1] = 1.0 - 2.0 * (y + 1.0) / denom;
}

/// Inverse of `half_space_to_ball`.
pub fn ball_to_half_space(w: &[f64], out: &mut [f64]) {
    let d = w.len();
    let mut denom = (1.0 - w[d - 1]) * (1.0 - w[d - 1]);
    for &c in &w[..d - 1] {
        denom += c * c;
    }
    for k in 0..d - 1 {
        out[k] = 2.0 * w[k] / denom;
    }
    out[d - 1] = 2.0 * (1.0 - w[d - 1]) / denom - 1.0;
}

/// Derivative scale of the half-space-to-ball map at x.
pub fn conformal_factor(x: &[f64]) -> f64 {
    let d = x.len();
    let mut n2 = (x[d - 1] + 1.0) * (x[d - 1] + 1.0);
    for &c in &x[..d - 1] {
        n2 += c * c;
    }
    2.0 / n2
}

/// Boundary restriction for m = 1: line coordinate to circle angle. The
/// pole (image of infinity) sits at angle pi/2.
pub fn line_to_angle(x: f64) -> f64 {
    (2.0 * x.atan() - std::f64::consts::FRAC_PI_2).rem_euclid(2.0 * std::f64::consts::PI)
}

/// Inverse boundary map; the angle must avoid the pole at pi/2.
pub fn angle_to_line(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * std::f64::consts::PI);
    if t >= std::f64::consts::FRAC_PI_2 {
        t -= 2.0 * std::f64::consts::PI;
    }
    ((t + std::f64::consts::FRAC_PI_2) / 2.0).tan()
}

/// Boundary conformal factor: d theta / dx at line coordinate x.
pub fn boundary_factor(x: f64) -> f64 {
    2.0 / (1.0 + x * x)
}

/// Oscillation tolerance near the pole: beyond it a circle map has no
/// constant-tail plane representative.
pub const POLE_OSCILLATION_TOL: f64 = 0.25;

/// Transport a circle map to the plane. Node values carry over verbatim;
/// node positions and weights transform by the boundary map, so the
/// roundtrip is exact. The tail value is taken from the node nearest the
/// pole after checking that the values near the pole oscillate less than
/// the tolerance (in the ambient metric).
pub fn transport_to_plane(map: &SurfaceMap) -> Result<SurfaceMap> {
    if !matches!(map.domain, Domain::SphereS1 | Domain::PoincareBoundary) {
        return Err(Error::InvalidInput(
            "transport to the plane takes a circle-domain map".into(),
        ));
    }
    let n = match map.mesh {
        Mesh::Circle { n } => n,
        _ => return Err(Error::InvalidInput("expected the circle mesh".into())),
    };
    let vd = map.value_dim;
    let pole = std::f64::consts::FRAC_PI_2;

    // order nodes by increasing line coordinate and locate the pole collar
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        angle_to_line(theta_node(a, n))
            .partial_cmp(&angle_to_line(theta_node(b, n)))
            .unwrap()
    });
    let collar = (n / 64).max(4);
    let mut by_pole: Vec<usize> = (0..n).collect();
    by_pole.sort_by(|&a, &b| {
        wrap_angle(theta_node(a, n) - pole)
            .partial_cmp(&wrap_angle(theta_node(b, n) - pole))
            .unwrap()
    });
    let tail = map.value(by_pole[0]).to_vec();
    let mut osc: f64 = 0.0;
    for &i in by_pole.iter().take(collar) {
        osc = osc.max(crate::geometry::dist(map.value(i), &tail));
    }
    if osc > POLE_OSCILLATION_TOL {
        return Err(Error::PoleOnSupport {
            osc,
            tol: POLE_OSCILLATION_TOL,
        });
    }

    let nodes: Vec<f64> = order.iter().map(|&i| angle_to_line(theta_node(i, n))).collect();
    let mut values = Vec::with_capacity(n * vd);
    for &i in &order {
        values.extend_from_slice(map.value(i));
    }
    // window edges half a transported cell beyond the extreme nodes
    let lo = nodes[0] - 0.5 * (nodes[1] - nodes[0]);
    let hi = nodes[n - 1] + 0.5 * (nodes[n - 1] - nodes[n - 2]);
    SurfaceMap::new(
        Domain::PlaneR1Tail,
        Mesh::Line {
            nodes,
            window: (lo, hi),
        },
        values,
        vd,
        map.l_bound,
        Some(tail),
    )
}

/// Transport a plane map back to the circle. Requires the node positions
/// to be the transported circle grid (within floating tolerance), which is
/// what `transport_to_plane` produces; values carry over verbatim.
pub fn transport_to_circle(map: &SurfaceMap, domain: Domain) -> Result<SurfaceMap> {
    if map.domain != Domain::PlaneR1Tail {
        return Err(Error::InvalidInput(
            "transport to the circle takes a plane map".into(),
        ));
    }
    if !matches!(domain, Domain::SphereS1 | Domain::PoincareBoundary) {
        return Err(Error::InvalidInput("target domain must be a circle".into()));
    }
    let nodes = match &map.mesh {
        Mesh::Line { nodes, .. } => nodes,
        _ => unreachable!(),
    };
    let n = nodes.len();
    let vd = map.value_dim;
    let mut values = vec![0.0; n * vd];
    let mut seen = vec![false; n];
    for (pos, &x) in nodes.iter().enumerate() {
        let theta = line_to_angle(x);
        let idx_f = theta / (2.0 * std::f64::consts::PI) * n as f64 - 0.5;
        let idx = idx_f.round().rem_euclid(n as f64) as usize;
        if (idx_f - idx_f.round()).abs() > 1e-6 || seen[idx] {
            return Err(Error::InvalidInput(
                "plane nodes are not a transported circle grid".into(),
            ));
        }
        seen[idx] = true;
        values[idx * vd..(idx + 1) * vd].copy_from_slice(map.value(pos));
    }
    SurfaceMap::new(domain, Mesh::Circle { n }, values, vd, map.l_bound, None)
}

/// Hyperbolic volume density of the Poincare ball at Euclidean radius r.
pub fn hyperbolic_density(r: f64, dim: usize) -> f64 {
    (2.0 / (1.0 - r * r)).powi(dim as i32)
}

/// Closed-form hyperbolic area of a disk of hyperbolic radius rho (dim 2).
pub fn hyperbolic_disk_area(rho: f64) -> f64 {
    4.0 * std::f64::consts::PI * (0.5 * rho).sinh().powi(2)
}

/// Euclidean radius of the hyperbolic disk of radius rho centred at 0.
pub fn hyperbolic_radius_to_euclidean(rho: f64) -> f64 {
    (0.5 * rho).tanh()
}

/// Polar grid on the ball, bounded away from the boundary sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub r_max: f64,
}

impl PolarGrid {
    pub fn new(nr: usize, ntheta: usize, r_max: f64) -> Result<Self> {
        if r_max > 1.0 - BOUNDARY_COLLAR {
            return Err(Error::BoundaryTouch(r_max));
        }
        if nr < 2 || ntheta < 4 {
            return Err(Error::InvalidInput("polar grid too small".into()));
        }
        Ok(PolarGrid { nr, ntheta, r_max })
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.r_max / self.nr as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / self.ntheta as f64
    }

    pub fn cell_area(&self, i: usize) -> f64 {
        let dr = self.r_max / self.nr as f64;
        let dth = 2.0 * std::f64::consts::PI / self.ntheta as f64;
        self.r(i) * dr * dth
    }
}

/// Hyperbolic measure of a region given as a cell indicator, by midpoint
/// density quadrature (dim = 2).
pub fn hyperbolic_measure(
    grid: &PolarGrid,
    indicator: impl Fn(f64, f64) -> bool,
) -> f64 {
    let mut total = 0.0;
    for i in 0..grid.nr {
        let r = grid.r(i);
        let density = hyperbolic_density(r, 2);
        for j in 0..grid.ntheta {
            if indicator(r, grid.theta(j)) {
                total += density * grid.cell_area(i);
            }
        }
    }
    total
}

/// Scalar field |DU|_eucl on a polar grid; the hyperbolic gradient is
/// |DU|_hyp = (1 - r^2) / 2 * |DU|_eucl.
pub struct BallGradientField {
    pub grid: PolarGrid,
    /// Row-major by radial ring, stride ntheta; negative entries mark
    /// excluded cells.
    pub eucl_norm: Vec<f64>,
}

/// Distribution of the hyperbolic gradient against hyperbolic measure.
pub fn hyperbolic_distribution(
    field: &BallGradientField,
    m: usize,
    quantile_points: usize,
) -> DistributionReport {
    let grid = &field.grid;
    let mut gradient = Vec::with_capacity(field.eucl_norm.len());
    let mut weights = Vec::with_capacity(field.eucl_norm.len());
    for i in 0..grid.nr {
        let r = grid.r(i);
        let density = hyperbolic_density(r, m + 1);
        let conf = 0.5 * (1.0 - r * r);
        for j in 0..grid.ntheta {
            let g = field.eucl_norm[i * grid.ntheta + j];
            if g < 0.0 {
                continue;
            }
            gradient.push(conf * g);
            weights.push(density * grid.cell_area(i));
        }
    }
    distribution_report(&gradient, &weights, m, 0, quantile_points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_bulk() {
        let pts = [
            [0.3, 0.7],
            [-1.2, 0.01],
            [5.0, 3.0],
            [0.0, 1.0],
            [-0.4, 10.0],
        ];
        for p in pts {
            let mut w = [0.0; 2];
            let mut back = [0.0; 2];
            half_space_to_ball(&p, &mut w);
            assert!(w[0] * w[0] + w[1] * w[1] < 1.0);
            ball_to_half_space(&w, &mut back);
            assert!((back[0] - p[0]).abs() < 1e-12);
            assert!((back[1] - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn centre_of_ball_is_unit_height() {
        let mut w = [0.0; 2];
        half_space_to_ball(&[0.0, 1.0], &mut w);
        assert!(w[0].abs() < 1e-15 && w[1].abs() < 1e-15);
    }

    #[test]
    fn boundary_map_matches_bulk_limit() {
        let x = 0.8;
        let theta = line_to_angle(x);
        let mut w = [0.0; 2];
        half_space_to_ball(&[x, 0.0], &mut w);
        assert!((w[0] - theta.cos()).abs() < 1e-12);
        assert!((w[1] - theta.sin()).abs() < 1e-12);
        let back = angle_to_line(theta);
        assert!((back - x).abs() < 1e-12);
    }

    #[test]
    fn conformality_by_finite_differences() {
        // the Jacobian must be a scaled orthogonal matrix: check that both
        // singular values equal the conformal factor
        let p = [0.37, 0.82];
        let eps = 1e-6;
        let mut w0 = [0.0; 2];
        let mut wx = [0.0; 2];
        let mut wy = [0.0; 2];
        half_space_to_ball(&p, &mut w0);
        half_space_to_ball(&[p[0] + eps, p[1]], &mut wx);
        half_space_to_ball(&[p[0], p[1] + eps], &mut wy);
        let jx = [(wx[0] - w0[0]) / eps, (wx[1] - w0[1]) / eps];
        let jy = [(wy[0] - w0[0]) / eps, (wy[1] - w0[1]) / eps];
        let c = conformal_factor(&p);
        assert!((crate::geometry::norm(&jx) - c).abs() < 1e-5);
        assert!((crate::geometry::norm(&jy) - c).abs() < 1e-5);
        let dot = jx[0] * jy[0] + jx[1] * jy[1];
        assert!(dot.abs() < 1e-5);
    }

    #[test]
    fn transport_roundtrip_identity_map() {
        let map = crate::fixtures::identity_circle_map(256);
        let plane = transport_to_plane(&map).unwrap();
        let back = transport_to_circle(&plane, Domain::SphereS1).unwrap();
        for i in 0..map.len() {
            let a = map.value(i);
            let b = back.value(i);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_at_pole_rejected() {
        // map jumping exactly at the pole angle pi/2
        let n = 256;
        let mut values = Vec::with_capacity(2 * n);
        for i in 0..n {
            let th = theta_node(i, n);
            // antipodal jump exactly at the pole angle
            let v = if th < std::f64::consts::FRAC_PI_2 || th > 1.5 * std::f64::consts::PI {
                [1.0, 0.0]
            } else {
                [-1.0, 0.0]
            };
            values.extend_from_slice(&v);
        }
        let map = SurfaceMap::new(
            Domain::SphereS1,
            Mesh::Circle { n },
            values,
            2,
            Some(1.0),
            None,
        )
        .unwrap();
        assert!(matches!(
            transport_to_plane(&map),
            Err(Error::PoleOnSupport { .. })
        ));
    }

    #[test]
    fn hyperbolic_disk_area_oracle() {
        // rho = 1: closed form 4 pi sinh^2(1/2)
        let rho: f64 = 1.0;
        let re = hyperbolic_radius_to_euclidean(rho);
        let grid = PolarGrid::new(2048, 64, 0.9).unwrap();
        let quad = hyperbolic_measure(&grid, |r, _| r <= re);
        let exact = hyperbolic_disk_area(rho);
        assert!(
            (quad - exact).abs() / exact < 0.01,
            "quad = {quad}, exact = {exact}"
        );
    }

    #[test]
    fn boundary_collar_enforced() {
        assert!(matches!(
            PolarGrid::new(64, 64, 0.999),
            Err(Error::BoundaryTouch(_))
        ));
    }

    #[test]
    fn empty_region_zero_measure() {
        let grid = PolarGrid::new(64, 64, 0.9).unwrap();
        assert_eq!(hyperbolic_measure(&grid, |_, _| false), 0.0);
    }
}
