//! Extension by averaging on a half-space slab.
//!
//! V(x', h) = integral of u(x' - h z) phi(z) dz over the unit ball, where
//! phi is a fixed polynomial bump with unit mass, sup bound 1 and gradient
//! bound 2. The quadrature is Gauss-Legendre over the kernel support,
//! doubled once for an error estimate; since phi is a polynomial of degree
//! four and the rule is exact far beyond that, the kernel mass is summed
//! exactly and V is a convex combination of map values.

use serde::{Deserialize, Serialize};

use crate::det::det_sum_vec;
use crate::error::{Error, Result};
use crate::geometry::EmbeddedManifold;
use crate::quadrature::gauss_legendre;
use crate::surface::{Mesh, SurfaceMap};

/// Radial polynomial bump on the unit ball with the fixed normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mollifier {
    pub m: usize,
    /// Normalization constant: 15/16 for m = 1, 3/pi for m = 2.
    pub coefficient: f64,
    pub sup_bound: f64,
    pub grad_bound: f64,
}

impl Mollifier {
    /// Build the fixed profile for m in {1, 2} and verify all four bounds
    /// (unit mass, unit-ball support, sup <= 1, grad sup <= 2).
    pub fn build(m: usize) -> Result<Self> {
        let coefficient = match m {
            1 => 15.0 / 16.0,
            2 => 3.0 / std::f64::consts::PI,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "mollifier dimension must be 1 or 2, got {m}"
                )))
            }
        };
        let moll = Mollifier {
            m,
            coefficient,
            sup_bound: coefficient,
            grad_bound: 0.0,
        };
        moll.verify()
    }

    /// Construct with an explicit coefficient (used to exercise the bound
    /// checks); `build` uses the canonical normalization.
    pub fn with_coefficient(m: usize, coefficient: f64) -> Result<Self> {
        let moll = Mollifier {
            m,
            coefficient,
            sup_bound: coefficient,
            grad_bound: 0.0,
        };
        moll.verify()
    }

    fn verify(mut self) -> Result<Self> {
        let rule = gauss_legendre(64);
        let mass = match self.m {
            1 => crate::quadrature::integrate(&rule, -1.0, 1.0, |z| self.eval_radial(z.abs())),
            _ => {
                2.0 * std::f64::consts::PI
                    * crate::quadrature::integrate(&rule, 0.0, 1.0, |r| r * self.eval_radial(r))
            }
        };
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::BoundViolation(format!(
                "kernel mass {mass:.12} differs from 1"
            )));
        }
        let mut sup: f64 = 0.0;
        let mut grad: f64 = 0.0;
        for i in 0..=4096 {
            let r = i as f64 / 4096.0;
            sup = sup.max(self.eval_radial(r).abs());
            grad = grad.max(self.grad_radial(r).abs());
        }
        if sup > 1.0 + 1e-12 {
            return Err(Error::BoundViolation(format!("sup bound {sup:.6} > 1")));
        }
        if grad > 2.0 + 1e-12 {
            return Err(Error::BoundViolation(format!(
                "gradient bound {grad:.6} > 2"
            )));
        }
        self.sup_bound = sup;
        self.grad_bound = grad;
        Ok(self)
    }

    /// phi as a function of |z| (zero outside the unit ball).
    #[inline]
    pub fn eval_radial(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            let s = 1.0 - r * r;
            self.coefficient * s * s
        }
    }

    /// |grad phi| as a function of |z|.
    #[inline]
    pub fn grad_radial(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            4.0 * self.coefficient * r * (1.0 - r * r)
        }
    }
}

/// Slab geometry: uniform columns over [x_lo, x_hi], geometric height ladder
/// from h_min to h_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub heights: Vec<f64>,
}

impl Slab {
    pub fn geometric(x_lo: f64, x_hi: f64, nx: usize, h_min: f64, h_max: f64, ny: usize) -> Result<Self> {
        if !(h_min > 0.0) {
            return Err(Error::SlabTooShallow(h_min));
        }
        if !(h_max > h_min) || nx < 2 || ny < 2 {
            return Err(Error::InvalidInput(
                "slab needs h_max > h_min > 0 and at least 2x2 nodes".into(),
            ));
        }
        let ratio = (h_max / h_min).powf(1.0 / (ny - 1) as f64);
        let mut heights: Vec<f64> = (0..ny).map(|j| h_min * ratio.powi(j as i32)).collect();
        // pin the endpoints exactly; powi drift would otherwise leak past h_max
        heights[0] = h_min;
        heights[ny - 1] = h_max;
        Ok(Slab {
            x_lo,
            x_hi,
            nx,
            heights,
        })
    }

    pub fn ny(&self) -> usize {
        self.heights.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx()
    }

    pub fn h_min(&self) -> f64 {
        self.heights[0]
    }

    pub fn h_max(&self) -> f64 {
        *self.heights.last().unwrap()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let eps = 1e-9 * (1.0 + self.x_hi.abs().max(self.x_lo.abs()));
        x >= self.x_lo - eps && x <= self.x_hi + eps && y > 0.0 && y <= self.h_max() * (1.0 + 1e-9)
    }

    /// Quadrature weight of grid node (i, j): cell width times half the
    /// neighbouring height gaps.
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let dx = self.dx();
        let wx = if i == 0 || i + 1 == self.nx { 0.5 * dx } else { dx };
        let h = &self.heights;
        let wy = match (j, h.len()) {
            (0, _) => 0.5 * (h[1] - h[0]),
            (j, n) if j + 1 == n => 0.5 * (h[n - 1] - h[n - 2]),
            (j, _) => 0.5 * (h[j + 1] - h[j - 1]),
        };
        wx * wy
    }
}

/// The averaged field: sampled values and distances on the slab grid, plus
/// the exact evaluator for arbitrary points (used on cube boundaries).
pub struct AveragedField<'a> {
    pub slab: Slab,
    pub map: &'a SurfaceMap,
    pub mollifier: &'a Mollifier,
    /// Grid values, row-major by height row, stride = value_dim.
    pub values: Vec<f64>,
    /// Distance to the target manifold per grid node (when computed).
    pub dist: Vec<f64>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    gl_nodes_fine: Vec<f64>,
    gl_weights_fine: Vec<f64>,
}

impl<'a> AveragedField<'a> {
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.slab.nx + i
    }

    pub fn value(&self, i: usize, j: usize) -> &[f64] {
        let vd = self.map.value_dim;
        let base = self.node_index(i, j) * vd;
        &self.values[base..base + vd]
    }

    /// Exact evaluation of V at (x, h) by kernel quadrature; h > 0. The sum
    /// is taken in difference form around the tail value, so regions where
    /// the map equals its tail reproduce it bitwise.
    pub fn eval(&self, x: f64, h: f64, out: &mut [f64]) {
        debug_assert!(h > 0.0);
        self.eval_with(&self.gl_nodes, &self.gl_weights, x, h, out)
    }

    /// Evaluation with the doubled rule, as an error estimate.
    pub fn eval_refined(&self, x: f64, h: f64, out: &mut [f64]) {
        self.eval_with(&self.gl_nodes_fine, &self.gl_weights_fine, x, h, out)
    }

    fn eval_with(&self, nodes: &[f64], weights: &[f64], x: f64, h: f64, out: &mut [f64]) {
        let vd = out.len();
        let tail = self.map.tail.as_ref().expect("averaged maps carry a tail");
        out.fill(0.0);
        let mut buf = [0.0f64; 4];
        for (z, w) in nodes.iter().zip(weights.iter()) {
            let phi = self.mollifier.eval_radial(z.abs());
            if phi == 0.0 {
                continue;
            }
            self.map.interp_line(x - h * z, &mut buf[..vd]);
            let c = w * phi;
            for k in 0..vd {
                out[k] += c * (buf[k] - tail[k]);
            }
        }
        for k in 0..vd {
            out[k] += tail[k];
        }
    }

    /// Distance from V(x, h) to the manifold.
    pub fn dist_at(&self, x: f64, h: f64, manifold: &EmbeddedManifold) -> f64 {
        let mut v = [0.0f64; 4];
        let vd = self.map.value_dim;
        self.eval(x, h, &mut v[..vd]);
        manifold.dist_to(&v[..vd])
    }
}

/// Build the averaged field on the slab grid. The slab window must contain
/// the map window expanded by the top height, so every kernel support the
/// grid sees is inside the declared region (the map itself extends by its
/// constant tail).
pub fn average_extend<'a>(
    map: &'a SurfaceMap,
    mollifier: &'a Mollifier,
    slab: Slab,
) -> Result<AveragedField<'a>> {
    let window = match &map.mesh {
        Mesh::Line { window, .. } => *window,
        _ => {
            return Err(Error::InvalidInput(
                "averaging extends plane maps with a line mesh".into(),
            ))
        }
    };
    if map.tail.is_none() {
        return Err(Error::TailNotConstant("averaging needs the tail".into()));
    }
    if mollifier.m != 1 {
        return Err(Error::InvalidInput(
            "slab averaging is implemented for m = 1".into(),
        ));
    }
    if !(slab.h_min() > 0.0) {
        return Err(Error::SlabTooShallow(slab.h_min()));
    }
    let cover_eps = 1e-9 * (1.0 + slab.h_max());
    if slab.x_lo > window.0 - slab.h_max() + cover_eps
        || slab.x_hi < window.1 + slab.h_max() - cover_eps
    {
        return Err(Error::InvalidInput(format!(
            "slab window [{}, {}] must contain the map window [{}, {}] expanded by h_max = {}",
            slab.x_lo,
            slab.x_hi,
            window.0,
            window.1,
            slab.h_max()
        )));
    }
    let (gl_nodes, gl_weights) = gauss_legendre(16);
    let (gl_nodes_fine, gl_weights_fine) = gauss_legendre(32);
    let mut field = AveragedField {
        slab,
        map,
        mollifier,
        values: Vec::new(),
        dist: Vec::new(),
        gl_nodes,
        gl_weights,
        gl_nodes_fine,
        gl_weights_fine,
    };
    let vd = map.value_dim;
    let nx = field.slab.nx;
    let ny = field.slab.ny();
    let values = det_sum_vec(ny, nx * vd * ny, |j, acc| {
        // each row contributes to its own block; det_sum_vec gives us a
        // deterministic parallel fill
        let h = field.slab.heights[j];
        let mut out = vec![0.0; vd];
        for i in 0..nx {
            field.eval(field.slab.x(i), h, &mut out);
            let base = (j * nx + i) * vd;
            acc[base..base + vd].copy_from_slice(&out);
        }
    });
    field.values = values;
    Ok(field)
}

/// Compute the per-node distance field dist(V, N). Out-of-tube nodes are
/// flagged (distance at or beyond the reach), not failures.
pub fn distance_field(field: &mut AveragedField<'_>, manifold: &EmbeddedManifold) {
    let nx = field.slab.nx;
    let ny = field.slab.ny();
    let vd = field.map.value_dim;
    let values = &field.values;
    let dist = det_sum_vec(ny, nx * ny, |j, acc| {
        for i in 0..nx {
            let base = (j * nx + i) * vd;
            acc[j * nx + i] = manifold.dist_to(&values[base..base + vd]);
        }
    });
    field.dist = dist;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn mollifier_m1_bounds() {
        let m = Mollifier::build(1).unwrap();
        assert!((m.sup_bound - 15.0 / 16.0).abs() < 1e-12);
        // max of |phi'| at z = 1/sqrt(3): (15/4)(1/sqrt 3)(2/3)
        let expect = 15.0 / 4.0 / 3f64.sqrt() * 2.0 / 3.0;
        assert!((m.grad_bound - expect).abs() < 1e-6, "{}", m.grad_bound);
        assert!(m.grad_bound <= 2.0);
    }

    #[test]
    fn mollifier_m2_bounds() {
        let m = Mollifier::build(2).unwrap();
        assert!((m.sup_bound - 3.0 / std::f64::consts::PI).abs() < 1e-12);
        // max of |grad phi| = 8 / (pi sqrt 3)
        let expect = 8.0 / (std::f64::consts::PI * 3f64.sqrt());
        assert!((m.grad_bound - expect).abs() < 1e-6);
        assert!(m.grad_bound <= 2.0);
    }

    #[test]
    fn scaled_profile_rejected() {
        let err = Mollifier::with_coefficient(1, 2.0 * 15.0 / 16.0);
        assert!(matches!(err, Err(Error::BoundViolation(_))));
    }

    #[test]
    fn constant_map_extends_constantly() {
        let map = fixtures::constant_plane_map(128, (0.0, 2.0), 0.7);
        let moll = Mollifier::build(1).unwrap();
        let slab = Slab::geometric(-2.0, 4.0, 64, 0.01, 2.0, 16).unwrap();
        let field = average_extend(&map, &moll, slab).unwrap();
        let expect = [0.7f64.cos(), 0.7f64.sin()];
        for j in 0..field.slab.ny() {
            for i in 0..field.slab.nx {
                let v = field.value(i, j);
                assert!((v[0] - expect[0]).abs() < 1e-12);
                assert!((v[1] - expect[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_scalar_map_reproduced() {
        // odd kernel moment vanishes, so V(x, h) = x wherever u is linear
        // on the whole kernel support
        let map = fixtures::scalar_linear_plane_map(512, (-4.0, 4.0));
        let moll = Mollifier::build(1).unwrap();
        let slab = Slab::geometric(-8.0, 8.0, 32, 0.01, 0.5, 8).unwrap();
        let field = average_extend(&map, &moll, slab).unwrap();
        let mut out = [0.0];
        field.eval(0.4, 0.25, &mut out);
        assert!((out[0] - 0.4).abs() < 1e-6, "V = {}", out[0]);
    }

    #[test]
    fn sup_contraction() {
        let map = fixtures::wrap_plane_map(512, (0.0, 2.0), 0.5);
        let moll = Mollifier::build(1).unwrap();
        let slab = Slab::geometric(-8.0, 10.0, 128, 0.005, 8.0, 32).unwrap();
        let field = average_extend(&map, &moll, slab).unwrap();
        for j in 0..field.slab.ny() {
            for i in 0..field.slab.nx {
                let v = field.value(i, j);
                assert!(v[0].hypot(v[1]) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_floor_rejected() {
        assert!(matches!(
            Slab::geometric(0.0, 1.0, 8, 0.0, 1.0, 8),
            Err(Error::SlabTooShallow(_))
        ));
    }

    #[test]
    fn antipodal_steps_pull_field_off_manifold() {
        let manifold = fixtures::unit_circle();
        let map = fixtures::antipodal_step_plane_map(1024, (0.0, 2.0), 0.25);
        let moll = Mollifier::build(1).unwrap();
        let slab = Slab::geometric(-8.0, 10.0, 256, 0.01, 8.0, 48).unwrap();
        let mut field = average_extend(&map, &moll, slab).unwrap();
        distance_field(&mut field, &manifold);
        let max_dist = field.dist.iter().cloned().fold(0.0f64, f64::max);
        // centre of the circle is at distance 1; the field must get well
        // past the half-reach threshold reach/4 = 0.25
        assert!(max_dist > 0.25, "max dist = {max_dist}");
    }
}
