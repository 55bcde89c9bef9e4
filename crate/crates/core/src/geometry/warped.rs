//! Warped cylinders realized as surfaces of revolution.
//!
//! The warped metric `dt^2 + f(t)^2 dtheta^2` is realized isometrically in
//! R^3 as `(A(t), f(t) cos theta, f(t) sin theta)` with `A' = sqrt(1 - f'^2)`,
//! which requires `sup |f'| < 1`. The profile integral `A` has no closed form
//! in general and is evaluated by cumulative Gauss-Legendre quadrature on a
//! cached grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Warping function with derivative oracles up to order 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WarpProfile {
    /// f(t) = value
    Constant { value: f64 },
    /// f(t) = base + amplitude * sin(frequency * t)
    SinOffset {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// f(t) = exp(rate * t); never embeddable, kept for admissibility tests.
    Exponential { rate: f64 },
}

impl WarpProfile {
    /// Evaluate the k-th derivative of f at t, for k <= 3.
    pub fn eval(&self, t: f64, order: u32) -> f64 {
        match *self {
            WarpProfile::Constant { value } => {
                if order == 0 {
                    value
                } else {
                    0.0
                }
            }
            WarpProfile::SinOffset {
                base,
                amplitude,
                frequency,
            } => {
                let w = frequency;
                let phase = w * t;
                let scale = amplitude * w.powi(order as i32);
                match order % 4 {
                    0 => {
                        if order == 0 {
                            base + amplitude * phase.sin()
                        } else {
                            scale * phase.sin()
                        }
                    }
                    1 => scale * phase.cos(),
                    2 => -scale * phase.sin(),
                    _ => -scale * phase.cos(),
                }
            }
            WarpProfile::Exponential { rate } => rate.powi(order as i32) * (rate * t).exp(),
        }
    }

    /// Sup of |f^(k)| over [-window, window], by dense sampling.
    pub fn sup_abs(&self, order: u32, window: f64, samples: usize) -> f64 {
        let n = samples.max(2);
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let t = -window + 2.0 * window * (i as f64) / ((n - 1) as f64);
            sup = sup.max(self.eval(t, order).abs());
        }
        sup
    }

    /// Inf of f over [-window, window].
    pub fn inf(&self, window: f64, samples: usize) -> f64 {
        let n = samples.max(2);
        let mut inf = f64::INFINITY;
        for i in 0..n {
            let t = -window + 2.0 * window * (i as f64) / ((n - 1) as f64);
            inf = inf.min(self.eval(t, 0));
        }
        inf
    }
}

/// Cached chart data for a warped cylinder on the truncation window.
#[derive(Debug, Clone)]
pub struct WarpedChart {
    pub profile: WarpProfile,
    pub window: f64,
    /// Grid over [-window, window] with cumulative axial coordinate A(t).
    grid_t: Vec<f64>,
    grid_a: Vec<f64>,
    gl8: (Vec<f64>, Vec<f64>),
}

impl WarpedChart {
    pub fn new(profile: WarpProfile, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return Err(Error::InvalidInput(format!(
                "truncation window must be positive, got {window}"
            )));
        }
        let sup_fp = profile.sup_abs(1, window, 4096);
        if sup_fp >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "warping slope sup|f'| = {sup_fp:.4} >= 1: not embeddable as a surface of revolution"
            )));
        }
        let inf_f = profile.inf(window, 4096);
        if !(inf_f > 0.0) {
            return Err(Error::InvalidInput(format!(
                "warping function must be positive on the window (inf = {inf_f:.4})"
            )));
        }
        let n = 4096;
        let gl8 = gauss_legendre(8);
        let mut grid_t = Vec::with_capacity(n + 1);
        let mut grid_a = Vec::with_capacity(n + 1);
        let dt = 2.0 * window / n as f64;
        let mut a = 0.0;
        grid_t.push(-window);
        grid_a.push(0.0);
        for i in 0..n {
            let lo = -window + i as f64 * dt;
            a += gl_integrate(&gl8, lo, lo + dt, |t| axial_speed(&profile, t));
            grid_t.push(lo + dt);
            grid_a.push(a);
        }
        Ok(WarpedChart {
            profile,
            window,
            grid_t,
            grid_a,
            gl8,
        })
    }

    pub fn f(&self, t: f64) -> f64 {
        self.profile.eval(t, 0)
    }

    pub fn fp(&self, t: f64) -> f64 {
        self.profile.eval(t, 1)
    }

    /// Axial coordinate A(t) = integral of sqrt(1 - f'^2) from -window.
    pub fn axial(&self, t: f64) -> f64 {
        let w = self.window;
        let t = t.clamp(-w, w);
        let dt = 2.0 * w / (self.grid_t.len() - 1) as f64;
        let idx = (((t + w) / dt) as usize).min(self.grid_t.len() - 2);
        let t0 = self.grid_t[idx];
        self.grid_a[idx] + gl_integrate(&self.gl8, t0, t, |s| axial_speed(&self.profile, s))
    }

    pub fn axial_speed(&self, t: f64) -> f64 {
        axial_speed(&self.profile, t)
    }

    /// Chart point (A(t), f cos theta, f sin theta).
    pub fn point(&self, t: f64, theta: f64) -> [f64; 3] {
        let f = self.f(t);
        [self.axial(t), f * theta.cos(), f * theta.sin()]
    }

    /// Orthonormal tangent frame at (t, theta).
    pub fn frame(&self, t: f64, theta: f64) -> [[f64; 3]; 2] {
        let (c, s) = (theta.cos(), theta.sin());
        let fp = self.fp(t);
        let ap = self.axial_speed(t);
        [[ap, fp * c, fp * s], [0.0, -s, c]]
    }

    /// Distance from an ambient point to the surface, together with the
    /// minimizing parameter t. The angular parameter is solved exactly
    /// (theta = atan2 over the radial block), reducing to a 1-d problem.
    pub fn distance(&self, z: &[f64]) -> (f64, f64) {
        let rho = z[1].hypot(z[2]);
        // coarse scan then local Newton refinement on
        //   g(t) = (A(t) - z0)^2 + (f(t) - rho)^2
        let n = 512;
        let w = self.window;
        let mut best_t = -w;
        let mut best_g = f64::INFINITY;
        for i in 0..=n {
            let t = -w + 2.0 * w * i as f64 / n as f64;
            let g = self.g(t, z[0], rho);
            if g < best_g {
                best_g = g;
                best_t = t;
            }
        }
        let t = self.refine(best_t, z[0], rho).unwrap_or(best_t);
        (self.g(t, z[0], rho).sqrt(), t)
    }

    fn g(&self, t: f64, z0: f64, rho: f64) -> f64 {
        let da = self.axial(t) - z0;
        let df = self.f(t) - rho;
        da * da + df * df
    }

    /// Newton refinement of the squared-distance minimizer; falls back to
    /// golden-section if the curvature is unfavourable.
    fn refine(&self, t0: f64, z0: f64, rho: f64) -> Option<f64> {
        let w = self.window;
        let mut t = t0;
        for _ in 0..60 {
            let a = self.axial(t);
            let ap = self.axial_speed(t);
            let f = self.f(t);
            let fp = self.fp(t);
            let fpp = self.profile.eval(t, 2);
            // a'' = -f' f'' / a'
            let app = if ap.abs() > 1e-12 { -fp * fpp / ap } else { 0.0 };
            let gp = 2.0 * ((a - z0) * ap + (f - rho) * fp);
            let gpp = 2.0 * (ap * ap + (a - z0) * app + fp * fp + (f - rho) * fpp);
            if gpp.abs() < 1e-14 {
                break;
            }
            let step = gp / gpp;
            let tn = (t - step).clamp(-w, w);
            if (tn - t).abs() < 1e-13 {
                return Some(tn);
            }
            t = tn;
        }
        Some(t)
    }

    /// Project an ambient point; returns the surface point and the distance.
    /// Fails with `NoConvergence` when the reduced problem is degenerate
    /// (point on the axis, where every angle is equally near).
    pub fn project(&self, z: &[f64], tol: f64) -> Result<([f64; 3], f64)> {
        let rho = z[1].hypot(z[2]);
        if rho < 1e-12 {
            return Err(Error::NoConvergence(
                "axis point: angular parameter is not determined".into(),
            ));
        }
        let (dist, t) = self.distance(z);
        let theta = z[2].atan2(z[1]);
        let p = self.point(t, theta);
        let check =
            ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2) + (p[2] - z[2]).powi(2)).sqrt();
        if (check - dist).abs() > tol.max(1e-9) * (1.0 + dist) {
            return Err(Error::NoConvergence(format!(
                "projection residual {:.3e} vs distance {:.3e}",
                check, dist
            )));
        }
        Ok((p, dist))
    }
}

fn axial_speed(profile: &WarpProfile, t: f64) -> f64 {
    let fp = profile.eval(t, 1);
    (1.0 - fp * fp).max(0.0).sqrt()
}

fn gl_integrate(gl: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut s = 0.0;
    for (x, w) in gl.0.iter().zip(gl.1.iter()) {
        s += w * f(c + h * x);
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_is_a_cylinder() {
        let chart = WarpedChart::new(WarpProfile::Constant { value: 2.0 }, 5.0).unwrap();
        // f' = 0 so A(t) = t + window
        assert!((chart.axial(1.25) - 6.25).abs() < 1e-12);
        let p = chart.point(0.0, std::f64::consts::FRAC_PI_2);
        assert!((p[1]).abs() < 1e-12);
        assert!((p[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_speed_profile_curve() {
        let profile = WarpProfile::SinOffset {
            base: 2.0,
            amplitude: 0.25,
            frequency: 1.0,
        };
        let chart = WarpedChart::new(profile, 6.0).unwrap();
        // (A, f) is unit-speed: A'^2 + f'^2 = 1
        for i in 0..20 {
            let t = -5.5 + i as f64 * 0.55;
            let ap = chart.axial_speed(t);
            let fp = chart.fp(t);
            assert!((ap * ap + fp * fp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steep_profile_rejected() {
        let profile = WarpProfile::SinOffset {
            base: 2.0,
            amplitude: 2.0,
            frequency: 1.0,
        };
        assert!(WarpedChart::new(profile, 5.0).is_err());
    }

    #[test]
    fn projection_recovers_surface_points() {
        let profile = WarpProfile::SinOffset {
            base: 2.0,
            amplitude: 0.25,
            frequency: 1.0,
        };
        let chart = WarpedChart::new(profile, 6.0).unwrap();
        let p = chart.point(1.3, 0.7);
        let (q, dist) = chart.project(&p, 1e-10).unwrap();
        assert!(dist < 1e-8, "dist = {dist}");
        for k in 0..3 {
            assert!((q[k] - p[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn axis_point_has_no_projection() {
        let chart = WarpedChart::new(WarpProfile::Constant { value: 1.0 }, 4.0).unwrap();
        assert!(chart.project(&[0.0, 0.0, 0.0], 1e-10).is_err());
    }
}
