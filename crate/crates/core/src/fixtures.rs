//! Deterministic map and manifold families used by tests, the acceptance
//! suite, and the benchmarks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::Tolerances;
use crate::geometry::{EmbeddedManifold, ManifoldKind, WarpProfile};
use crate::surface::{theta_node, uniform_line_mesh, Domain, Mesh, SurfaceMap};

pub fn unit_circle() -> EmbeddedManifold {
    EmbeddedManifold::new(ManifoldKind::Circle { radius: 1.0 }, None, Tolerances::default())
        .expect("unit circle")
}

pub fn flat_patch(halfwidth: f64) -> EmbeddedManifold {
    EmbeddedManifold::new(
        ManifoldKind::FlatPatch { halfwidth },
        None,
        Tolerances::default(),
    )
    .expect("flat patch")
}

pub fn warped_example() -> EmbeddedManifold {
    EmbeddedManifold::new(
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
    .expect("warped cylinder")
}

fn circle_values(n: usize, angle: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(2 * n);
    for i in 0..n {
        let th = angle(theta_node(i, n));
        values.push(th.cos());
        values.push(th.sin());
    }
    values
}

/// u(theta) = theta: the identity of the unit circle.
pub fn identity_circle_map(n: usize) -> SurfaceMap {
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| t),
        2,
        Some(1.0),
        None,
    )
    .expect("identity map")
}

pub fn constant_circle_map(n: usize, theta0: f64) -> SurfaceMap {
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |_| theta0),
        2,
        Some(1.0),
        None,
    )
    .expect("constant map")
}

/// Image inside a geodesic cap of radius `amplitude` around angle 0.
pub fn small_oscillation_map(n: usize, amplitude: f64) -> SurfaceMap {
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| 0.5 * amplitude * (t.sin() + 0.3 * (2.0 * t).cos())),
        2,
        Some(1.0),
        None,
    )
    .expect("small oscillation map")
}

/// Two-valued map jumping between antipodal points at theta = 0 and pi.
/// Its pair sum is genuinely divergent under refinement.
pub fn step_circle_map(n: usize) -> SurfaceMap {
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| {
            if t < std::f64::consts::PI {
                0.0
            } else {
                std::f64::consts::PI
            }
        }),
        2,
        Some(1.0),
        None,
    )
    .expect("step map")
}

/// Step-like map with transitions resolved over `width_cells` mesh cells;
/// finite energy at the mesh resolution, unlike the hard step.
pub fn smoothed_step_circle_map(n: usize, width_cells: usize, target_angle: f64) -> SurfaceMap {
    let w = width_cells as f64 * 2.0 * std::f64::consts::PI / n as f64;
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| {
            let up = smoothstep((t - 1.0) / w);
            let down = smoothstep((t - (1.0 + std::f64::consts::PI)) / w);
            target_angle * (up - down)
        }),
        2,
        Some(1.0),
        None,
    )
    .expect("smoothed step map")
}

/// Random band-limited circle map: theta(t) = sum of a few Fourier modes.
pub fn fourier_circle_map(n: usize, seed: u64, amplitude: f64) -> SurfaceMap {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> = (1..=5)
        .map(|k| {
            (
                k as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| {
            let mut th = 0.0;
            for &(k, a, b) in &modes {
                th += amplitude / k * (a * (k * t).cos() + b * (k * t).sin());
            }
            th
        }),
        2,
        Some(1.0),
        None,
    )
    .expect("fourier map")
}

/// Random piecewise-smooth circle map: band-limited phase plus up to two
/// steep but mesh-resolved transitions.
pub fn piecewise_smooth_circle_map(n: usize, seed: u64) -> SurfaceMap {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let modes: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            (
                k as f64,
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            )
        })
        .collect();
    let njumps = rng.gen_range(0..=2);
    let jumps: Vec<(f64, f64)> = (0..njumps)
        .map(|_| {
            (
                rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                rng.gen_range(-1.2..1.2),
            )
        })
        .collect();
    let w = 24.0 * 2.0 * std::f64::consts::PI / n as f64;
    SurfaceMap::new(
        Domain::SphereS1,
        Mesh::Circle { n },
        circle_values(n, |t| {
            let mut th = 0.0;
            for &(k, a, b) in &modes {
                th += 0.5 / k * (a * (k * t).cos() + b * (k * t).sin());
            }
            for &(pos, height) in &jumps {
                // rise and fall so the phase is periodic
                th += height
                    * (smoothstep((t - pos) / w)
                        - smoothstep((t - pos - std::f64::consts::PI) / w));
            }
            th
        }),
        2,
        Some(1.0),
        None,
    )
    .expect("piecewise smooth map")
}

/// Plane map into the unit circle with tail value (1, 0): the phase wraps
/// once (degree 1) across a transition of width `wrap_width` centred in the
/// window.
pub fn wrap_plane_map(n: usize, window: (f64, f64), wrap_width: f64) -> SurfaceMap {
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let centre = 0.5 * (window.0 + window.1);
    let nodes = match &mesh {
        Mesh::Line { nodes, .. } => nodes.clone(),
        _ => unreachable!(),
    };
    let mut values = Vec::with_capacity(2 * n);
    for &x in &nodes {
        let th = 2.0 * std::f64::consts::PI * smoothstep((x - centre) / wrap_width);
        values.push(th.cos());
        values.push(th.sin());
    }
    SurfaceMap::new(
        Domain::PlaneR1Tail,
        mesh,
        values,
        2,
        Some(1.0),
        Some(vec![1.0, 0.0]),
    )
    .expect("wrap map")
}

/// Constant plane map.
pub fn constant_plane_map(n: usize, window: (f64, f64), theta0: f64) -> SurfaceMap {
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let v = vec![theta0.cos(), theta0.sin()];
    let mut values = Vec::with_capacity(2 * n);
    for _ in 0..n {
        values.extend_from_slice(&v);
    }
    SurfaceMap::new(Domain::PlaneR1Tail, mesh, values, 2, Some(1.0), Some(v)).expect("constant map")
}

/// Plane map with a small phase bump (image in a cap), tail (1, 0).
pub fn bump_plane_map(n: usize, window: (f64, f64), amplitude: f64) -> SurfaceMap {
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let centre = 0.5 * (window.0 + window.1);
    let width = 0.25 * (window.1 - window.0);
    let nodes = match &mesh {
        Mesh::Line { nodes, .. } => nodes.clone(),
        _ => unreachable!(),
    };
    let mut values = Vec::with_capacity(2 * n);
    for &x in &nodes {
        let s = ((x - centre) / width).powi(2);
        let th = amplitude * (-s).exp();
        values.push(th.cos());
        values.push(th.sin());
    }
    SurfaceMap::new(
        Domain::PlaneR1Tail,
        mesh,
        values,
        2,
        Some(1.0),
        Some(vec![1.0, 0.0]),
    )
    .expect("bump map")
}

/// Plane map with two antipodal-value steps at the mesh scale; its averaged
/// field passes through the circle's centre between the jumps.
pub fn antipodal_step_plane_map(n: usize, window: (f64, f64), spacing: f64) -> SurfaceMap {
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let centre = 0.5 * (window.0 + window.1);
    let nodes = match &mesh {
        Mesh::Line { nodes, .. } => nodes.clone(),
        _ => unreachable!(),
    };
    let mut values = Vec::with_capacity(2 * n);
    for &x in &nodes {
        let inside = (x - centre).abs() < 0.5 * spacing;
        let th = if inside { std::f64::consts::PI } else { 0.0 };
        values.push(th.cos());
        values.push(th.sin());
    }
    SurfaceMap::new(
        Domain::PlaneR1Tail,
        mesh,
        values,
        2,
        Some(1.0),
        Some(vec![1.0, 0.0]),
    )
    .expect("antipodal step map")
}

/// Scalar test map u(x) = x, used to check the vanishing odd moment of the
/// averaging kernel. Not a manifold-valued map.
pub fn scalar_linear_plane_map(n: usize, window: (f64, f64)) -> SurfaceMap {
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let nodes = match &mesh {
        Mesh::Line { nodes, .. } => nodes.clone(),
        _ => unreachable!(),
    };
    SurfaceMap::new(Domain::PlaneR1Tail, mesh, nodes, 1, None, Some(vec![0.0]))
        .expect("scalar linear map")
}

/// Random smooth plane map into the unit circle with tail (1, 0).
pub fn fourier_plane_map(n: usize, window: (f64, f64), seed: u64, amplitude: f64) -> SurfaceMap {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0xd134_2543_de82_ef95));
    let mesh = uniform_line_mesh(n, window.0, window.1);
    let nodes = match &mesh {
        Mesh::Line { nodes, .. } => nodes.clone(),
        _ => unreachable!(),
    };
    let width = window.1 - window.0;
    let modes: Vec<(f64, f64)> = (1..=4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..3.0))).collect();
    let mut values = Vec::with_capacity(2 * n);
    for &x in &nodes {
        let s = (x - window.0) / width;
        // vanish at both window edges so the tail joins continuously
        let envelope = (std::f64::consts::PI * s).sin().powi(2);
        let mut th = 0.0;
        for &(a, k) in &modes {
            th += a * (k * std::f64::consts::PI * s).sin();
        }
        th *= amplitude * envelope;
        values.push(th.cos());
        values.push(th.sin());
    }
    SurfaceMap::new(
        Domain::PlaneR1Tail,
        mesh,
        values,
        2,
        Some(1.0),
        Some(vec![1.0, 0.0]),
    )
    .expect("fourier plane map")
}

/// Smoothstep: 0 below -1/2, 1 above 1/2, sine-eased in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= -0.5 {
        0.0
    } else if t >= 0.5 {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * t).sin())
    }
}
