//! Energy oracles: the identity-map closed form, truncation by reduction to
//! a single integral, gap-potential refinement, and the quadrature-exact
//! inequality chains.

use tubex_core::energy::{gagliardo_energy, pair_quantities};
use tubex_core::fixtures;
use tubex_core::quadrature::adaptive_simpson;

/// Reduced kernel of the circle identity map: by rotation invariance the
/// double integral collapses to 2 pi times a single integral of
/// min(t, 2pi - t)^2 / (2 sin(t/2))^2 over t in [0, 2pi).
fn identity_reduced_kernel(t: f64) -> f64 {
    let arc = t.min(2.0 * std::f64::consts::PI - t);
    let chord = 2.0 * (0.5 * t).sin();
    (arc / chord).powi(2)
}

#[test]
fn identity_energy_matches_closed_form() {
    // independent oracle first: adaptive quadrature of the reduced integral
    let oracle = 2.0 * std::f64::consts::PI
        * adaptive_simpson(identity_reduced_kernel, 1e-9, 2.0 * std::f64::consts::PI - 1e-9, 1e-10);
    let closed_form = 8.0 * std::f64::consts::PI.powi(2) * 2f64.ln();
    assert!(
        (oracle - closed_form).abs() / closed_form < 1e-6,
        "oracle {oracle} vs closed form {closed_form}"
    );

    let m = fixtures::unit_circle();
    let u = fixtures::identity_circle_map(1024);
    let e = gagliardo_energy(&u, Some(&m)).unwrap();
    assert!(!e.divergent);
    let rel = (e.value - closed_form).abs() / closed_form;
    assert!(rel < 5e-3, "relative error {rel}, value {}", e.value);
}

#[test]
fn truncated_energy_restricted_integral() {
    // pairs with geodesic value distance >= pi/2 correspond to arc
    // parameters t in [pi/2, 3 pi/2]
    let delta = std::f64::consts::FRAC_PI_2;
    let oracle = 2.0 * std::f64::consts::PI
        * adaptive_simpson(
            identity_reduced_kernel,
            std::f64::consts::FRAC_PI_2,
            1.5 * std::f64::consts::PI,
            1e-10,
        );
    let m = fixtures::unit_circle();
    let u = fixtures::identity_circle_map(1024);
    let q = pair_quantities(&u, Some(&m), &[delta]).unwrap();
    let rel = (q.truncated[0] - oracle).abs() / oracle;
    assert!(rel < 0.01, "relative error {rel}: {} vs {}", q.truncated[0], oracle);
}

#[test]
fn gap_at_diameter_vanishes_under_refinement() {
    // d >= pi only at antipodal parameters: a measure-zero set, so the
    // discrete gap must shrink with the mesh
    let m = fixtures::unit_circle();
    let delta = std::f64::consts::PI * (1.0 - 1e-12);
    let gap_coarse = pair_quantities(&fixtures::identity_circle_map(1024), Some(&m), &[delta])
        .unwrap()
        .gap[0];
    let gap_fine = pair_quantities(&fixtures::identity_circle_map(2048), Some(&m), &[delta])
        .unwrap()
        .gap[0];
    assert!(gap_coarse > 0.0);
    assert!(
        gap_fine < 0.6 * gap_coarse,
        "gap {gap_coarse} -> {gap_fine} did not shrink"
    );
}

#[test]
fn inequality_chains_on_random_maps() {
    let m = fixtures::unit_circle();
    let deltas = [0.05, 0.125, 0.3, 0.7, 1.5];
    let k = std::f64::consts::FRAC_PI_2; // comparability constant of the circle
    let l = 1.0;
    let factor = (2.0 * k * l).powi(2);
    for seed in 0..20 {
        let u = fixtures::piecewise_smooth_circle_map(512, seed);
        let q = pair_quantities(&u, Some(&m), &deltas).unwrap();
        let e = q.gagliardo();
        for (i, &d) in deltas.iter().enumerate() {
            let trunc = q.truncated[i];
            let gap = q.gap[i];
            assert!(gap <= trunc / d.powi(2) + 1e-12, "seed {seed}, delta {d}");
            assert!(trunc <= e + 1e-12, "seed {seed}, delta {d}");
            assert!(
                trunc <= factor * gap + 1e-12,
                "seed {seed}, delta {d}: {trunc} > {factor} * {gap}"
            );
        }
        // monotone in delta
        for w in q.truncated.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for w in q.gap.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}

#[test]
fn flat_patch_two_sided_sandwich() {
    // maps into a convex flat patch have K = 1 and geodesic = chordal
    let delta = 0.1;
    use tubex_core::surface::{Domain, Mesh, SurfaceMap};
    let patch = fixtures::flat_patch(1.0);
    let k = patch.comparability(1.5, 256).unwrap();
    assert_eq!(k.k, 1.0);
    for seed in 0..20 {
        let n = 256;
        // smooth values inside the patch
        let mut values = Vec::with_capacity(2 * n);
        for i in 0..n {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            let a = 0.6 * ((t + seed as f64).sin());
            let b = 0.6 * ((2.0 * t + 0.3 * seed as f64).cos());
            values.push(a);
            values.push(b);
        }
        let u = SurfaceMap::new(
            Domain::SphereS1,
            Mesh::Circle { n },
            values,
            2,
            Some(1.0),
            None,
        )
        .unwrap();
        let q = pair_quantities(&u, Some(&patch), &[delta]).unwrap();
        let factor = (2.0 * k.k * 1.0).powi(2);
        assert!(q.gap[0] <= q.truncated[0] / delta.powi(2) + 1e-12);
        assert!(q.truncated[0] <= factor * q.gap[0] + 1e-12);
    }
}

#[test]
fn mesh_convergence_for_smooth_maps() {
    let m = fixtures::unit_circle();
    let coarse = gagliardo_energy(&fixtures::identity_circle_map(512), Some(&m))
        .unwrap()
        .value;
    let fine = gagliardo_energy(&fixtures::identity_circle_map(1024), Some(&m))
        .unwrap()
        .value;
    assert!((coarse - fine).abs() / fine < 0.01, "{coarse} vs {fine}");
}

#[test]
fn symmetry_under_deterministic_reduction() {
    // repeated evaluation is bitwise identical
    let m = fixtures::unit_circle();
    let u = fixtures::fourier_circle_map(512, 5, 0.8);
    let a = pair_quantities(&u, Some(&m), &[0.25]).unwrap();
    let b = pair_quantities(&u, Some(&m), &[0.25]).unwrap();
    assert_eq!(a.gagliardo().to_bits(), b.gagliardo().to_bits());
    assert_eq!(a.truncated[0].to_bits(), b.truncated[0].to_bits());
    assert_eq!(a.gap[0].to_bits(), b.gap[0].to_bits());
}

#[test]
fn sphere_domain_smoke() {
    // m = 2 support: constant maps vanish, a small cap map has finite
    // energy that converges under refinement
    use tubex_core::surface::{Domain, Mesh, SurfaceMap};
    let target = tubex_core::geometry::EmbeddedManifold::new(
        tubex_core::geometry::ManifoldKind::Sphere { radius: 1.0 },
        None,
        tubex_core::config::Tolerances::default(),
    )
    .unwrap();
    let cap_map = |nlat: usize, nlon: usize, amp: f64| {
        let mut values = Vec::new();
        for i in 0..nlat {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / nlat as f64;
            for j in 0..nlon {
                let ph = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nlon as f64;
                // tilt within a small cap around the north pole
                let a = amp * th.sin() * ph.cos();
                let b = amp * th.sin() * ph.sin();
                let c = (1.0f64 - a * a - b * b).sqrt();
                values.extend_from_slice(&[a, b, c]);
            }
        }
        SurfaceMap::new(
            Domain::SphereS2,
            Mesh::LatLon { nlat, nlon },
            values,
            3,
            Some(1.0),
            None,
        )
        .unwrap()
    };
    let constant = cap_map(24, 48, 0.0);
    let e0 = gagliardo_energy(&constant, Some(&target)).unwrap();
    assert_eq!(e0.value, 0.0);

    let coarse = gagliardo_energy(&cap_map(24, 48, 0.2), Some(&target)).unwrap();
    let fine = gagliardo_energy(&cap_map(48, 96, 0.2), Some(&target)).unwrap();
    assert!(coarse.value > 0.0);
    assert!(!fine.divergent);
    assert!(
        (coarse.value - fine.value).abs() / fine.value < 0.08,
        "m=2 refinement drift: {} vs {}",
        coarse.value,
        fine.value
    );
}

#[test]
fn plane_tail_integral_consistency() {
    // halving the window of a compactly supported map while keeping the
    // tail must not change the energy much: the analytic tail terms take
    // over what the truncated node range loses
    let m = fixtures::unit_circle();
    let wide = fixtures::bump_plane_map(1024, (-4.0, 4.0), 0.5);
    let narrow = fixtures::bump_plane_map(512, (-2.0, 2.0), 0.5);
    let ew = gagliardo_energy(&wide, Some(&m)).unwrap().value;
    let en = gagliardo_energy(&narrow, Some(&m)).unwrap().value;
    assert!(
        (ew - en).abs() / ew < 0.05,
        "window truncation changed the energy: {ew} vs {en}"
    );
}
