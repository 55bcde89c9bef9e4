//! Assembly of the singular extension.
//!
//! The extension reprojects the averaged field wherever it stays inside the
//! half-reach tube (the good region) and fills each bad cube by homogeneous
//! extension of its boundary trace from the barycentre, in the sup-norm
//! gauge. Bad cubes are processed coarse to fine so that shared faces are
//! already carrying values when a finer cube needs them. Barycentres of
//! non-removable bad cubes (boundary trace oscillation at least the
//! half-reach) are the singular points.

pub mod distribution;
pub mod verify;

use serde::{Deserialize, Serialize};

use crate::averaging::{average_extend, distance_field, AveragedField, Mollifier, Slab};
use crate::config::Constants;
use crate::cubes::{
    classify, select_lambda, ClassifyParams, Cube, CubeClassification, CubeLabel, LambdaChoice,
    LambdaMode,
};
use crate::energy::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::EmbeddedManifold;
use crate::surface::{Mesh, SurfaceMap};

pub use distribution::{gradient_norms, DistributionReport};
pub use verify::{fit_estimate, verify_estimate, EstimateFit, EstimateVerification, MapStats};

/// Where a grid value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reprojected,
    Homogeneous,
}

/// The assembled extension on the slab grid.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub slab: Slab,
    pub value_dim: usize,
    /// Row-major by height row, stride = value_dim.
    pub values: Vec<f64>,
    pub provenance: Vec<Provenance>,
    /// Barycentres of non-removable bad cubes.
    pub singular_points: Vec<(f64, f64)>,
    /// Bad cubes whose boundary trace oscillation stayed below the
    /// half-reach; their barycentre singularity is removable.
    pub removable_count: usize,
    /// Boundary trace samples resolved by walking to a neighbouring
    /// resolved sample (faces shared between two bad cubes).
    pub fallback_trace_points: usize,
}

impl ExtensionField {
    pub fn value(&self, i: usize, j: usize) -> &[f64] {
        let base = (j * self.slab.nx + i) * self.value_dim;
        &self.values[base..base + self.value_dim]
    }
}

/// Assembly configuration; all lengths are relative to the map window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionConfig {
    pub constants: Constants,
    pub mode: LambdaMode,
    /// Grid columns across the slab.
    pub nx: usize,
    /// Grid rows (geometric height ladder).
    pub ny: usize,
    /// Floor height; default 2^-9 times the window width.
    pub h_min: Option<f64>,
    /// Slab top as a multiple of the window width.
    pub h_max_factor: f64,
    pub tau_samples: usize,
    pub h_samples: usize,
    /// Number of distribution thresholds reported.
    pub quantile_points: usize,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig {
            constants: Constants::default(),
            mode: LambdaMode::General,
            nx: 1024,
            ny: 64,
            h_min: None,
            h_max_factor: 4.0,
            tau_samples: 8,
            h_samples: 8,
            quantile_points: 256,
        }
    }
}

/// Summary of one assembly run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub lambda: LambdaChoice,
    pub tau: f64,
    pub h_offset: f64,
    pub bad_count: usize,
    pub counting_integral: f64,
    /// Good cubes flipped to bad by the interior tube check.
    pub reclassified: usize,
    pub singular_count: usize,
    pub removable_count: usize,
    pub fallback_trace_points: usize,
    pub trace_l1: f64,
    pub trace_l1_rel: f64,
    pub energy: EnergyReport,
    pub comparability_k: Option<f64>,
    pub half_reach: f64,
    pub window: (f64, f64),
}

pub struct AssemblyOutput {
    pub field: ExtensionField,
    pub distribution: DistributionReport,
    pub classification: CubeClassification,
    pub report: AssemblyReport,
}

/// Run the full pipeline on a plane map: averaging, scale selection,
/// classification at the minimizing (tau, offset), reprojection,
/// homogeneous extension, and the gradient distribution.
pub fn assemble(
    map: &SurfaceMap,
    manifold: &EmbeddedManifold,
    cfg: &ExtensionConfig,
) -> Result<AssemblyOutput> {
    cfg.constants.validate()?;
    if map.m() != 1 {
        return Err(Error::InvalidInput(
            "the extension pipeline is implemented for one-dimensional boundaries".into(),
        ));
    }
    let window = match &map.mesh {
        Mesh::Line { window, .. } => *window,
        _ => {
            return Err(Error::InvalidInput(
                "the extension pipeline takes plane maps; transport sphere maps first".into(),
            ))
        }
    };
    map.validate_on_manifold(manifold)?;
    let width = window.1 - window.0;
    let half_reach = manifold.half_reach();
    if !(half_reach > 0.0) {
        return Err(Error::InvalidInput(
            "target must have positive reach".into(),
        ));
    }
    let delta = if half_reach.is_finite() {
        0.5 * cfg.constants.eta * half_reach
    } else {
        f64::INFINITY
    };

    let energy = energy_report(map, Some(manifold), delta)?;
    if energy.divergent {
        return Err(Error::NonFiniteEnergy);
    }

    let comparability = match cfg.mode {
        LambdaMode::BoundedMap => {
            let l = map.l_bound.ok_or(Error::MissingBound)?;
            Some(manifold.comparability(l, 1024)?)
        }
        LambdaMode::General => None,
    };
    let lambda = select_lambda(
        cfg.mode,
        map.m(),
        energy.gagliardo,
        energy.gap_potential,
        cfg.constants.c1,
        comparability.as_ref().map(|c| c.k),
        map.l_bound,
    )?;

    let h_min = cfg.h_min.unwrap_or(width / 512.0);
    let h_max = cfg.h_max_factor * width;
    let slab = Slab::geometric(
        window.0 - 1.05 * h_max,
        window.1 + 1.05 * h_max,
        cfg.nx,
        h_min,
        h_max,
        cfg.ny,
    )?;
    let mollifier = Mollifier::build(1)?;
    let mut field = average_extend(map, &mollifier, slab)?;
    distance_field(&mut field, manifold);

    // scales below four map cells carry no information about u; the slab
    // grid does not constrain this because cube boundaries are evaluated by
    // exact kernel quadrature, not grid interpolation
    let min_spacing = match &map.mesh {
        Mesh::Line { nodes, .. } => nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min),
        _ => unreachable!(),
    };
    let edge_min = 4.0 * min_spacing;
    let params = ClassifyParams {
        lambda: lambda.lambda,
        tau_samples: cfg.tau_samples,
        h_samples: cfg.h_samples,
        threshold: 0.5 * half_reach,
        safety: cfg.constants.bad_safety,
        edge_min,
        // the constant tail defines the field on the whole line
        coverage: None,
    };
    let mut classification = classify(&field, manifold, &params)?;

    let assembled = assemble_field(&field, manifold, &mut classification, half_reach)?;

    let gradient = gradient_norms(&assembled.field);
    let weights = node_weights(&assembled.field.slab);
    let distribution = distribution::distribution_report(
        &gradient,
        &weights,
        map.m(),
        assembled.field.singular_points.len(),
        cfg.quantile_points,
    );

    let (trace_l1, trace_l1_rel) = trace_error(&assembled.field, map, window);

    let report = AssemblyReport {
        lambda,
        tau: classification.tau,
        h_offset: classification.h_offset,
        bad_count: classification.bad_count,
        counting_integral: classification.counting_integral,
        reclassified: assembled.reclassified,
        singular_count: assembled.field.singular_points.len(),
        removable_count: assembled.field.removable_count,
        fallback_trace_points: assembled.field.fallback_trace_points,
        trace_l1,
        trace_l1_rel,
        energy,
        comparability_k: comparability.map(|c| c.k),
        half_reach,
        window,
    };
    Ok(AssemblyOutput {
        field: assembled.field,
        distribution,
        classification,
        report,
    })
}

/// Quadrature weights of the slab grid nodes.
pub fn node_weights(slab: &Slab) -> Vec<f64> {
    let mut w = Vec::with_capacity(slab.nx * slab.ny());
    for j in 0..slab.ny() {
        for i in 0..slab.nx {
            w.push(slab.node_weight(i, j));
        }
    }
    w
}

struct Assembled {
    field: ExtensionField,
    reclassified: usize,
}

/// Per-node lattice address within the chosen family, or none below the
/// finest generation / above the coarsest.
fn node_address(
    lambda: f64,
    tau: f64,
    h: f64,
    k_range: (i32, i32),
    x: f64,
    y: f64,
) -> Option<(i32, i64)> {
    if y <= 0.0 {
        return None;
    }
    // generation whose band [edge/(l-1), edge l/(l-1)] contains y
    let k = (tau / ((lambda - 1.0) * y)).ln() / lambda.ln();
    let k = k.ceil() as i32;
    if k < k_range.0 || k > k_range.1 {
        return None;
    }
    let edge = tau * lambda.powi(-k);
    let j = (x / edge - h).floor() as i64;
    Some((k, j))
}

fn assemble_field(
    field: &AveragedField<'_>,
    manifold: &EmbeddedManifold,
    classification: &mut CubeClassification,
    half_reach: f64,
) -> Result<Assembled> {
    let slab = field.slab.clone();
    let nx = slab.nx;
    let ny = slab.ny();
    let vd = field.map.value_dim;
    let lambda = classification.lambda;
    let tau = classification.tau;
    let h = classification.h_offset;
    let k_range = classification.k_range;

    // lattice address -> index in the classification cube list
    let index: std::collections::BTreeMap<(i32, i64), usize> = classification
        .cubes
        .iter()
        .enumerate()
        .map(|(idx, c)| ((c.k, c.j), idx))
        .collect();

    // node -> cube index (by lattice address; addresses outside the
    // evaluated range are exact-tail regions, treated as good)
    let address_of = |i: usize, j: usize| -> Option<usize> {
        let (x, y) = (slab.x(i), slab.heights[j]);
        node_address(lambda, tau, h, k_range, x, y).and_then(|a| index.get(&a).copied())
    };

    // interior escape check: a good cube with an interior node outside the
    // tube is reclassified as bad
    let mut reclassified = 0usize;
    loop {
        let mut flips = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let d = field.dist[j * nx + i];
                if d < half_reach {
                    continue;
                }
                match address_of(i, j) {
                    Some(idx) => {
                        if classification.labels[idx] == CubeLabel::Good
                            && !flips.contains(&idx)
                        {
                            flips.push(idx);
                        }
                    }
                    None => {
                        return Err(Error::TubeEscape(format!(
                            "node ({:.4}, {:.4}) outside every cube has dist {:.4} >= {:.4}",
                            slab.x(i),
                            slab.heights[j],
                            d,
                            half_reach
                        )));
                    }
                }
            }
        }
        if flips.is_empty() {
            break;
        }
        for idx in flips {
            classification.labels[idx] = CubeLabel::Bad;
            classification.bad_count += 1;
            reclassified += 1;
        }
    }

    // outermost bad cubes, coarse to fine
    let mut bad: Vec<Cube> = classification.bad_cubes();
    bad.sort_by(|a, b| a.k.cmp(&b.k).then(a.j.cmp(&b.j)));
    let outer: Vec<Cube> = bad
        .iter()
        .filter(|c| {
            !bad.iter()
                .any(|other| *c != other && other.contains_cube(c))
        })
        .copied()
        .collect();

    let bad_index: std::collections::BTreeMap<(i32, i64), usize> = outer
        .iter()
        .enumerate()
        .map(|(idx, c)| ((c.k, c.j), idx))
        .collect();
    let bad_of = |i: usize, j: usize| -> Option<usize> {
        let (x, y) = (slab.x(i), slab.heights[j]);
        node_address(lambda, tau, h, k_range, x, y).and_then(|a| bad_index.get(&a).copied())
    };

    let mut values = vec![0.0f64; nx * ny * vd];
    let mut provenance = vec![Provenance::Reprojected; nx * ny];
    let mut assigned = vec![false; nx * ny];

    // pass A: reproject the good region
    for j in 0..ny {
        for i in 0..nx {
            if bad_of(i, j).is_some() {
                continue;
            }
            let node = j * nx + i;
            let v = field.value(i, j);
            let base = node * vd;
            manifold.project_into(v, &mut values[base..base + vd])?;
            assigned[node] = true;
        }
    }

    // pass B: homogeneous extension per bad cube, coarse to fine
    let mut tables: Vec<TraceTable> = Vec::with_capacity(outer.len());
    let mut singular_points = Vec::new();
    let mut removable_count = 0usize;
    let mut fallback_trace_points = 0usize;
    for (cube_idx, cube) in outer.iter().enumerate() {
        let table = build_trace_table(
            field,
            manifold,
            cube,
            &outer[..cube_idx],
            &tables,
            half_reach,
        )?;
        fallback_trace_points += table.fallbacks;

        // removability: trace oscillation below the half-reach means the
        // barycentre singularity carries no topology
        let osc = table.geodesic_oscillation(manifold);
        if osc >= half_reach {
            singular_points.push(cube.center());
        } else {
            removable_count += 1;
        }

        for j in 0..ny {
            let y = slab.heights[j];
            if y < cube.y_lo - 1e-12 || y > cube.y_hi() + 1e-12 {
                continue;
            }
            for i in 0..nx {
                let node = j * nx + i;
                if assigned[node] || bad_of(i, j) != Some(cube_idx) {
                    continue;
                }
                let x = slab.x(i);
                let (hx, hy) = cube.boundary_hit(x, y);
                let base = node * vd;
                table.eval(manifold, cube.perimeter_param(hx, hy), &mut values[base..base + vd]);
                provenance[node] = Provenance::Homogeneous;
                assigned[node] = true;
            }
        }
        tables.push(table);
    }

    debug_assert!(assigned.iter().all(|&a| a));
    Ok(Assembled {
        field: ExtensionField {
            slab,
            value_dim: vd,
            values,
            provenance,
            singular_points,
            removable_count,
            fallback_trace_points,
        },
        reclassified,
    })
}

/// Sampled boundary trace of a bad cube, resolved against the averaged
/// field, previously processed cubes, or (as a last resort) the nearest
/// resolved sample along the perimeter.
struct TraceTable {
    perimeter: f64,
    step: f64,
    values: Vec<f64>,
    dim: usize,
    fallbacks: usize,
}

fn build_trace_table(
    field: &AveragedField<'_>,
    manifold: &EmbeddedManifold,
    cube: &Cube,
    processed: &[Cube],
    tables: &[TraceTable],
    half_reach: f64,
) -> Result<TraceTable> {
    let dx = field.slab.dx();
    let per_side = ((cube.edge / dx).ceil() as usize).clamp(8, 64);
    let n = 4 * per_side;
    let perimeter = 4.0 * cube.edge;
    let step = perimeter / n as f64;
    let vd = field.map.value_dim;
    let mut values = vec![0.0f64; n * vd];
    let mut resolved = vec![false; n];
    let mut buf = [0.0f64; 4];

    for q in 0..n {
        let s = (q as f64 + 0.5) * step;
        let (x, y) = cube.perimeter_point(s);
        // (a) reproject the averaged field where it is inside the tube
        field.eval(x, y, &mut buf[..vd]);
        if manifold.dist_to(&buf[..vd]) < half_reach {
            let base = q * vd;
            manifold.project_into(&buf.clone()[..vd], &mut values[base..base + vd])?;
            resolved[q] = true;
            continue;
        }
        // (b) a previously processed cube already carries values here
        for (c, t) in processed.iter().zip(tables.iter()) {
            if on_boundary(c, x, y) {
                let base = q * vd;
                t.eval(manifold, c.perimeter_param(x, y), &mut values[base..base + vd]);
                resolved[q] = true;
                break;
            }
        }
    }

    let unresolved: Vec<usize> = (0..n).filter(|&q| !resolved[q]).collect();
    if unresolved.len() == n {
        return Err(Error::BoundaryNotOnManifold(format!(
            "no boundary point of the cube at ({:.4}, {:.4}) edge {:.4} is resolvable",
            cube.x_lo, cube.y_lo, cube.edge
        )));
    }
    // (c) nearest resolved sample along the perimeter, both directions
    let fallbacks = unresolved.len();
    for q in unresolved {
        let mut offset = 1;
        loop {
            let fwd = (q + offset) % n;
            let bwd = (q + n - offset % n) % n;
            if resolved[fwd] {
                let (dst, src) = (q * vd, fwd * vd);
                let src_vals: Vec<f64> = values[src..src + vd].to_vec();
                values[dst..dst + vd].copy_from_slice(&src_vals);
                break;
            }
            if resolved[bwd] {
                let (dst, src) = (q * vd, bwd * vd);
                let src_vals: Vec<f64> = values[src..src + vd].to_vec();
                values[dst..dst + vd].copy_from_slice(&src_vals);
                break;
            }
            offset += 1;
        }
    }

    Ok(TraceTable {
        perimeter,
        step,
        values,
        dim: vd,
        fallbacks,
    })
}

fn on_boundary(cube: &Cube, x: f64, y: f64) -> bool {
    if !cube.contains(x, y) {
        return false;
    }
    let tol = 1e-9 * cube.edge;
    (x - cube.x_lo).abs() < tol
        || (x - cube.x_hi()).abs() < tol
        || (y - cube.y_lo).abs() < tol
        || (y - cube.y_hi()).abs() < tol
}

impl TraceTable {
    /// Trace value at perimeter parameter s: linear interpolation between
    /// the two neighbouring samples, reprojected; falls back to the nearer
    /// sample when the chord midpoint leaves the tube (a genuine trace
    /// jump).
    fn eval(&self, manifold: &EmbeddedManifold, s: f64, out: &mut [f64]) {
        let n = self.values.len() / self.dim;
        let pos = (s / self.step - 0.5).rem_euclid(n as f64);
        let q0 = pos.floor() as usize % n;
        let q1 = (q0 + 1) % n;
        let t = pos - pos.floor();
        let a = &self.values[q0 * self.dim..(q0 + 1) * self.dim];
        let b = &self.values[q1 * self.dim..(q1 + 1) * self.dim];
        let mut blend = [0.0f64; 4];
        for k in 0..self.dim {
            blend[k] = a[k] + t * (b[k] - a[k]);
        }
        if manifold
            .project_into(&blend[..self.dim], out)
            .is_err()
        {
            let src = if t < 0.5 { a } else { b };
            out.copy_from_slice(src);
        }
        let _ = self.perimeter;
    }

    /// Geodesic diameter of the trace image.
    fn geodesic_oscillation(&self, manifold: &EmbeddedManifold) -> f64 {
        let n = self.values.len() / self.dim;
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let a = &self.values[i * self.dim..(i + 1) * self.dim];
            for j in (i + 1)..n {
                let b = &self.values[j * self.dim..(j + 1) * self.dim];
                if let Ok(d) = manifold.geodesic(a, b) {
                    sup = sup.max(d);
                }
            }
        }
        sup
    }
}

/// L1 distance between the floor row of U and the boundary map over the map
/// window, absolute and relative to the window width.
fn trace_error(field: &ExtensionField, map: &SurfaceMap, window: (f64, f64)) -> (f64, f64) {
    let nx = field.slab.nx;
    let vd = field.value_dim;
    let dx = field.slab.dx();
    let mut buf = [0.0f64; 4];
    let mut l1 = 0.0;
    for i in 0..nx {
        let x = field.slab.x(i);
        if x < window.0 || x > window.1 {
            continue;
        }
        map.interp_line(x, &mut buf[..vd]);
        let u0 = field.value(i, 0);
        let diff: f64 = (0..vd).map(|k| (u0[k] - buf[k]).powi(2)).sum::<f64>().sqrt();
        l1 += diff * dx;
    }
    (l1, l1 / (window.1 - window.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn quick_cfg() -> ExtensionConfig {
        ExtensionConfig {
            nx: 256,
            ny: 32,
            tau_samples: 4,
            h_samples: 4,
            ..ExtensionConfig::default()
        }
    }

    #[test]
    fn constant_map_is_reprojected_everywhere() {
        let m = fixtures::unit_circle();
        let u = fixtures::constant_plane_map(128, (0.0, 2.0), 0.4);
        let out = assemble(&u, &m, &quick_cfg()).unwrap();
        assert_eq!(out.report.bad_count, 0);
        assert_eq!(out.report.singular_count, 0);
        assert!(out
            .field
            .provenance
            .iter()
            .all(|p| *p == Provenance::Reprojected));
        assert_eq!(out.distribution.weak_norm, 0.0);
        assert!(out.report.trace_l1 < 1e-10);
    }

    #[test]
    fn small_oscillation_has_no_bad_cubes() {
        let m = fixtures::unit_circle();
        let u = fixtures::bump_plane_map(256, (0.0, 2.0), 0.1);
        let out = assemble(&u, &m, &quick_cfg()).unwrap();
        assert_eq!(out.report.bad_count, 0);
        assert_eq!(out.report.singular_count, 0);
        // every node is the projection of the averaged field
        assert!(out
            .field
            .provenance
            .iter()
            .all(|p| *p == Provenance::Reprojected));
    }

    #[test]
    fn degree_one_map_has_a_singularity() {
        let m = fixtures::unit_circle();
        let u = fixtures::wrap_plane_map(512, (-4.0, 4.0), 0.5);
        let out = assemble(&u, &m, &quick_cfg()).unwrap();
        assert!(out.report.bad_count >= 1);
        assert!(
            out.report.singular_count >= 1,
            "expected a topological singularity, report: bad={} removable={}",
            out.report.bad_count,
            out.report.removable_count
        );
    }

    #[test]
    fn divergent_map_rejected() {
        let m = fixtures::unit_circle();
        let u = fixtures::antipodal_step_plane_map(512, (0.0, 2.0), 0.25);
        match assemble(&u, &m, &quick_cfg()) {
            Err(Error::NonFiniteEnergy) => {}
            other => panic!("expected NonFiniteEnergy, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn on_manifold_everywhere() {
        let m = fixtures::unit_circle();
        let u = fixtures::wrap_plane_map(256, (-2.0, 2.0), 0.5);
        let out = assemble(&u, &m, &quick_cfg()).unwrap();
        for j in 0..out.field.slab.ny() {
            for i in 0..out.field.slab.nx {
                let v = out.field.value(i, j);
                assert!(m.dist_to(v) < 1e-8);
            }
        }
    }

    #[test]
    fn bounded_mode_needs_l() {
        let m = fixtures::unit_circle();
        let mut u = fixtures::bump_plane_map(128, (0.0, 2.0), 0.2);
        u.l_bound = None;
        let cfg = ExtensionConfig {
            mode: LambdaMode::BoundedMap,
            ..quick_cfg()
        };
        assert!(matches!(assemble(&u, &m, &cfg), Err(Error::MissingBound)));
    }
}
