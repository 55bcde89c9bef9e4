//! Sampled reach estimation via the Federer quotient.
//!
//! Over sampled pairs p != q the quotient
//!     |q - p|^2 / (2 dist(q - p, T_p M))
//! is an upper bound for the reach whose infimum over all pairs equals it.
//! The running minimum therefore converges to the reach from above as the
//! sampling densifies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{EmbeddedManifold, SampleSet};

/// A sampled upper estimate of the reach together with its running history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachEstimate {
    /// Current sampled infimum of the Federer quotient.
    pub value: f64,
    /// Number of ordered pairs evaluated.
    pub sample_count: usize,
    /// Running minimum at pair-count checkpoints; nonincreasing.
    pub monotone_history: Vec<(usize, f64)>,
    /// Closed-form reach for analytic kinds, when available.
    pub analytic: Option<f64>,
}

pub fn federer_reach(manifold: &EmbeddedManifold, pair_target: usize) -> Result<ReachEstimate> {
    if pair_target < 1 {
        return Err(Error::InvalidInput("need at least one pair".into()));
    }
    // n points give n(n-1) ordered pairs
    let n_points = (((pair_target as f64).sqrt()).ceil() as usize + 1).max(4);
    let set = manifold.sample_with_frames(n_points);
    validate_frames(&set)?;
    let n = set.len();
    let total_pairs = n * (n - 1);
    let checkpoint = (total_pairs / 10).max(1);

    let mut value = f64::INFINITY;
    let mut history = Vec::new();
    let mut evaluated = 0usize;
    for i in 0..n {
        let p = set.point(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = set.point(j);
            let quotient = federer_quotient(&set, i, p, q);
            if quotient < value {
                value = quotient;
            }
            evaluated += 1;
            if evaluated % checkpoint == 0 {
                history.push((evaluated, value));
            }
        }
    }
    if history.last().map(|&(c, _)| c) != Some(evaluated) {
        history.push((evaluated, value));
    }
    Ok(ReachEstimate {
        value,
        sample_count: evaluated,
        monotone_history: history,
        analytic: manifold.analytic_reach(),
    })
}

/// |q-p|^2 / (2 dist(q-p, T_p)); +inf for tangential chords. The cutoff is
/// relative to the chord length: below it the orthogonal component is
/// dominated by cancellation noise and carries no curvature information.
fn federer_quotient(set: &SampleSet, i: usize, p: &[f64], q: &[f64]) -> f64 {
    let nu = set.ambient_dim;
    let mut delta = [0.0f64; super::MAX_AMBIENT_DIM];
    for k in 0..nu {
        delta[k] = q[k] - p[k];
    }
    let chord_sq: f64 = delta[..nu].iter().map(|d| d * d).sum();
    // orthogonal component against the frame at p
    let mut ortho_sq = chord_sq;
    for fv in 0..set.intrinsic_dim {
        let e = set.frame_vec(i, fv);
        let proj: f64 = (0..nu).map(|k| delta[k] * e[k]).sum();
        ortho_sq -= proj * proj;
    }
    let ortho = ortho_sq.max(0.0).sqrt();
    if ortho < 1e-7 * chord_sq.sqrt() {
        f64::INFINITY
    } else {
        chord_sq / (2.0 * ortho)
    }
}

fn validate_frames(set: &SampleSet) -> Result<()> {
    let nu = set.ambient_dim;
    for i in 0..set.len() {
        let mut gram = [[0.0f64; 2]; 2];
        for a in 0..set.intrinsic_dim {
            let ea = set.frame_vec(i, a);
            for b in 0..set.intrinsic_dim {
                let eb = set.frame_vec(i, b);
                gram[a][b] = (0..nu).map(|k| ea[k] * eb[k]).sum();
            }
        }
        let det = match set.intrinsic_dim {
            1 => gram[0][0],
            _ => gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0],
        };
        if det < 1e-10 {
            return Err(Error::DegenerateTangent(i));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::geometry::{CloudData, EmbeddedManifold, ManifoldKind};

    #[test]
    fn sphere_reach_is_radius() {
        let m = EmbeddedManifold::new(
            ManifoldKind::Sphere { radius: 1.0 },
            None,
            Tolerances::default(),
        )
        .unwrap();
        let est = m.federer_reach(10_000).unwrap();
        assert!((est.value - 1.0).abs() < 0.01, "value = {}", est.value);
        assert_eq!(est.analytic, Some(1.0));
    }

    #[test]
    fn cylinder_reach_is_radius() {
        let m = EmbeddedManifold::new(
            ManifoldKind::Cylinder { radius: 0.7 },
            Some(4.0),
            Tolerances::default(),
        )
        .unwrap();
        let est = m.federer_reach(10_000).unwrap();
        assert!((est.value - 0.7).abs() < 0.007, "value = {}", est.value);
    }

    #[test]
    fn history_is_nonincreasing() {
        let m = EmbeddedManifold::new(
            ManifoldKind::CliffordTorus { r1: 1.0, r2: 0.6 },
            None,
            Tolerances::default(),
        )
        .unwrap();
        let est = m.federer_reach(5_000).unwrap();
        for w in est.monotone_history.windows(2) {
            assert!(w[1].1 <= w[0].1);
            assert!(w[1].0 > w[0].0);
        }
        assert!((est.value - 0.6).abs() < 0.01);
    }

    #[test]
    fn flat_patch_reach_infinite() {
        let m = EmbeddedManifold::new(
            ManifoldKind::FlatPatch { halfwidth: 1.0 },
            None,
            Tolerances::default(),
        )
        .unwrap();
        let est = m.federer_reach(1_000).unwrap();
        assert!(est.value.is_infinite());
    }

    #[test]
    fn degenerate_cloud_frame_detected() {
        let data = CloudData {
            ambient_dim: 2,
            intrinsic_dim: 1,
            points: vec![0.0, 0.0, 1.0, 0.0],
            frames: vec![1.0, 0.0, 0.0, 0.0], // second frame vector is zero
        };
        let m = EmbeddedManifold::new(
            ManifoldKind::PointCloud { data },
            None,
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            m.federer_reach(10),
            Err(Error::DegenerateTangent(1))
        ));
    }
}
