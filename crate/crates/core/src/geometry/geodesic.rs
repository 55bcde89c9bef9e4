//! Graph-based geodesic distances for sampled backends.
//!
//! Warped surfaces use Dijkstra on a parameter-grid graph with intrinsic
//! edge lengths, refined until successive distance fields agree in sup norm;
//! point clouds use a k-nearest-neighbour graph with chordal weights.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

use super::{dist, EmbeddedManifold, ManifoldKind};

struct HeapNode {
    dist: f64,
    idx: usize,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.idx == other.idx
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on distance; ties broken by index for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(other.idx.cmp(&self.idx))
    }
}

/// Weighted adjacency in compressed form.
pub struct Graph {
    offsets: Vec<usize>,
    edges: Vec<(usize, f64)>,
}

impl Graph {
    pub fn new(n: usize, mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for a in adj.iter_mut() {
            a.sort_by(|x, y| x.0.cmp(&y.0));
            edges.extend_from_slice(a);
            offsets.push(edges.len());
        }
        Graph { offsets, edges }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Single-source shortest distances.
    pub fn dijkstra(&self, source: usize) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        d[source] = 0.0;
        heap.push(HeapNode {
            dist: 0.0,
            idx: source,
        });
        while let Some(HeapNode { dist, idx }) = heap.pop() {
            if dist > d[idx] {
                continue;
            }
            for &(to, w) in &self.edges[self.offsets[idx]..self.offsets[idx + 1]] {
                let nd = dist + w;
                if nd < d[to] {
                    d[to] = nd;
                    heap.push(HeapNode { dist: nd, idx: to });
                }
            }
        }
        d
    }
}

/// Parameter grid over a warped surface: nt x ntheta nodes with an
/// 8-neighbour stencil and trapezoidal intrinsic edge lengths.
pub struct WarpedGrid {
    pub nt: usize,
    pub ntheta: usize,
    pub ts: Vec<f64>,
    pub thetas: Vec<f64>,
    pub graph: Graph,
}

impl WarpedGrid {
    pub fn build(m: &EmbeddedManifold, nt: usize, ntheta: usize) -> Result<Self> {
        let chart = match m.kind() {
            ManifoldKind::WarpedCylinder { .. } => (),
            _ => {
                return Err(Error::InvalidInput(
                    "warped grid on non-warped manifold".into(),
                ))
            }
        };
        let _ = chart;
        let w = m.window();
        let f = |t: f64| match m.kind() {
            ManifoldKind::WarpedCylinder { profile } => profile.eval(t, 0),
            _ => unreachable!(),
        };
        let ts: Vec<f64> = (0..nt)
            .map(|i| -w + 2.0 * w * i as f64 / (nt - 1) as f64)
            .collect();
        let thetas: Vec<f64> = (0..ntheta)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / ntheta as f64)
            .collect();
        let idx = |i: usize, j: usize| i * ntheta + j;
        let mut adj = vec![Vec::new(); nt * ntheta];
        let dt = ts[1] - ts[0];
        let dth = thetas[1] - thetas[0];
        for i in 0..nt {
            for j in 0..ntheta {
                for (di, dj) in [
                    (0i64, 1i64),
                    (1, 0),
                    (1, 1),
                    (1, -1),
                    (0, 2),
                    (2, 1),
                    (1, 2),
                    (2, -1),
                    (1, -2),
                ] {
                    let i2 = i as i64 + di;
                    if i2 < 0 || i2 >= nt as i64 {
                        continue;
                    }
                    let j2 = (j as i64 + dj).rem_euclid(ntheta as i64) as usize;
                    let i2 = i2 as usize;
                    let t_mid = 0.5 * (ts[i] + ts[i2]);
                    let fm = f(t_mid);
                    let len = ((di as f64 * dt).powi(2) + (fm * dj as f64 * dth).powi(2)).sqrt();
                    adj[idx(i, j)].push((idx(i2, j2), len));
                    adj[idx(i2, j2)].push((idx(i, j), len));
                }
            }
        }
        Ok(WarpedGrid {
            nt,
            ntheta,
            ts,
            thetas,
            graph: Graph::new(nt * ntheta, adj),
        })
    }

    pub fn nearest_node(&self, m: &EmbeddedManifold, p: &[f64]) -> usize {
        // invert the chart: theta from the radial block, t from a scan
        let theta = p[2].atan2(p[1]).rem_euclid(2.0 * std::f64::consts::PI);
        let dth = self.thetas[1] - self.thetas[0];
        let j = ((theta / dth).round() as usize) % self.ntheta;
        let axial = p[0];
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        if let ManifoldKind::WarpedCylinder { .. } = m.kind() {
            for (i, &t) in self.ts.iter().enumerate() {
                // compare axial coordinates via the chart
                let a = match m.kind() {
                    ManifoldKind::WarpedCylinder { .. } => m
                        .sample_axial(t)
                        .expect("warped manifold has an axial map"),
                    _ => unreachable!(),
                };
                let d = (a - axial).abs();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
        }
        best * self.ntheta + j
    }
}

impl EmbeddedManifold {
    /// Axial chart coordinate of a warped cylinder (internal helper).
    pub(crate) fn sample_axial(&self, t: f64) -> Option<f64> {
        match self.kind() {
            ManifoldKind::WarpedCylinder { .. } => {
                self.warped_chart().map(|c| c.axial(t))
            }
            _ => None,
        }
    }

    pub(crate) fn warped_chart(&self) -> Option<&super::WarpedChart> {
        // exposed through a method so geodesic code does not poke at fields
        self.chart_ref()
    }
}

/// Geodesic distance on a sampled backend, refined across grid levels until
/// the value stabilizes within the configured relative tolerance.
pub fn graph_distance(m: &EmbeddedManifold, p: &[f64], q: &[f64]) -> Result<f64> {
    match m.kind() {
        ManifoldKind::WarpedCylinder { .. } => {
            let tol = m.tolerances().geodesic_rel;
            let mut prev: Option<f64> = None;
            for (nt, ntheta) in [(129usize, 48usize), (257, 96), (513, 192)] {
                let grid = WarpedGrid::build(m, nt, ntheta)?;
                let a = grid.nearest_node(m, p);
                let b = grid.nearest_node(m, q);
                let d = grid.graph.dijkstra(a)[b];
                if let Some(last) = prev {
                    if (d - last).abs() <= tol * last.max(1e-12) {
                        return Ok(d);
                    }
                }
                prev = Some(d);
            }
            Ok(prev.expect("at least one refinement level"))
        }
        ManifoldKind::PointCloud { data } => {
            let n = data.len();
            let k = 8.min(n - 1);
            let mut adj = vec![Vec::new(); n];
            for i in 0..n {
                let pi = data.point(i);
                let mut ds: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, dist(pi, data.point(j))))
                    .collect();
                ds.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                for &(j, w) in ds.iter().take(k) {
                    adj[i].push((j, w));
                    adj[j].push((i, w));
                }
            }
            let graph = Graph::new(n, adj);
            let near = |z: &[f64]| {
                let mut best = 0;
                let mut bd = f64::INFINITY;
                for i in 0..n {
                    let d = dist(z, data.point(i));
                    if d < bd {
                        bd = d;
                        best = i;
                    }
                }
                best
            };
            let d = graph.dijkstra(near(p))[near(q)];
            if d.is_finite() {
                Ok(d)
            } else {
                Err(Error::NoConvergence(
                    "point-cloud neighbour graph is disconnected".into(),
                ))
            }
        }
        _ => Err(Error::InvalidInput(
            "graph geodesics are only for sampled backends".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::geometry::{EmbeddedManifold, ManifoldKind, WarpProfile};

    #[test]
    fn warped_constant_profile_matches_flat_cylinder() {
        // f == 1: the surface is an ordinary cylinder, distances unroll
        let m = EmbeddedManifold::new(
            ManifoldKind::WarpedCylinder {
                profile: WarpProfile::Constant { value: 1.0 },
            },
            Some(4.0),
            Tolerances::default(),
        )
        .unwrap();
        // points at t = -1, theta = 0 and t = 1, theta = pi
        let chart = m.warped_chart().unwrap();
        let p = chart.point(-1.0, 0.0);
        let q = chart.point(1.0, std::f64::consts::PI);
        let d = m.geodesic(&p, &q).unwrap();
        let expect = (std::f64::consts::PI.powi(2) + 4.0).sqrt();
        assert!(
            (d - expect).abs() / expect < 0.02,
            "d = {d}, expect = {expect}"
        );
    }

    #[test]
    fn dijkstra_tiny_graph() {
        let adj = vec![
            vec![(1usize, 1.0f64), (2, 4.0)],
            vec![(0, 1.0), (2, 1.5)],
            vec![(0, 4.0), (1, 1.5)],
        ];
        let g = Graph::new(3, adj);
        let d = g.dijkstra(0);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 1.0);
        assert_eq!(d[2], 2.5);
    }
}
