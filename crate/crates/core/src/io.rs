//! File formats: manifold specs (JSON), surface maps (CSV with a comment
//! header), grid fields (binary with a JSON sidecar), and report envelopes
//! carrying the tool version and config hash.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{CloudData, EmbeddedManifold, ManifoldKind, ProjectionBackend};
use crate::surface::{Domain, Mesh, SurfaceMap};

/// On-disk manifold description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldSpec {
    #[serde(flatten)]
    pub kind: ManifoldKindSpec,
    #[serde(default)]
    pub truncation_window: Option<f64>,
    #[serde(default)]
    pub projection_backend: Option<ProjectionBackend>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

/// Spec-file kinds; the point-cloud variant points at a CSV of coordinates
/// and tangent frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKindSpec {
    Circle { radius: f64 },
    Sphere { radius: f64 },
    CliffordTorus { r1: f64, r2: f64 },
    Cylinder { radius: f64 },
    WarpedCylinder { profile: crate::geometry::WarpProfile },
    FlatPatch { halfwidth: f64 },
    PointCloud { csv: PathBuf },
}

impl ManifoldSpec {
    pub fn load(path: &Path) -> Result<(Self, EmbeddedManifold)> {
        let text = std::fs::read_to_string(path)?;
        let spec: ManifoldSpec = serde_json::from_str(&text)?;
        let manifold = spec.build(path.parent().unwrap_or(Path::new(".")))?;
        Ok((spec, manifold))
    }

    pub fn build(&self, base_dir: &Path) -> Result<EmbeddedManifold> {
        let tol = self.tolerances.unwrap_or_default();
        let kind = match &self.kind {
            ManifoldKindSpec::Circle { radius } => ManifoldKind::Circle { radius: *radius },
            ManifoldKindSpec::Sphere { radius } => ManifoldKind::Sphere { radius: *radius },
            ManifoldKindSpec::CliffordTorus { r1, r2 } => {
                ManifoldKind::CliffordTorus { r1: *r1, r2: *r2 }
            }
            ManifoldKindSpec::Cylinder { radius } => ManifoldKind::Cylinder { radius: *radius },
            ManifoldKindSpec::WarpedCylinder { profile } => ManifoldKind::WarpedCylinder {
                profile: profile.clone(),
            },
            ManifoldKindSpec::FlatPatch { halfwidth } => {
                ManifoldKind::FlatPatch { halfwidth: *halfwidth }
            }
            ManifoldKindSpec::PointCloud { csv } => {
                let path = if csv.is_absolute() {
                    csv.clone()
                } else {
                    base_dir.join(csv)
                };
                ManifoldKind::PointCloud {
                    data: read_point_cloud_csv(&path)?,
                }
            }
        };
        EmbeddedManifold::new(kind, self.truncation_window, tol)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Point-cloud CSV: `x0,..,x_{nu-1}` then `intrinsic_dim * nu` frame
/// entries per row; header line `# ambient_dim = .., intrinsic_dim = ..`.
pub fn read_point_cloud_csv(path: &Path) -> Result<CloudData> {
    let text = std::fs::read_to_string(path)?;
    let mut ambient = 0usize;
    let mut intrinsic = 0usize;
    let mut points = Vec::new();
    let mut frames = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for part in rest.split(',') {
                if let Some((key, value)) = part.split_once('=') {
                    match key.trim() {
                        "ambient_dim" => ambient = parse_num(value)? as usize,
                        "intrinsic_dim" => intrinsic = parse_num(value)? as usize,
                        _ => {}
                    }
                }
            }
            continue;
        }
        if ambient == 0 || intrinsic == 0 {
            return Err(Error::InvalidInput(
                "point cloud needs a header '# ambient_dim = .., intrinsic_dim = ..'".into(),
            ));
        }
        let row: Result<Vec<f64>> = line.split(',').map(parse_num).collect();
        let row = row?;
        let expected = ambient * (1 + intrinsic);
        if row.len() != expected {
            return Err(Error::InvalidInput(format!(
                "point-cloud row has {} fields, expected {expected}",
                row.len()
            )));
        }
        points.extend_from_slice(&row[..ambient]);
        frames.extend_from_slice(&row[ambient..]);
    }
    Ok(CloudData {
        ambient_dim: ambient,
        intrinsic_dim: intrinsic,
        points,
        frames,
    })
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}")))
}

/// Write a surface map: comment header with the domain, mesh, manifold
/// reference and bounds, then one `params.., values..` row per node.
pub fn write_surface_map(map: &SurfaceMap, manifold_ref: &str, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("# tubex surface map v1\n");
    out.push_str(&format!(
        "# domain = {}\n",
        serde_json::to_string(&map.domain)?.trim_matches('"')
    ));
    out.push_str(&format!("# manifold = {manifold_ref}\n"));
    out.push_str(&format!("# value_dim = {}\n", map.value_dim));
    if let Some(l) = map.l_bound {
        out.push_str(&format!("# l_bound = {l}\n"));
    }
    match &map.mesh {
        Mesh::Circle { n } => out.push_str(&format!("# mesh = circle {n}\n")),
        Mesh::Line { window, .. } => {
            out.push_str(&format!("# mesh = line {} {}\n", window.0, window.1))
        }
        Mesh::LatLon { nlat, nlon } => {
            out.push_str(&format!("# mesh = latlon {nlat} {nlon}\n"))
        }
        Mesh::Grid { nx, ny, window } => out.push_str(&format!(
            "# mesh = grid {nx} {ny} {} {} {} {}\n",
            window.0, window.1, window.2, window.3
        )),
    }
    if let Some(tail) = &map.tail {
        let vals: Vec<String> = tail.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&format!("# tail = {}\n", vals.join(" ")));
    }
    for i in 0..map.len() {
        let mut row: Vec<String> = Vec::new();
        match &map.mesh {
            Mesh::Circle { n } => row.push(format!("{:.17e}", crate::surface::theta_node(i, *n))),
            Mesh::Line { nodes, .. } => row.push(format!("{:.17e}", nodes[i])),
            Mesh::LatLon { .. } | Mesh::Grid { .. } => row.push(format!("{i}")),
        }
        for v in map.value(i) {
            row.push(format!("{v:.17e}"));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a surface map written by `write_surface_map`. Returns the map and
/// the manifold reference string from the header.
pub fn read_surface_map(path: &Path) -> Result<(SurfaceMap, String)> {
    let text = std::fs::read_to_string(path)?;
    let mut domain: Option<Domain> = None;
    let mut manifold_ref = String::new();
    let mut value_dim = 0usize;
    let mut l_bound = None;
    let mut tail: Option<Vec<f64>> = None;
    let mut mesh_desc: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "domain" => {
                        domain = Some(serde_json::from_str(&format!("\"{value}\""))?);
                    }
                    "manifold" => manifold_ref = value.to_string(),
                    "value_dim" => value_dim = parse_num(value)? as usize,
                    "l_bound" => l_bound = Some(parse_num(value)?),
                    "tail" => {
                        let vals: Result<Vec<f64>> =
                            value.split_whitespace().map(parse_num).collect();
                        tail = Some(vals?);
                    }
                    "mesh" => {
                        mesh_desc =
                            Some(value.split_whitespace().map(|s| s.to_string()).collect())
                    }
                    _ => {}
                }
            }
            continue;
        }
        let row: Result<Vec<f64>> = line.split(',').map(parse_num).collect();
        rows.push(row?);
    }
    let domain = domain.ok_or_else(|| Error::InvalidInput("missing '# domain' header".into()))?;
    if value_dim == 0 {
        return Err(Error::InvalidInput("missing '# value_dim' header".into()));
    }
    let mesh_desc =
        mesh_desc.ok_or_else(|| Error::InvalidInput("missing '# mesh' header".into()))?;
    let mesh = match mesh_desc[0].as_str() {
        "circle" => Mesh::Circle {
            n: mesh_desc[1].parse().map_err(|_| {
                Error::InvalidInput("bad circle mesh size".into())
            })?,
        },
        "line" => {
            let lo = parse_num(&mesh_desc[1])?;
            let hi = parse_num(&mesh_desc[2])?;
            let nodes: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            Mesh::Line {
                nodes,
                window: (lo, hi),
            }
        }
        "latlon" => Mesh::LatLon {
            nlat: mesh_desc[1].parse().map_err(|_| Error::InvalidInput("bad nlat".into()))?,
            nlon: mesh_desc[2].parse().map_err(|_| Error::InvalidInput("bad nlon".into()))?,
        },
        "grid" => Mesh::Grid {
            nx: mesh_desc[1].parse().map_err(|_| Error::InvalidInput("bad nx".into()))?,
            ny: mesh_desc[2].parse().map_err(|_| Error::InvalidInput("bad ny".into()))?,
            window: (
                parse_num(&mesh_desc[3])?,
                parse_num(&mesh_desc[4])?,
                parse_num(&mesh_desc[5])?,
                parse_num(&mesh_desc[6])?,
            ),
        },
        other => {
            return Err(Error::InvalidInput(format!("unknown mesh kind '{other}'")));
        }
    };
    if rows.len() != mesh.len() {
        return Err(Error::InvalidInput(format!(
            "{} data rows for a mesh of {} nodes",
            rows.len(),
            mesh.len()
        )));
    }
    let mut values = Vec::with_capacity(rows.len() * value_dim);
    for row in &rows {
        if row.len() != 1 + value_dim {
            return Err(Error::InvalidInput(format!(
                "row has {} fields, expected {}",
                row.len(),
                1 + value_dim
            )));
        }
        values.extend_from_slice(&row[1..]);
    }
    let map = SurfaceMap::new(domain, mesh, values, value_dim, l_bound, tail)?;
    Ok((map, manifold_ref))
}

const GRID_MAGIC: &[u8; 8] = b"TBXGRID1";

/// Binary grid: magic, dimensions, little-endian f64 payload. The JSON
/// sidecar (written next to it as `<file>.json`) carries the geometry.
pub fn write_grid(path: &Path, nx: usize, ny: usize, ncomp: usize, data: &[f64]) -> Result<()> {
    if data.len() != nx * ny * ncomp {
        return Err(Error::InvalidInput("grid payload size mismatch".into()));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(GRID_MAGIC)?;
    for v in [nx as u64, ny as u64, ncomp as u64] {
        f.write_all(&v.to_le_bytes())?;
    }
    for v in data {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::InvalidInput("not a grid file".into()));
    }
    let mut word = [0u8; 8];
    let mut dims = [0usize; 3];
    for d in &mut dims {
        f.read_exact(&mut word)?;
        *d = u64::from_le_bytes(word) as usize;
    }
    let count = dims[0] * dims[1] * dims[2];
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        f.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok((dims[0], dims[1], dims[2], data))
}

/// Envelope written around every emitted report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportEnvelope<T> {
    pub tool_version: String,
    pub config_hash: String,
    pub deterministic: bool,
    pub threads: usize,
    pub report: T,
}

pub fn config_hash<C: Serialize>(config: &C) -> String {
    let bytes = serde_json::to_vec(config).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn envelope<T>(report: T, config_hash: String, deterministic: bool, threads: usize) -> ReportEnvelope<T> {
    ReportEnvelope {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        deterministic,
        threads,
        report,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn surface_map_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        let map = fixtures::wrap_plane_map(64, (0.0, 2.0), 0.5);
        write_surface_map(&map, "circle.json", &path).unwrap();
        let (back, mref) = read_surface_map(&path).unwrap();
        assert_eq!(mref, "circle.json");
        assert_eq!(back.domain, map.domain);
        assert_eq!(back.len(), map.len());
        for i in 0..map.len() {
            for (a, b) in map.value(i).iter().zip(back.value(i)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn circle_map_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        let map = fixtures::identity_circle_map(32);
        write_surface_map(&map, "m.json", &path).unwrap();
        let (back, _) = read_surface_map(&path).unwrap();
        assert_eq!(back.mesh, map.mesh);
        assert_eq!(back.values.len(), map.values.len());
    }

    #[test]
    fn grid_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.grid");
        let data: Vec<f64> = (0..24).map(|i| i as f64 * 0.5).collect();
        write_grid(&path, 4, 3, 2, &data).unwrap();
        let (nx, ny, nc, back) = read_grid(&path).unwrap();
        assert_eq!((nx, ny, nc), (4, 3, 2));
        assert_eq!(back, data);
    }

    #[test]
    fn manifold_spec_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let spec = ManifoldSpec {
            kind: ManifoldKindSpec::WarpedCylinder {
                profile: crate::geometry::WarpProfile::SinOffset {
                    base: 2.0,
                    amplitude: 0.25,
                    frequency: 1.0,
                },
            },
            truncation_window: Some(6.0),
            projection_backend: None,
            tolerances: None,
        };
        spec.save(&path).unwrap();
        let (_, manifold) = ManifoldSpec::load(&path).unwrap();
        assert_eq!(manifold.ambient_dim(), 3);
    }

    #[test]
    fn malformed_map_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# domain = sphere_s1\n1.0,2.0\n").unwrap();
        assert!(read_surface_map(&path).is_err());
    }

    #[test]
    fn config_hash_is_stable() {
        let a = config_hash(&("x", 1.5));
        let b = config_hash(&("x", 1.5));
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }
}
