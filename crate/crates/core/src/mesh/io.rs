//! STL / OBJ reading and writing with vertex welding on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{Aabb, Mesh};
use crate::error::{Error, Result};

const STL_HEADER_LEN: usize = 80;
const STL_RECORD_LEN: usize = 50;

/// Default weld tolerance relative to the bounding-box diagonal.
pub const DEFAULT_RELATIVE_WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    StlBinary,
    StlAscii,
    Obj,
    Auto,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stl-binary" | "stl" => Ok(MeshFormat::StlBinary),
            "stl-ascii" => Ok(MeshFormat::StlAscii),
            "obj" => Ok(MeshFormat::Obj),
            "auto" => Ok(MeshFormat::Auto),
            other => Err(Error::InvalidParameter(format!("unknown mesh format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub format: MeshFormat,
    /// Absolute weld distance. `None` means 1e-6 of the bounding-box diagonal.
    pub weld_tolerance: Option<f64>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: MeshFormat::Auto,
            weld_tolerance: None,
        }
    }
}

/// What happened while turning the file into an indexed mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub format: MeshFormat,
    pub input_vertex_count: usize,
    pub input_face_count: usize,
    pub vertex_count: usize,
    pub face_count: usize,
    pub merged_vertex_count: usize,
    pub dropped_face_count: usize,
    pub weld_tolerance: f64,
}

pub fn load_mesh(path: impl AsRef<Path>, options: &LoadOptions) -> Result<(Mesh, LoadReport)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match options.format {
        MeshFormat::Auto => detect_format(path, &bytes),
        f => f,
    };
    load_mesh_from_bytes(&bytes, &LoadOptions { format, ..*options })
}

pub fn load_mesh_from_bytes(bytes: &[u8], options: &LoadOptions) -> Result<(Mesh, LoadReport)> {
    if let Some(t) = options.weld_tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("weld tolerance must be >= 0, got {t}")));
        }
    }
    let format = match options.format {
        MeshFormat::Auto => detect_stl_flavor(bytes).unwrap_or(MeshFormat::Obj),
        f => f,
    };
    let raw = match format {
        MeshFormat::StlBinary => parse_stl_binary(bytes)?,
        MeshFormat::StlAscii => parse_stl_ascii(bytes)?,
        MeshFormat::Obj => parse_obj(bytes)?,
        MeshFormat::Auto => unreachable!(),
    };
    if raw.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let tolerance = options.weld_tolerance.unwrap_or_else(|| {
        Aabb::from_points(&raw.positions).map_or(0.0, |b| b.diagonal()) * DEFAULT_RELATIVE_WELD_TOLERANCE
    });
    let (vertices, remap) = weld(&raw.positions, tolerance);
    let faces: Vec<[usize; 3]> = raw
        .triangles
        .iter()
        .map(|t| t.map(|i| remap[i]))
        .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
        .collect();
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let report = LoadReport {
        format,
        input_vertex_count: raw.positions.len(),
        input_face_count: raw.triangles.len(),
        vertex_count: vertices.len(),
        face_count: faces.len(),
        merged_vertex_count: raw.positions.len() - vertices.len(),
        dropped_face_count: raw.triangles.len() - faces.len(),
        weld_tolerance: tolerance,
    };
    Ok((Mesh::new_unchecked(vertices, faces), report))
}

fn detect_format(path: &Path, bytes: &[u8]) -> MeshFormat {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    if ext.as_deref() == Some("obj") {
        return MeshFormat::Obj;
    }
    detect_stl_flavor(bytes).unwrap_or(if ext.as_deref() == Some("stl") {
        MeshFormat::StlBinary
    } else {
        MeshFormat::Obj
    })
}

/// Binary when the size matches the declared facet count (many binary files
/// start with "solid" too), ASCII when the text starts with `solid`.
fn detect_stl_flavor(bytes: &[u8]) -> Option<MeshFormat> {
    if bytes.len() >= STL_HEADER_LEN + 4 {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == STL_HEADER_LEN + 4 + n * STL_RECORD_LEN {
            return Some(MeshFormat::StlBinary);
        }
    }
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    if bytes[start..].starts_with(b"solid") {
        return Some(MeshFormat::StlAscii);
    }
    None
}

struct RawMesh {
    positions: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
}

fn parse_stl_binary(bytes: &[u8]) -> Result<RawMesh> {
    if bytes.len() < STL_HEADER_LEN + 4 {
        return Err(Error::parse("binary STL", "file shorter than the 84-byte header"));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let body = &bytes[STL_HEADER_LEN + 4..];
    if body.len() < n * STL_RECORD_LEN {
        return Err(Error::parse(
            "binary STL",
            format!("header declares {n} facets but only {} bytes of records follow", body.len()),
        ));
    }
    let mut positions = Vec::with_capacity(3 * n);
    let mut triangles = Vec::with_capacity(n);
    for record in body.chunks_exact(STL_RECORD_LEN).take(n) {
        let f = |i: usize| f32::from_le_bytes(record[i..i + 4].try_into().unwrap()) as f64;
        let base = positions.len();
        for corner in 0..3 {
            let o = 12 + corner * 12;
            positions.push(Point3::new(f(o), f(o + 4), f(o + 8)));
        }
        triangles.push([base, base + 1, base + 2]);
    }
    check_finite("binary STL", &positions)?;
    Ok(RawMesh { positions, triangles })
}

fn parse_stl_ascii(bytes: &[u8]) -> Result<RawMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("ASCII STL", e.to_string()))?;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut in_loop = 0usize;
    let mut tokens = text.split_ascii_whitespace();
    while let Some(tok) = tokens.next() {
        match tok {
            "vertex" => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let t = tokens
                        .next()
                        .ok_or_else(|| Error::parse("ASCII STL", "truncated vertex record"))?;
                    *c = t
                        .parse()
                        .map_err(|_| Error::parse("ASCII STL", format!("bad coordinate `{t}`")))?;
                }
                positions.push(Point3::from(xyz));
                in_loop += 1;
            }
            "endloop" => {
                if in_loop != 3 {
                    return Err(Error::parse(
                        "ASCII STL",
                        format!("facet loop has {in_loop} vertices, expected 3"),
                    ));
                }
                let base = positions.len() - 3;
                triangles.push([base, base + 1, base + 2]);
                in_loop = 0;
            }
            "outer" => in_loop = 0,
            _ => {}
        }
    }
    if in_loop != 0 {
        return Err(Error::parse("ASCII STL", "unterminated facet loop"));
    }
    check_finite("ASCII STL", &positions)?;
    Ok(RawMesh { positions, triangles })
}

fn parse_obj(bytes: &[u8]) -> Result<RawMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("OBJ", e.to_string()))?;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_ascii_whitespace();
        match parts.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let t = parts
                        .next()
                        .ok_or_else(|| Error::parse("OBJ", format!("line {}: short vertex", lineno + 1)))?;
                    *c = t
                        .parse()
                        .map_err(|_| Error::parse("OBJ", format!("line {}: bad coordinate `{t}`", lineno + 1)))?;
                }
                positions.push(Point3::from(xyz));
            }
            Some("f") => {
                let mut corners = Vec::with_capacity(4);
                for t in parts {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| Error::parse("OBJ", format!("line {}: bad face index `{t}`", lineno + 1)))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        positions.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= positions.len() {
                        return Err(Error::parse(
                            "OBJ",
                            format!("line {}: face index {i} out of range", lineno + 1),
                        ));
                    }
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(Error::parse("OBJ", format!("line {}: face with < 3 corners", lineno + 1)));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    check_finite("OBJ", &positions)?;
    Ok(RawMesh { positions, triangles })
}

fn check_finite(format: &'static str, positions: &[Point3<f64>]) -> Result<()> {
    match positions.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
        Some(i) => Err(Error::parse(format, format!("non-finite coordinate in vertex {i}"))),
        None => Ok(()),
    }
}

/// Merges points closer than `tolerance` (Euclidean). Returns the welded
/// points in first-occurrence order and the input-to-output index map.
pub(crate) fn weld(points: &[Point3<f64>], tolerance: f64) -> (Vec<Point3<f64>>, Vec<usize>) {
    let mut out: Vec<Point3<f64>> = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    if tolerance == 0.0 {
        let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(points.len());
        for p in points {
            // +0.0 folds -0.0 onto 0.0
            let key = [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
            let id = *seen.entry(key).or_insert_with(|| {
                out.push(*p);
                out.len() - 1
            });
            remap.push(id);
        }
        return (out, remap);
    }

    let cell = |p: &Point3<f64>| -> [i64; 3] {
        [
            (p.x / tolerance).floor() as i64,
            (p.y / tolerance).floor() as i64,
            (p.z / tolerance).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::with_capacity(points.len());
    let tol2 = tolerance * tolerance;
    for p in points {
        let c = cell(p);
        let mut found: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &id in ids {
                            if (out[id] - p).norm_squared() <= tol2 && found.is_none_or(|f| id < f) {
                                found = Some(id);
                            }
                        }
                    }
                }
            }
        }
        let id = found.unwrap_or_else(|| {
            out.push(*p);
            grid.entry(c).or_default().push(out.len() - 1);
            out.len() - 1
        });
        remap.push(id);
    }
    (out, remap)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    save_mesh_to_writer(mesh, &mut w, format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_mesh_to_writer(mesh: &Mesh, w: &mut impl Write, format: MeshFormat) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let io = |e| Error::io("<writer>", e);
    match format {
        MeshFormat::StlBinary => {
            let mut header = [0u8; STL_HEADER_LEN];
            let tag = b"organslice binary STL";
            header[..tag.len()].copy_from_slice(tag);
            w.write_all(&header).map_err(io)?;
            w.write_all(&(mesh.face_count() as u32).to_le_bytes()).map_err(io)?;
            let mut record = [0u8; STL_RECORD_LEN];
            for fi in 0..mesh.face_count() {
                let [a, b, c] = mesh.triangle(fi);
                let n = (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_default();
                let values = [n.x, n.y, n.z, a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z];
                for (i, v) in values.iter().enumerate() {
                    record[i * 4..i * 4 + 4].copy_from_slice(&(*v as f32).to_le_bytes());
                }
                w.write_all(&record).map_err(io)?;
            }
        }
        MeshFormat::Obj => {
            for v in mesh.vertices() {
                writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(io)?;
            }
            for f in mesh.faces() {
                writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!("cannot write {other:?}; use stl-binary or obj")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;

    fn stl_soup(mesh: &Mesh) -> Vec<u8> {
        let mut buf = Vec::new();
        save_mesh_to_writer(mesh, &mut buf, MeshFormat::StlBinary).unwrap();
        buf
    }

    fn bin(format: MeshFormat, tol: Option<f64>) -> LoadOptions {
        LoadOptions {
            format,
            weld_tolerance: tol,
        }
    }

    #[test]
    fn single_triangle_from_binary() {
        let m = Mesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let bytes = stl_soup(&m);
        assert_eq!(bytes.len(), 84 + 50);
        let (loaded, report) = load_mesh_from_bytes(&bytes, &bin(MeshFormat::Auto, None)).unwrap();
        assert_eq!((loaded.vertex_count(), loaded.face_count()), (3, 1));
        assert_eq!(report.format, MeshFormat::StlBinary);
        assert_eq!(loaded.vertices(), m.vertices());
    }

    #[test]
    fn cube_soup_welds_to_eight_vertices() {
        let cube = primitives::cube();
        let bytes = stl_soup(&cube);
        // pairwise oracle over the 36 corner records
        let (raw, _) = {
            let r = parse_stl_binary(&bytes).unwrap();
            (r.positions, ())
        };
        assert_eq!(raw.len(), 36);
        let mut distinct: Vec<Point3<f64>> = Vec::new();
        for p in &raw {
            if !distinct.iter().any(|q| (p - q).norm() <= 1e-6) {
                distinct.push(*p);
            }
        }
        let (m, report) = load_mesh_from_bytes(&bytes, &bin(MeshFormat::StlBinary, Some(1e-6))).unwrap();
        assert_eq!(m.vertex_count(), distinct.len());
        assert_eq!((m.vertex_count(), m.face_count()), (8, 12));
        assert_eq!(report.merged_vertex_count, 28);
        assert_eq!(m.topology_summary(), cube.topology_summary());
    }

    #[test]
    fn ascii_stl_with_binary_lookalike_header() {
        let text = "solid test\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\n facet normal 0 0 1\n  outer loop\n   vertex 1 0 0\n   vertex 1 1 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid test\n";
        let (m, report) = load_mesh_from_bytes(text.as_bytes(), &bin(MeshFormat::Auto, None)).unwrap();
        assert_eq!(report.format, MeshFormat::StlAscii);
        assert_eq!((m.vertex_count(), m.face_count()), (4, 2));
    }

    #[test]
    fn obj_polygons_and_negative_indices() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -2 -1\n";
        let (m, _) = load_mesh_from_bytes(text.as_bytes(), &bin(MeshFormat::Obj, Some(0.0))).unwrap();
        assert_eq!(m.face_count(), 3);
        assert_eq!(m.faces()[2], [0, 2, 3]);
    }

    #[test]
    fn welding_collapses_sliver_and_counts_drop() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1e-9 0 0\nf 1 2 3\nf 1 4 3\n";
        let (m, report) = load_mesh_from_bytes(text.as_bytes(), &bin(MeshFormat::Obj, Some(1e-6))).unwrap();
        assert_eq!(m.face_count(), 1);
        assert_eq!(report.dropped_face_count, 1);
        assert_eq!(report.merged_vertex_count, 1);
    }

    #[test]
    fn empty_and_malformed_inputs() {
        let mut header = vec![0u8; 84];
        assert!(matches!(
            load_mesh_from_bytes(&header, &bin(MeshFormat::StlBinary, None)),
            Err(Error::EmptyMesh)
        ));
        header[80] = 5;
        assert!(matches!(
            load_mesh_from_bytes(&header, &bin(MeshFormat::StlBinary, None)),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_mesh_from_bytes(b"v 0 0 0\nf 1 2 3\n", &bin(MeshFormat::Obj, None)),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_mesh_from_bytes(b"solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0\n", &bin(MeshFormat::StlAscii, None)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_mesh("/nonexistent/file.stl", &LoadOptions::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn obj_round_trip_is_exact() {
        let m = primitives::icosphere(1.234567890123, 1);
        let mut buf = Vec::new();
        save_mesh_to_writer(&m, &mut buf, MeshFormat::Obj).unwrap();
        let (back, _) = load_mesh_from_bytes(&buf, &bin(MeshFormat::Obj, Some(0.0))).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn stl_round_trip_is_float32_exact() {
        let m = primitives::icosphere(1.0, 2);
        let (back, _) = load_mesh_from_bytes(&stl_soup(&m), &bin(MeshFormat::StlBinary, Some(0.0))).unwrap();
        assert_eq!(back.topology_summary(), m.topology_summary());
        // welding renumbers by first occurrence in facet order
        for (bf, mf) in back.faces().iter().zip(m.faces()) {
            for k in 0..3 {
                let (p, q) = (back.vertices()[bf[k]], m.vertices()[mf[k]]);
                assert_eq!(p, q.map(|c| c as f32 as f64));
            }
        }
    }
}
