//! Indexed triangle mesh, adjacency and global topology queries.

mod io;

pub use io::{load_mesh, load_mesh_from_bytes, save_mesh, save_mesh_to_writer, LoadOptions, LoadReport, MeshFormat};

use std::sync::OnceLock;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let (min, max) = iter.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Aabb { min, max })
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }
}

/// Immutable indexed triangle mesh.
///
/// Adjacency is derived from `faces` on first use and cached; it never
/// carries information that cannot be recomputed from the faces.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    adjacency: OnceLock<Adjacency>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl Mesh {
    /// Builds a mesh, checking that every face references three distinct,
    /// in-range vertices.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&i| i >= n) {
                return Err(Error::FaceIndexOutOfRange {
                    face: fi,
                    index,
                    vertex_count: n,
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        Ok(Self::new_unchecked(vertices, faces))
    }

    pub(crate) fn new_unchecked(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Self {
        debug_assert!(faces
            .iter()
            .all(|f| f.iter().all(|&i| i < vertices.len()) && f[0] != f[1] && f[1] != f[2] && f[0] != f[2]));
        Mesh {
            vertices,
            faces,
            adjacency: OnceLock::new(),
        }
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
        (self.vertices, self.faces)
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Bounding-box diagonal, or 0 for a mesh without vertices.
    pub fn bbox_diagonal(&self) -> f64 {
        self.bounding_box().map_or(0.0, |b| b.diagonal())
    }

    pub fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| Adjacency::build(self.vertices.len(), &self.faces))
    }

    /// Applies `v -> rotation * v + translation` to every vertex.
    pub fn transform(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<Mesh> {
        check_orthonormal(rotation)?;
        let vertices = self
            .vertices
            .iter()
            .map(|v| Point3::from(rotation * v.coords + translation))
            .collect();
        Ok(Mesh::new_unchecked(vertices, self.faces.clone()))
    }

    /// Uniform scale about the origin (unit conversion).
    pub fn scaled(&self, factor: f64) -> Mesh {
        let vertices = self.vertices.iter().map(|v| Point3::from(v.coords * factor)).collect();
        Mesh::new_unchecked(vertices, self.faces.clone())
    }

    /// Copy with vertex positions replaced; connectivity is kept.
    pub fn with_positions(&self, vertices: Vec<Point3<f64>>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} positions, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Mesh::new_unchecked(vertices, self.faces.clone()))
    }

    /// Number of faces using each vertex.
    pub fn vertex_valences(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                counts[v] += 1;
            }
        }
        counts
    }

    pub fn topology_summary(&self) -> TopologySummary {
        topology_summary(self)
    }
}

/// Checks `max |R^T R - I| <= 1e-9`.
pub fn check_orthonormal(rotation: &Matrix3<f64>) -> Result<()> {
    let deviation = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
    if deviation.is_finite() && deviation <= 1e-9 {
        Ok(())
    } else {
        Err(Error::NonOrthonormalRotation { deviation })
    }
}

/// Edge table and vertex-face incidence in compressed-row form.
#[derive(Debug, Clone)]
pub struct Adjacency {
    edges: Vec<[usize; 2]>,
    edge_face_offsets: Vec<usize>,
    edge_faces: Vec<usize>,
    face_edges: Vec<[usize; 3]>,
    vertex_face_offsets: Vec<usize>,
    vertex_faces: Vec<usize>,
}

impl Adjacency {
    fn build(vertex_count: usize, faces: &[[usize; 3]]) -> Self {
        let mut half: Vec<(usize, usize, usize, u8)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                half.push((a.min(b), a.max(b), fi, k as u8));
            }
        }
        half.sort_unstable();

        let mut edges = Vec::new();
        let mut edge_face_offsets = vec![0];
        let mut edge_faces = Vec::with_capacity(half.len());
        let mut face_edges = vec![[0; 3]; faces.len()];
        for (i, &(lo, hi, fi, k)) in half.iter().enumerate() {
            if i == 0 || (half[i - 1].0, half[i - 1].1) != (lo, hi) {
                if i != 0 {
                    edge_face_offsets.push(edge_faces.len());
                }
                edges.push([lo, hi]);
            }
            edge_faces.push(fi);
            face_edges[fi][k as usize] = edges.len() - 1;
        }
        if !half.is_empty() {
            edge_face_offsets.push(edge_faces.len());
        }

        let mut vertex_face_offsets = vec![0; vertex_count + 1];
        for f in faces {
            for &v in f {
                vertex_face_offsets[v + 1] += 1;
            }
        }
        for i in 0..vertex_count {
            vertex_face_offsets[i + 1] += vertex_face_offsets[i];
        }
        let mut fill = vertex_face_offsets.clone();
        let mut vertex_faces = vec![0; faces.len() * 3];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[fill[v]] = fi;
                fill[v] += 1;
            }
        }

        Adjacency {
            edges,
            edge_face_offsets,
            edge_faces,
            face_edges,
            vertex_face_offsets,
            vertex_faces,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of edge `e`, smaller index first.
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_faces(&self, e: usize) -> &[usize] {
        &self.edge_faces[self.edge_face_offsets[e]..self.edge_face_offsets[e + 1]]
    }

    /// Edge ids of face `f`, where entry `k` is the edge `(f[k], f[k+1])`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[self.vertex_face_offsets[v]..self.vertex_face_offsets[v + 1]]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces(e).len() == 1
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.is_boundary_edge(e))
    }

    pub fn non_manifold_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edge_faces(e).len() > 2)
    }
}

/// Global counts and closedness of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub boundary_edge_count: usize,
    pub non_manifold_edge_count: usize,
    pub connected_component_count: usize,
    pub is_watertight: bool,
}

impl std::fmt::Display for TopologySummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "V={} E={} F={} χ={} watertight={} boundary_edges={} non_manifold_edges={} components={}",
            self.vertex_count,
            self.edge_count,
            self.face_count,
            self.euler_characteristic,
            self.is_watertight,
            self.boundary_edge_count,
            self.non_manifold_edge_count,
            self.connected_component_count
        )
    }
}

pub fn topology_summary(mesh: &Mesh) -> TopologySummary {
    let adj = mesh.adjacency();
    let boundary_edge_count = adj.boundary_edges().count();
    let non_manifold_edge_count = adj.non_manifold_edges().count();
    let (v, e, f) = (mesh.vertex_count(), adj.edge_count(), mesh.face_count());
    TopologySummary {
        vertex_count: v,
        edge_count: e,
        face_count: f,
        euler_characteristic: v as i64 - e as i64 + f as i64,
        boundary_edge_count,
        non_manifold_edge_count,
        connected_component_count: face_components(mesh).len(),
        is_watertight: boundary_edge_count == 0 && non_manifold_edge_count == 0,
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so that labels are stable
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Groups faces into components, two faces being connected when they share
/// a vertex. Components are ordered by their smallest face index and each
/// face list is ascending.
pub fn face_components(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut ds = DisjointSet::new(mesh.vertex_count());
    for f in mesh.faces() {
        ds.union(f[0], f[1]);
        ds.union(f[1], f[2]);
    }
    let mut label_of_root = vec![usize::MAX; mesh.vertex_count()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        let root = ds.find(f[0]);
        if label_of_root[root] == usize::MAX {
            label_of_root[root] = components.len();
            components.push(Vec::new());
        }
        components[label_of_root[root]].push(fi);
    }
    components
}

/// Rebuilds a mesh from a face subset, dropping vertices that no kept face
/// references and renumbering the rest in their original order.
pub fn compact(mesh: &Mesh, keep_face: impl Fn(usize) -> bool) -> Mesh {
    let mut remap = vec![usize::MAX; mesh.vertex_count()];
    let kept: Vec<[usize; 3]> = mesh
        .faces()
        .iter()
        .enumerate()
        .filter(|&(fi, _)| keep_face(fi))
        .map(|(_, f)| *f)
        .collect();
    for f in &kept {
        for &v in f {
            remap[v] = 0;
        }
    }
    let mut vertices = Vec::new();
    for (v, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = vertices.len();
            vertices.push(mesh.vertices()[v]);
        }
    }
    let faces = kept.iter().map(|f| f.map(|v| remap[v])).collect();
    Mesh::new_unchecked(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use std::f64::consts::FRAC_PI_2;

    fn single_triangle() -> Mesh {
        Mesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Point3::origin(); 3];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::FaceIndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(Mesh::new(v, vec![[0, 1, 1]]), Err(Error::DegenerateFace { face: 0 })));
    }

    #[test]
    fn cube_summary() {
        let s = primitives::cube().topology_summary();
        assert_eq!((s.vertex_count, s.edge_count, s.face_count), (8, 18, 12));
        assert_eq!(s.euler_characteristic, 2);
        assert!(s.is_watertight);
        assert_eq!(s.connected_component_count, 1);
    }

    #[test]
    fn single_triangle_summary() {
        let s = single_triangle().topology_summary();
        assert_eq!(s.euler_characteristic, 1);
        assert_eq!(s.boundary_edge_count, 3);
        assert!(!s.is_watertight);
    }

    #[test]
    fn two_disjoint_triangles() {
        let mut v = single_triangle().vertices().to_vec();
        v.extend(v.clone().iter().map(|p| p + Vector3::new(5.0, 0.0, 0.0)));
        let m = Mesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        assert_eq!(m.topology_summary().connected_component_count, 2);
    }

    #[test]
    fn every_face_contributes_three_edges() {
        let m = primitives::icosphere(1.0, 2);
        let adj = m.adjacency();
        let incidences: usize = (0..adj.edge_count()).map(|e| adj.edge_faces(e).len()).sum();
        assert_eq!(incidences, 3 * m.face_count());
        for (fi, f) in m.faces().iter().enumerate() {
            for k in 0..3 {
                let e = adj.face_edges(fi)[k];
                assert_eq!(adj.edge(e), [f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3])]);
                assert!(adj.edge_faces(e).contains(&fi));
            }
        }
        // watertight: exactly two faces per edge
        assert!((0..adj.edge_count()).all(|e| adj.edge_faces(e).len() == 2));
    }

    #[test]
    fn identity_transform_is_bitwise() {
        let m = primitives::icosphere(1.3, 2);
        let t = m.transform(&Matrix3::identity(), &Vector3::zeros()).unwrap();
        assert_eq!(t, m);
    }

    #[test]
    fn quarter_turn_maps_cube_to_itself() {
        let m = primitives::centered_cube(2.0);
        let r = *nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2).matrix();
        let t = m.transform(&r, &Vector3::zeros()).unwrap();
        for p in t.vertices() {
            assert!(m.vertices().iter().any(|q| (p - q).norm() < 1e-12));
        }
    }

    #[test]
    fn rotate_and_back() {
        let m = primitives::icosphere(2.0, 2);
        let r = *nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).matrix();
        let back = m
            .transform(&r, &Vector3::new(1.0, 2.0, 3.0))
            .unwrap()
            .transform(&r.transpose(), &(-(r.transpose() * Vector3::new(1.0, 2.0, 3.0))))
            .unwrap();
        for (p, q) in back.vertices().iter().zip(m.vertices()) {
            assert!((p - q).amax() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_orthonormal() {
        let m = primitives::cube();
        let r = Matrix3::identity() * 1.01;
        assert!(matches!(
            m.transform(&r, &Vector3::zeros()),
            Err(Error::NonOrthonormalRotation { .. })
        ));
    }

    #[test]
    fn compact_drops_unreferenced() {
        let mut v = primitives::cube().vertices().to_vec();
        v.push(Point3::new(9.0, 9.0, 9.0));
        let m = Mesh::new(v, primitives::cube().faces().to_vec()).unwrap();
        let c = compact(&m, |_| true);
        assert_eq!(c.vertex_count(), 8);
    }
}
