//! Quadric-error edge collapse.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Smallest vertex count a closed surface can be decimated to.
pub const MIN_VERTICES: usize = 4;

/// Faces around a collapse must keep `cos(normal change)` above this.
const MAX_NORMAL_DEVIATION_COS: f64 = 0.2;

/// Symmetric 4x4 quadric stored as its upper triangle.
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn plane(n: Vector3<f64>, d: f64, weight: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Quadric(
            [a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d].map(|x| x * weight),
        )
    }

    fn add(&self, o: &Quadric) -> Quadric {
        let mut r = self.0;
        for (x, y) in r.iter_mut().zip(o.0) {
            *x += y;
        }
        Quadric(r)
    }

    fn error(&self, p: &Point3<f64>) -> f64 {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        let e = q[0] * x * x + 2.0 * q[1] * x * y + 2.0 * q[2] * x * z + 2.0 * q[3] * x
            + q[4] * y * y + 2.0 * q[5] * y * z + 2.0 * q[6] * y
            + q[7] * z * z + 2.0 * q[8] * z
            + q[9];
        e.max(0.0)
    }

    fn minimizer(&self) -> Option<Point3<f64>> {
        let q = &self.0;
        let a = Matrix3::new(q[0], q[1], q[2], q[1], q[4], q[5], q[2], q[5], q[7]);
        let trace = q[0] + q[4] + q[7];
        if !(a.determinant().abs() > 1e-10 * trace * trace * trace) {
            return None;
        }
        let x = a.try_inverse()? * -Vector3::new(q[3], q[6], q[8]);
        x.iter().all(|c| c.is_finite()).then(|| Point3::from(x))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    keep: usize,
    drop: usize,
    stamp: [u32; 2],
    target: Point3<f64>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap pops the cheapest collapse first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.keep.cmp(&self.keep))
            .then(other.drop.cmp(&self.drop))
    }
}

struct State {
    pos: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    quadric: Vec<Quadric>,
    stamp: Vec<u32>,
    alive: Vec<bool>,
    locked: Vec<bool>,
}

impl State {
    fn new(mesh: &Mesh) -> Self {
        let n = mesh.vertex_count();
        let pos = mesh.vertices().to_vec();
        let faces = mesh.faces().to_vec();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut quadric = vec![Quadric::default(); n];
        for (fi, f) in faces.iter().enumerate() {
            let [a, b, c] = f.map(|v| pos[v]);
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            for &v in f {
                vertex_faces[v].push(fi);
            }
            if area > 0.0 {
                let normal = cross / (2.0 * area);
                let q = Quadric::plane(normal, -normal.dot(&a.coords), area);
                for &v in f {
                    quadric[v] = quadric[v].add(&q);
                }
            }
        }
        let adj = mesh.adjacency();
        let mut locked = vec![false; n];
        for e in 0..adj.edge_count() {
            if adj.edge_faces(e).len() != 2 {
                for v in adj.edge(e) {
                    locked[v] = true;
                }
            }
        }
        let alive = vertex_faces.iter().map(|f| !f.is_empty()).collect();
        State {
            pos,
            face_alive: vec![true; faces.len()],
            faces,
            vertex_faces,
            quadric,
            stamp: vec![0; n],
            alive,
            locked,
        }
    }

    fn ring(&self, v: usize) -> Vec<usize> {
        let mut r: Vec<usize> = self.vertex_faces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&u| u != v)
            .collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    fn candidate(&self, a: usize, b: usize) -> Option<Candidate> {
        if self.locked[a] || self.locked[b] {
            return None;
        }
        let (keep, drop) = (a.min(b), a.max(b));
        let q = self.quadric[keep].add(&self.quadric[drop]);
        let (pa, pb) = (self.pos[keep], self.pos[drop]);
        let mid = nalgebra::center(&pa, &pb);
        let span = (pb - pa).norm();
        let mut options = vec![mid, pa, pb];
        if let Some(x) = q.minimizer() {
            if (x - mid).norm() <= 2.0 * span {
                options.insert(0, x);
            }
        }
        let (cost, target) = options
            .into_iter()
            .map(|p| (q.error(&p), p))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        Some(Candidate {
            cost,
            keep,
            drop,
            stamp: [self.stamp[keep], self.stamp[drop]],
            target,
        })
    }

    fn is_current(&self, c: &Candidate) -> bool {
        self.alive[c.keep]
            && self.alive[c.drop]
            && self.stamp[c.keep] == c.stamp[0]
            && self.stamp[c.drop] == c.stamp[1]
    }

    fn can_collapse(&self, c: &Candidate) -> bool {
        let (a, b) = (c.keep, c.drop);
        let shared: Vec<usize> = self.vertex_faces[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect();
        if shared.len() != 2 {
            return false;
        }
        let ring_a = self.ring(a);
        let ring_b = self.ring(b);
        let common: Vec<usize> = ring_a.iter().copied().filter(|v| ring_b.binary_search(v).is_ok()).collect();
        // link condition: only the two opposite vertices are shared
        if common.len() != 2 {
            return false;
        }
        if common.iter().any(|&v| self.ring(v).len() <= 3) {
            return false;
        }
        if ring_a.len() + ring_b.len() - 4 < 3 {
            return false;
        }
        for &f in self.vertex_faces[a].iter().chain(&self.vertex_faces[b]) {
            if shared.contains(&f) {
                continue;
            }
            let tri = self.faces[f];
            let old = tri.map(|v| self.pos[v]);
            let new = tri.map(|v| if v == a || v == b { c.target } else { self.pos[v] });
            let n_old = (old[1] - old[0]).cross(&(old[2] - old[0]));
            let n_new = (new[1] - new[0]).cross(&(new[2] - new[0]));
            let (l_old, l_new) = (n_old.norm(), n_new.norm());
            if !(l_new > 0.0) || l_old > 0.0 && n_old.dot(&n_new) < MAX_NORMAL_DEVIATION_COS * l_old * l_new {
                return false;
            }
        }
        true
    }

    fn collapse(&mut self, c: &Candidate) {
        let (a, b) = (c.keep, c.drop);
        let b_faces = std::mem::take(&mut self.vertex_faces[b]);
        for f in b_faces {
            if self.faces[f].contains(&a) {
                self.face_alive[f] = false;
                for v in self.faces[f] {
                    if v != b {
                        self.vertex_faces[v].retain(|&g| g != f);
                    }
                }
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == b {
                        *v = a;
                    }
                }
                self.vertex_faces[a].push(f);
            }
        }
        self.pos[a] = c.target;
        self.quadric[a] = self.quadric[a].add(&self.quadric[b]);
        self.alive[b] = false;
        self.stamp[a] += 1;
    }

    fn into_mesh(self) -> Mesh {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for v in 0..self.pos.len() {
            if self.alive[v] && !self.vertex_faces[v].is_empty() {
                remap[v] = vertices.len();
                vertices.push(self.pos[v]);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| f.map(|v| remap[v]))
            .collect();
        Mesh::new_unchecked(vertices, faces)
    }
}

/// Collapses edges in order of quadric error until the vertex count
/// reaches `round(fraction * V)`. Boundary and non-manifold vertices are
/// never moved.
pub fn decimate(mesh: &Mesh, fraction: f64) -> Result<Mesh> {
    decimate_with(mesh, fraction, true)
}

/// As [`decimate`]; with `preserve_boundary == false` the mesh must be
/// watertight.
pub fn decimate_with(mesh: &Mesh, fraction: f64, preserve_boundary: bool) -> Result<Mesh> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("target fraction must be in (0, 1], got {fraction}")));
    }
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !preserve_boundary && !mesh.topology_summary().is_watertight {
        return Err(Error::InvalidParameter(
            "decimating an open mesh requires boundary preservation".into(),
        ));
    }
    let target = (fraction * mesh.vertex_count() as f64).round() as usize;
    if fraction == 1.0 {
        return Ok(mesh.clone());
    }
    if target < MIN_VERTICES {
        return Err(Error::DecimationTooAggressive { target });
    }

    let mut state = State::new(mesh);
    let mut live = state.alive.iter().filter(|&&a| a).count();
    let mut heap: BinaryHeap<Candidate> = mesh
        .adjacency()
        .edges()
        .iter()
        .filter_map(|&[a, b]| state.candidate(a, b))
        .collect();

    while live > target {
        let Some(c) = heap.pop() else { break };
        if !state.is_current(&c) || !state.can_collapse(&c) {
            continue;
        }
        state.collapse(&c);
        live -= 1;
        for n in state.ring(c.keep) {
            if let Some(next) = state.candidate(c.keep, n) {
                heap.push(next);
            }
        }
    }

    let result = state.into_mesh();
    let reached = result.vertex_count();
    if reached.abs_diff(target) as f64 > 0.01 * target as f64 {
        return Err(Error::DecimationStalled { reached, target });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;

    #[test]
    fn quadric_of_plane_vanishes_on_plane() {
        let q = Quadric::plane(Vector3::z(), -2.0, 1.0);
        assert_eq!(q.error(&Point3::new(5.0, -3.0, 2.0)), 0.0);
        assert!((q.error(&Point3::new(0.0, 0.0, 5.0)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn fraction_one_is_identity() {
        let m = primitives::icosphere(1.0, 2);
        assert_eq!(decimate(&m, 1.0).unwrap(), m);
    }

    #[test]
    fn reaches_target_and_keeps_topology() {
        let m = primitives::torus(3.0, 1.0, 48, 24);
        let d = decimate(&m, 0.5).unwrap();
        assert_eq!(d.vertex_count(), m.vertex_count() / 2);
        let t = d.topology_summary();
        assert!(t.is_watertight);
        assert_eq!(t.euler_characteristic, 0);
        assert_eq!(t.connected_component_count, 1);
    }

    #[test]
    fn too_aggressive() {
        let m = primitives::cube();
        assert!(matches!(decimate(&m, 0.2), Err(Error::DecimationTooAggressive { target: 2 })));
        assert!(decimate(&m, 0.0).is_err());
        assert!(decimate(&m, 1.5).is_err());
    }

    #[test]
    fn open_mesh_keeps_boundary() {
        let m = primitives::grid(12, 12, 1.0);
        let d = decimate(&m, 0.7).unwrap();
        let before = m.topology_summary();
        let after = d.topology_summary();
        assert_eq!(after.boundary_edge_count, before.boundary_edge_count);
        assert_eq!(after.euler_characteristic, 1);
        assert!(decimate_with(&m, 0.7, false).is_err());
    }

    #[test]
    fn stall_is_reported() {
        // every vertex is on the boundary
        let m = primitives::grid(3, 3, 1.0);
        assert!(matches!(decimate(&m, 0.5), Err(Error::DecimationStalled { .. })));
    }
}
