//! Splits faces crossed by a plane so that the cut runs along mesh edges.

use std::collections::HashMap;

use nalgebra::Point3;

use super::{vertex_distances, PlaneSpec, SliceOptions};
use crate::mesh::Mesh;

/// Returns a copy of `mesh` where every face strictly crossed by `plane` is
/// replaced by triangles lying on one side each. New vertices are shared
/// between the two faces of a crossed edge and appended after the original
/// vertices.
pub fn subdivide_crossed_faces(mesh: &Mesh, plane: &PlaneSpec, options: &SliceOptions) -> Mesh {
    let tolerance = options.resolve_tolerance(mesh);
    let d = vertex_distances(mesh, plane, tolerance);
    let mut vertices = mesh.vertices().to_vec();
    let mut faces = Vec::with_capacity(mesh.face_count());
    let mut split: HashMap<(usize, usize), usize> = HashMap::new();
    let mut crossing = |a: usize, b: usize, vertices: &mut Vec<Point3<f64>>| -> usize {
        let (lo, hi) = (a.min(b), a.max(b));
        *split.entry((lo, hi)).or_insert_with(|| {
            let t = d[lo] / (d[lo] - d[hi]);
            let (p, q) = (vertices[lo], vertices[hi]);
            vertices.push(p + (q - p) * t);
            vertices.len() - 1
        })
    };

    for f in mesh.faces() {
        let s = f.map(|v| d[v].partial_cmp(&0.0).map_or(0, |o| o as i8));
        let pos = s.iter().filter(|&&x| x > 0).count();
        let neg = s.iter().filter(|&&x| x < 0).count();
        if pos == 0 || neg == 0 {
            faces.push(*f);
            continue;
        }
        if pos + neg == 2 {
            // one vertex on the plane, the opposite edge crosses it
            let k = (0..3).find(|&k| s[k] == 0).unwrap();
            let (z, x, y) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let p = crossing(x, y, &mut vertices);
            faces.push([z, x, p]);
            faces.push([z, p, y]);
            continue;
        }
        // rotate so the lone vertex comes first
        let lone = if pos == 1 { 1 } else { -1 };
        let k = (0..3).find(|&k| s[k] == lone).unwrap();
        let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
        let p = crossing(a, b, &mut vertices);
        let q = crossing(c, a, &mut vertices);
        faces.push([a, p, q]);
        let diag_pc = (vertices[c] - vertices[p]).norm_squared();
        let diag_bq = (vertices[q] - vertices[b]).norm_squared();
        if diag_pc <= diag_bq {
            faces.push([p, b, c]);
            faces.push([p, c, q]);
        } else {
            faces.push([p, b, q]);
            faces.push([b, c, q]);
        }
    }
    Mesh::new_unchecked(vertices, faces)
}
