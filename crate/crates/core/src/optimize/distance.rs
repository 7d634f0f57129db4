//! Sampled symmetric Hausdorff distance between triangle meshes.

use std::collections::HashMap;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::mesh::Mesh;

/// Closest point to `p` on triangle `abc`.
pub fn closest_point_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = va + vb + vc;
    if !(denom > 0.0) {
        // degenerate triangle: nearest of its edges
        return [(a, b), (b, c), (c, a)]
            .into_iter()
            .map(|(s, t)| closest_point_on_segment(p, s, t))
            .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
            .unwrap();
    }
    a + ab * (vb / denom) + ac * (vc / denom)
}

fn closest_point_on_segment(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    a + ab * ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

/// Uniform grid of triangle bounding boxes for nearest-surface queries.
pub struct SurfaceIndex<'a> {
    mesh: &'a Mesh,
    origin: Point3<f64>,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
    max_ring: i64,
}

impl<'a> SurfaceIndex<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let bbox = mesh.bounding_box().expect("non-empty mesh");
        let f = mesh.face_count().max(1) as f64;
        let extent = bbox.extent();
        let mut cell = 2.0 * (mesh.surface_area() / f).sqrt();
        if !(cell > 0.0) {
            cell = bbox.diagonal().max(1.0) / f.cbrt();
        }
        let max_dim = extent.max();
        // keep the grid bounded for very thin or very fine meshes
        cell = cell.max(max_dim / 1024.0).max(f64::MIN_POSITIVE);
        let origin = bbox.min;
        let key = |p: &Point3<f64>| -> [i64; 3] {
            let r = (p - origin) / cell;
            [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
        };
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (fi, tri) in mesh.faces().iter().enumerate() {
            let pts = tri.map(|v| mesh.vertices()[v]);
            let lo = key(&pts[0].inf(&pts[1]).inf(&pts[2]));
            let hi = key(&pts[0].sup(&pts[1]).sup(&pts[2]));
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        cells.entry([i, j, k]).or_default().push(fi as u32);
                    }
                }
            }
        }
        let max_ring = (max_dim / cell).ceil() as i64 + 2;
        SurfaceIndex {
            mesh,
            origin,
            cell,
            cells,
            max_ring,
        }
    }

    fn face_distance2(&self, p: &Point3<f64>, f: usize) -> f64 {
        let [a, b, c] = self.mesh.triangle(f);
        (closest_point_on_triangle(p, &a, &b, &c) - p).norm_squared()
    }

    /// Distance from `p` to the nearest point of the surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let r = (p - self.origin) / self.cell;
        let home = [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64];
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            for i in -ring..=ring {
                for j in -ring..=ring {
                    for k in -ring..=ring {
                        if i.abs().max(j.abs()).max(k.abs()) != ring {
                            continue;
                        }
                        if let Some(list) = self.cells.get(&[home[0] + i, home[1] + j, home[2] + k]) {
                            for &f in list {
                                best = best.min(self.face_distance2(p, f as usize));
                            }
                        }
                    }
                }
            }
            // anything outside the visited cube is at least `ring` cells away
            let reach = ring as f64 * self.cell;
            if best <= reach * reach {
                return best.sqrt();
            }
            ring += 1;
            if ring > self.max_ring {
                break;
            }
        }
        // far outside the grid: exhaustive
        (0..self.mesh.face_count())
            .map(|f| self.face_distance2(p, f))
            .fold(best, f64::min)
            .sqrt()
    }
}

/// Points at which a surface is probed: all vertices and face centroids.
pub fn surface_samples(mesh: &Mesh) -> Vec<Point3<f64>> {
    let mut s = mesh.vertices().to_vec();
    s.extend((0..mesh.face_count()).map(|f| {
        let [a, b, c] = mesh.triangle(f);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }));
    s
}

/// Largest distance from any sample of `from` to the surface of `to`.
pub fn one_sided_distance(from: &Mesh, to: &Mesh) -> f64 {
    let index = SurfaceIndex::new(to);
    surface_samples(from)
        .par_iter()
        .map(|p| index.distance(p))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance, measured on vertex and face-centroid
/// samples of both meshes.
pub fn hausdorff_distance(a: &Mesh, b: &Mesh) -> f64 {
    one_sided_distance(a, b).max(one_sided_distance(b, a))
}
