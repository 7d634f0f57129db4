#![allow(dead_code)]

use nalgebra::{Point3, Vector3};
use organslice::mesh::Mesh;
use organslice::primitives;
use organslice::slice::{PlaneSpec, SliceResult};
use rand::Rng;

/// Per-face, per-edge intersection: every face with vertices on both sides
/// (after snapping |d| <= tol to zero) contributes the crossing points of its
/// sign-changing edges and its on-plane vertices.
pub fn naive_segments(mesh: &Mesh, plane: &PlaneSpec, tol: f64) -> Vec<[Point3<f64>; 2]> {
    let n = plane.normal();
    let mut out = Vec::new();
    for f in mesh.faces() {
        let p = f.map(|v| mesh.vertices()[v]);
        let d = p.map(|q| {
            let x = n.dot(&q.coords) - plane.offset();
            if x.abs() <= tol {
                0.0
            } else {
                x
            }
        });
        let above = d.iter().filter(|&&x| x > 0.0).count();
        if above == 0 || above == 3 {
            continue;
        }
        let mut pts = Vec::new();
        for k in 0..3 {
            let (i, j) = (k, (k + 1) % 3);
            let (a, b) = (d[i] > 0.0, d[j] > 0.0);
            if a != b {
                if d[i] == 0.0 {
                    pts.push(p[i]);
                } else if d[j] == 0.0 {
                    pts.push(p[j]);
                } else {
                    let t = d[i] / (d[i] - d[j]);
                    pts.push(p[i] + (p[j] - p[i]) * t);
                }
            }
        }
        assert_eq!(pts.len(), 2);
        if pts[0] != pts[1] {
            out.push([pts[0], pts[1]]);
        }
    }
    out
}

/// Matches two unordered segment multisets endpoint-wise within `tol`.
/// Returns the number of unmatched segments on either side.
pub fn segment_mismatches(a: &[[Point3<f64>; 2]], b: &[[Point3<f64>; 2]], tol: f64) -> usize {
    let close = |p: &Point3<f64>, q: &Point3<f64>| (p - q).norm() <= tol;
    let mut used = vec![false; b.len()];
    let mut missing = 0;
    for s in a {
        let hit = (0..b.len()).find(|&j| {
            !used[j]
                && ((close(&s[0], &b[j][0]) && close(&s[1], &b[j][1]))
                    || (close(&s[0], &b[j][1]) && close(&s[1], &b[j][0])))
        });
        match hit {
            Some(j) => used[j] = true,
            None => missing += 1,
        }
    }
    missing + used.iter().filter(|u| !**u).count()
}

/// Random shared-vertex triangle mesh of `faces` faces.
pub fn random_mesh(rng: &mut impl Rng, faces: usize) -> Mesh {
    match rng.random_range(0..3) {
        0 => {
            let nv = rng.random_range(3..=faces.max(3));
            let vertices: Vec<Point3<f64>> = (0..nv)
                .map(|_| Point3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect();
            let faces = (0..faces)
                .map(|_| loop {
                    let f = [rng.random_range(0..nv), rng.random_range(0..nv), rng.random_range(0..nv)];
                    if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
                        break f;
                    }
                })
                .collect();
            Mesh::new(vertices, faces).unwrap()
        }
        1 => {
            let base = primitives::icosphere(rng.random_range(0.5..3.0), rng.random_range(0..=2));
            jitter(rng, &base, 0.05)
        }
        _ => {
            let major = rng.random_range(6..20);
            let minor = rng.random_range(3..12);
            let base = primitives::torus(3.0, rng.random_range(0.3..1.5), major, minor);
            jitter(rng, &base, 0.05)
        }
    }
}

pub fn jitter(rng: &mut impl Rng, mesh: &Mesh, amount: f64) -> Mesh {
    let pos = mesh
        .vertices()
        .iter()
        .map(|p| p + Vector3::new(rng.random_range(-amount..amount), rng.random_range(-amount..amount), rng.random_range(-amount..amount)))
        .collect();
    mesh.with_positions(pos).unwrap()
}

pub fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n2: f64 = v.norm_squared();
        if n2 > 1e-4 && n2 <= 1.0 {
            return v / n2.sqrt();
        }
    }
}

/// Random plane crossing the mesh's extent along a random direction.
pub fn random_plane(rng: &mut impl Rng, mesh: &Mesh) -> PlaneSpec {
    let n = random_direction(rng);
    let (lo, hi) = extent_along(mesh, &n);
    PlaneSpec::new(n, rng.random_range(lo..hi)).unwrap()
}

pub fn extent_along(mesh: &Mesh, n: &Vector3<f64>) -> (f64, f64) {
    mesh.vertices()
        .iter()
        .map(|p| n.dot(&p.coords))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// True when no vertex lies within `margin` of the plane.
pub fn avoids_vertices(mesh: &Mesh, plane: &PlaneSpec, margin: f64) -> bool {
    mesh.vertices().iter().all(|p| plane.signed_distance(p).abs() > margin)
}

/// Structural loop invariants. Returns a description of the first
/// violation.
pub fn check_loop_invariants(r: &SliceResult, tol: f64) -> Result<(), String> {
    let mut seen = vec![0usize; r.segments.len()];
    for l in &r.loops {
        if l.points.len() < 3 {
            return Err(format!("loop with {} points", l.points.len()));
        }
        if l.points.first() == l.points.last() {
            return Err("loop repeats its first point".into());
        }
        if l.points.len() != l.points_3d.len() {
            return Err("2-D and 3-D point counts differ".into());
        }
        l.segment_ids.iter().for_each(|&s| seen[s] += 1);
    }
    for c in &r.open_chains {
        c.segment_ids.iter().for_each(|&s| seen[s] += 1);
    }
    if let Some(s) = seen.iter().position(|&c| c != 1) {
        return Err(format!("segment {s} used {} times", seen[s]));
    }
    for s in &r.segments {
        for p in s {
            if r.plane.signed_distance(p).abs() > tol {
                return Err(format!("endpoint {p:?} off the plane"));
            }
        }
    }
    for (l, m) in r.loops.iter().zip(&r.metrics) {
        if m.min_feret > m.max_feret {
            return Err("min_feret > max_feret".into());
        }
        let frame = &r.frame;
        for (p2, p3) in l.points.iter().zip(&l.points_3d) {
            if (frame.lift(p2) - p3).norm() > tol {
                return Err("2-D point does not lift back to its 3-D point".into());
            }
        }
    }
    Ok(())
}
