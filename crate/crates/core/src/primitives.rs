//! Procedural test and benchmark meshes. All closed shapes are wound with
//! outward-facing normals.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::Point3;

use crate::mesh::Mesh;

/// Unit cube `[0,1]^3`, 8 vertices and 12 faces.
pub fn cube() -> Mesh {
    box_mesh(Point3::origin(), Point3::new(1.0, 1.0, 1.0))
}

/// Cube of the given side length centred on the origin.
pub fn centered_cube(side: f64) -> Mesh {
    let h = side / 2.0;
    box_mesh(Point3::new(-h, -h, -h), Point3::new(h, h, h))
}

pub fn box_mesh(min: Point3<f64>, max: Point3<f64>) -> Mesh {
    let corner = |i: usize| {
        Point3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices = (0..8).map(corner).collect();
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // z = min
        [4, 5, 7],
        [4, 7, 6], // z = max
        [0, 1, 5],
        [0, 5, 4], // y = min
        [2, 6, 7],
        [2, 7, 3], // y = max
        [0, 4, 6],
        [0, 6, 2], // x = min
        [1, 3, 7],
        [1, 7, 5], // x = max
    ];
    Mesh::new_unchecked(vertices, faces)
}

/// Subdivided icosahedron projected onto a sphere. `subdivisions = 4` gives
/// 2562 vertices and 5120 faces.
///
/// The base icosahedron uses the cyclic `(0, ±1, ±φ)` coordinates, so the
/// result is symmetric under coordinate sign flips and cyclic permutation
/// of the axes.
pub fn icosphere(radius: f64, subdivisions: u32) -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Point3::new(x, y, z).coords.normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3<f64>>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a].coords + vertices[b].coords).normalize();
                vertices.push(Point3::from(m));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v = Point3::from(v.coords * radius);
    }
    Mesh::new_unchecked(vertices, faces)
}

/// Cylinder around the Z axis spanning `z in [-height/2, height/2]`.
///
/// `rings` is the number of vertex rings along the axis (at least 2). With
/// `capped`, each end is closed by a triangle fan around a centre vertex.
pub fn cylinder(radius: f64, height: f64, segments: usize, rings: usize, capped: bool) -> Mesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = Vec::with_capacity(segments * rings + 2);
    for r in 0..rings {
        let z = -height / 2.0 + height * r as f64 / (rings - 1) as f64;
        for s in 0..segments {
            let a = TAU * s as f64 / segments as f64;
            vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let id = |r: usize, s: usize| r * segments + s % segments;
    let mut faces = Vec::with_capacity(2 * segments * rings);
    for r in 0..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (id(r, s), id(r, s + 1), id(r + 1, s + 1), id(r + 1, s));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    if capped {
        let bottom = vertices.len();
        vertices.push(Point3::new(0.0, 0.0, -height / 2.0));
        let top = vertices.len();
        vertices.push(Point3::new(0.0, 0.0, height / 2.0));
        for s in 0..segments {
            faces.push([bottom, id(0, s + 1), id(0, s)]);
            faces.push([top, id(rings - 1, s), id(rings - 1, s + 1)]);
        }
    }
    Mesh::new_unchecked(vertices, faces)
}

/// Torus around the Z axis with `major` ring radius and `minor` tube radius.
/// Closed, genus one, `2 * major_segments * minor_segments` faces.
pub fn torus(major: f64, minor: f64, major_segments: usize, minor_segments: usize) -> Mesh {
    assert!(major_segments >= 3 && minor_segments >= 3);
    let mut vertices = Vec::with_capacity(major_segments * minor_segments);
    for i in 0..major_segments {
        let u = TAU * i as f64 / major_segments as f64;
        for j in 0..minor_segments {
            let v = TAU * j as f64 / minor_segments as f64;
            let rho = major + minor * v.cos();
            vertices.push(Point3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % major_segments) * minor_segments + j % minor_segments;
    let mut faces = Vec::with_capacity(2 * major_segments * minor_segments);
    for i in 0..major_segments {
        for j in 0..minor_segments {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Mesh::new_unchecked(vertices, faces)
}

/// Flat `nx` by `ny` quad grid in the `z = 0` plane, two triangles per quad.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Mesh {
    assert!(nx >= 1 && ny >= 1);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new_unchecked(vertices, faces)
}

/// Concatenates meshes without merging any vertices.
pub fn merge(meshes: &[&Mesh]) -> Mesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for m in meshes {
        let base = vertices.len();
        vertices.extend_from_slice(m.vertices());
        faces.extend(m.faces().iter().map(|f| f.map(|i| i + base)));
    }
    Mesh::new_unchecked(vertices, faces)
}
