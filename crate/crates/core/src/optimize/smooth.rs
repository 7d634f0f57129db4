//! Umbrella-operator smoothing: plain Laplacian and Taubin lambda/mu.

use nalgebra::{Point3, Vector3};

use super::{OptimizeParams, SmoothingKind};
use crate::error::Result;
use crate::mesh::Mesh;

/// Vertex neighbourhoods in CSR form.
struct Neighbours {
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

impl Neighbours {
    fn new(mesh: &Mesh) -> Self {
        let n = mesh.vertex_count();
        let edges = mesh.adjacency().edges();
        let mut degree = vec![0usize; n];
        for &[a, b] in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut ids = vec![0; offsets[n]];
        for &[a, b] in edges {
            ids[fill[a]] = b;
            fill[a] += 1;
            ids[fill[b]] = a;
            fill[b] += 1;
        }
        Neighbours { offsets, ids }
    }

    fn of(&self, v: usize) -> &[usize] {
        &self.ids[self.offsets[v]..self.offsets[v + 1]]
    }
}

fn step(pos: &[Point3<f64>], nb: &Neighbours, fixed: &[bool], factor: f64) -> Vec<Point3<f64>> {
    (0..pos.len())
        .map(|v| {
            let ring = nb.of(v);
            if fixed[v] || ring.is_empty() {
                return pos[v];
            }
            let sum: Vector3<f64> = ring.iter().map(|&u| pos[u].coords).sum();
            let delta = sum / ring.len() as f64 - pos[v].coords;
            pos[v] + delta * factor
        })
        .collect()
}

/// Moves vertices only; connectivity is untouched. Boundary vertices stay
/// fixed when `preserve_boundary` is set.
pub fn smooth(mesh: &Mesh, params: &OptimizeParams) -> Result<Mesh> {
    params.validate()?;
    if params.smoothing_iterations == 0 || mesh.is_empty() {
        return Ok(mesh.clone());
    }
    let nb = Neighbours::new(mesh);
    let fixed = if params.preserve_boundary {
        crate::analysis::boundary_mask(mesh)
    } else {
        vec![false; mesh.vertex_count()]
    };
    let mut pos = mesh.vertices().to_vec();
    for _ in 0..params.smoothing_iterations {
        pos = step(&pos, &nb, &fixed, params.taubin_lambda);
        if params.smoothing_kind == SmoothingKind::Taubin {
            pos = step(&pos, &nb, &fixed, params.taubin_mu);
        }
    }
    mesh.with_positions(pos)
}
