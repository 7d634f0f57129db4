//! Discrete Gaussian (angle deficit) and mean (cotangent Laplacian)
//! curvature with Voronoi-mixed vertex areas.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Per-vertex curvature. Entries of vertices whose incident ring has zero
/// area (or no faces at all) are NaN and `mixed_area` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub gaussian: Vec<f64>,
    pub mean: Vec<f64>,
    pub mixed_area: Vec<f64>,
}

impl CurvatureField {
    pub fn is_defined(&self, v: usize) -> bool {
        self.mixed_area[v] > 0.0
    }

    pub fn undefined_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mixed_area.len()).filter(|&v| !self.is_defined(v))
    }

    /// `sum_v gaussian(v) * mixed_area(v)` over defined vertices, i.e. the
    /// total angle deficit.
    pub fn total_gaussian_curvature(&self) -> f64 {
        self.gaussian
            .iter()
            .zip(&self.mixed_area)
            .filter(|(_, &a)| a > 0.0)
            .map(|(k, a)| k * a)
            .sum()
    }

    pub fn total_mixed_area(&self) -> f64 {
        self.mixed_area.iter().sum()
    }
}

struct Corner {
    angle: f64,
    cot: f64,
}

fn corner(to_b: Vector3<f64>, to_c: Vector3<f64>) -> Corner {
    let cross = to_b.cross(&to_c).norm();
    let dot = to_b.dot(&to_c);
    Corner {
        angle: cross.atan2(dot),
        cot: dot / cross,
    }
}

pub fn compute_curvature(mesh: &Mesh) -> Result<CurvatureField> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let n = mesh.vertex_count();
    let pos = mesh.vertices();
    let mut angle_sum = vec![0.0; n];
    let mut area = vec![0.0; n];
    let mut laplacian = vec![Vector3::zeros(); n];
    let mut normal = vec![Vector3::zeros(); n];

    for f in mesh.faces() {
        let p = f.map(|i| pos[i].coords);
        let e = [p[1] - p[0], p[2] - p[1], p[0] - p[2]];
        let scale = e.iter().map(|x| x.norm_squared()).fold(0.0, f64::max);
        let cross = e[0].cross(&(p[2] - p[0]));
        let face_area = 0.5 * cross.norm();
        let degenerate = !(face_area > f64::EPSILON * scale);

        let corners = [
            corner(p[1] - p[0], p[2] - p[0]),
            corner(p[2] - p[1], p[0] - p[1]),
            corner(p[0] - p[2], p[1] - p[2]),
        ];
        for k in 0..3 {
            angle_sum[f[k]] += corners[k].angle;
        }
        if degenerate {
            continue;
        }
        let unit = cross / (2.0 * face_area);
        for k in 0..3 {
            normal[f[k]] += unit * corners[k].angle;
        }

        // corner k is opposite edge (k+1, k+2)
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let w = 0.5 * corners[k].cot;
            let d = p[j] - p[i];
            laplacian[f[i]] += w * d;
            laplacian[f[j]] -= w * d;
        }

        let obtuse = (0..3).find(|&k| corners[k].angle > PI / 2.0);
        match obtuse {
            None => {
                for k in 0..3 {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    // Voronoi region of vertex k: edges (k,i) and (k,j) with
                    // cotangents of the opposite corners j and i.
                    let ki = (p[i] - p[k]).norm_squared();
                    let kj = (p[j] - p[k]).norm_squared();
                    area[f[k]] += (ki * corners[j].cot + kj * corners[i].cot) / 8.0;
                }
            }
            Some(o) => {
                for k in 0..3 {
                    area[f[k]] += if k == o { face_area / 2.0 } else { face_area / 4.0 };
                }
            }
        }
    }

    let boundary = super::boundary_mask(mesh);
    let mut gaussian = vec![f64::NAN; n];
    let mut mean = vec![f64::NAN; n];
    for v in 0..n {
        if !(area[v] > 0.0) {
            area[v] = 0.0;
            continue;
        }
        let full = if boundary[v] { PI } else { TAU };
        gaussian[v] = (full - angle_sum[v]) / area[v];
        let h = laplacian[v].norm() / (2.0 * area[v]);
        // the Laplacian points inward on a convex, outward-wound surface
        mean[v] = if laplacian[v].dot(&normal[v]) > 0.0 { -h } else { h };
    }
    Ok(CurvatureField {
        gaussian,
        mean,
        mixed_area: area,
    })
}
