//! Decimation and smoothing for display-ready meshes.

mod decimate;
mod distance;
mod smooth;

pub use decimate::{decimate, decimate_with, MIN_VERTICES};
pub use distance::{
    closest_point_on_triangle, hausdorff_distance, one_sided_distance, surface_samples, SurfaceIndex,
};
pub use smooth::smooth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKind {
    Laplacian,
    Taubin,
}

impl std::str::FromStr for SmoothingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "laplacian" => Ok(SmoothingKind::Laplacian),
            "taubin" => Ok(SmoothingKind::Taubin),
            _ => Err(Error::InvalidParameter(format!("unknown smoothing kind {s:?}"))),
        }
    }
}

/// `taubin_lambda` is also the step size of plain Laplacian smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeParams {
    pub target_vertex_fraction: f64,
    pub smoothing_iterations: usize,
    pub smoothing_kind: SmoothingKind,
    pub taubin_lambda: f64,
    pub taubin_mu: f64,
    pub preserve_boundary: bool,
}

impl Default for OptimizeParams {
    fn default() -> Self {
        OptimizeParams {
            target_vertex_fraction: 0.5,
            smoothing_iterations: 10,
            smoothing_kind: SmoothingKind::Taubin,
            taubin_lambda: 0.5,
            taubin_mu: -0.53,
            preserve_boundary: true,
        }
    }
}

impl OptimizeParams {
    pub fn validate(&self) -> Result<()> {
        let f = self.target_vertex_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidParameter(format!("target_vertex_fraction must be in (0, 1], got {f}")));
        }
        let (l, m) = (self.taubin_lambda, self.taubin_mu);
        match self.smoothing_kind {
            SmoothingKind::Taubin if !(l > 0.0 && m < 0.0 && -m > l) => Err(Error::InvalidParameter(format!(
                "taubin needs lambda > 0 > mu and |mu| > lambda, got lambda={l} mu={m}"
            ))),
            SmoothingKind::Laplacian if !(l > 0.0 && l <= 1.0) => Err(Error::InvalidParameter(format!(
                "laplacian step must be in (0, 1], got {l}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Decimates to the target fraction, then smooths.
pub fn optimize(mesh: &Mesh, params: &OptimizeParams) -> Result<Mesh> {
    params.validate()?;
    let reduced = decimate_with(mesh, params.target_vertex_fraction, params.preserve_boundary)?;
    smooth(&reduced, params)
}
