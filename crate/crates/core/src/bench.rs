//! Repeatable slice timing for original and decimated meshes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::optimize::decimate;
use crate::slice::{assemble, intersect_faces, Axis, PlaneSpec, SliceOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model_id: String,
    pub variant: Variant,
    pub axis: Axis,
    pub offset: f64,
    pub vertex_count: usize,
    pub face_count: usize,
    /// Median wall time of a full slice, in seconds.
    pub wall_time: f64,
    /// Median time spent intersecting faces.
    pub intersect_time: f64,
    /// Median time spent chaining segments into loops.
    pub assemble_time: f64,
    /// Standard deviation over mean of the per-run wall times.
    pub coefficient_of_variation: f64,
    pub runs: Vec<f64>,
    pub loop_count: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if n < 2.0 || mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean
}

/// Times `runs` slices of `mesh` by the plane `axis = offset` on the
/// calling thread.
pub fn bench_slice(mesh: &Mesh, model_id: &str, variant: Variant, axis: Axis, offset: f64, runs: usize) -> Result<BenchRecord> {
    if runs == 0 {
        return Err(Error::InvalidParameter("bench needs at least one run".into()));
    }
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let plane = PlaneSpec::axial(axis, offset);
    let options = SliceOptions::default();
    let mut totals = Vec::with_capacity(runs);
    let mut intersect = Vec::with_capacity(runs);
    let mut chain = Vec::with_capacity(runs);
    let mut loop_count = 0;
    for _ in 0..runs {
        let t0 = Instant::now();
        let soup = intersect_faces(mesh, &plane, &options);
        let t1 = Instant::now();
        let result = assemble(soup);
        let t2 = Instant::now();
        loop_count = result.loops.len();
        intersect.push((t1 - t0).as_secs_f64());
        chain.push((t2 - t1).as_secs_f64());
        totals.push((t2 - t0).as_secs_f64().max(f64::MIN_POSITIVE));
    }
    Ok(BenchRecord {
        model_id: model_id.to_string(),
        variant,
        axis,
        offset,
        vertex_count: mesh.vertex_count(),
        face_count: mesh.face_count(),
        wall_time: median(&totals),
        intersect_time: median(&intersect),
        assemble_time: median(&chain),
        coefficient_of_variation: coefficient_of_variation(&totals),
        runs: totals,
        loop_count,
    })
}

/// Benchmarks the original mesh and its decimation to `fraction`.
pub fn bench_pair(mesh: &Mesh, model_id: &str, axis: Axis, offset: f64, fraction: f64, runs: usize) -> Result<[BenchRecord; 2]> {
    let optimized = decimate(mesh, fraction)?;
    Ok([
        bench_slice(mesh, model_id, Variant::Original, axis, offset, runs)?,
        bench_slice(&optimized, model_id, Variant::Optimized, axis, offset, runs)?,
    ])
}
