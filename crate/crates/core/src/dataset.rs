//! Batch generation of labelled slice masks.
//!
//! Planes are planned in canonical order (sweep entry, rotation, offset),
//! followed by the seeded random directions. Slicing runs in parallel; files
//! and the manifest are written in plan order, so output depends only on the
//! mesh and the spec.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Point2, Point3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{check_orthonormal, Mesh};
use crate::slice::{rasterize_slice, slice, Axis, PlaneSpec, SliceResult, Window2, MIN_RESOLUTION};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const DEFAULT_RESOLUTION: u32 = 256;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Axis(Axis),
    Normal(Vector3<f64>),
}

impl Direction {
    fn unit(&self) -> Result<Vector3<f64>> {
        match self {
            Direction::Axis(a) => Ok(a.unit()),
            Direction::Normal(n) => Ok(PlaneSpec::from_direction(*n, 0.0)?.normal()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offsets {
    List(Vec<f64>),
    /// `count` evenly spaced values from `start` to `stop` inclusive.
    Range { start: f64, stop: f64, count: usize },
}

impl Offsets {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Offsets::List(v) => v.clone(),
            Offsets::Range { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSweep {
    pub direction: Direction,
    pub offsets: Offsets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSpec {
    Matrix([[f64; 3]; 3]),
    /// Degrees about the fixed X, Y, then Z axes.
    EulerDegrees([f64; 3]),
}

impl RotationSpec {
    pub fn matrix(&self) -> Matrix3<f64> {
        match self {
            RotationSpec::Matrix(rows) => Matrix3::from_fn(|i, j| rows[i][j]),
            RotationSpec::EulerDegrees([x, y, z]) => {
                *Rotation3::from_euler_angles(x.to_radians(), y.to_radians(), z.to_radians()).matrix()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub model_id: String,
    pub sweeps: Vec<AxisSweep>,
    /// Applied about the bounding-box centre; empty means identity only.
    pub rotations: Vec<RotationSpec>,
    pub resolution: u32,
    pub label: String,
    pub seed: u64,
    pub random_direction_count: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            model_id: "model".into(),
            sweeps: Vec::new(),
            rotations: Vec::new(),
            resolution: DEFAULT_RESOLUTION,
            label: String::new(),
            seed: 0,
            random_direction_count: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!(
                "resolution must be >= {MIN_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        for s in &self.sweeps {
            s.direction.unit()?;
            let values = s.offsets.values();
            if values.is_empty() {
                return Err(Error::InvalidParameter("every sweep needs at least one offset".into()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("offsets must be finite".into()));
            }
        }
        for r in &self.rotations {
            check_orthonormal(&r.matrix())?;
        }
        if self.sweeps.is_empty() && self.random_direction_count == 0 {
            return Err(Error::InvalidParameter("sweep plans no slices".into()));
        }
        Ok(())
    }

    fn rotation_matrices(&self) -> Vec<Matrix3<f64>> {
        if self.rotations.is_empty() {
            vec![Matrix3::identity()]
        } else {
            self.rotations.iter().map(RotationSpec::matrix).collect()
        }
    }

    /// `|rotations| * sum |offsets| + random_direction_count`.
    pub fn planned_count(&self) -> usize {
        let offsets: usize = self.sweeps.iter().map(|s| s.offsets.values().len()).sum();
        self.rotation_matrices().len() * offsets + self.random_direction_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub empty: bool,
    pub net_area: f64,
    pub perimeter: f64,
    pub equivalent_diameter: f64,
    pub max_feret: f64,
    pub min_feret: f64,
}

impl MetricsSummary {
    /// Perimeter sums all loops; Feret diameters and equivalent diameter
    /// are those of the largest loop.
    pub fn of(result: &SliceResult) -> Self {
        let largest = result.metrics.iter().max_by(|a, b| a.area.total_cmp(&b.area));
        MetricsSummary {
            empty: result.loops.is_empty(),
            net_area: result.total_area(),
            perimeter: result.metrics.iter().map(|m| m.perimeter).sum(),
            equivalent_diameter: largest.map_or(0.0, |m| m.equivalent_diameter),
            max_feret: largest.map_or(0.0, |m| m.max_feret),
            min_feret: largest.map_or(0.0, |m| m.min_feret),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub filename: String,
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub rotation: Matrix3<f64>,
    pub loop_count: usize,
    pub metrics: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub model_id: String,
    pub label: String,
    pub tool_version: String,
    pub seed: u64,
    pub records: Vec<ManifestRecord>,
}

struct PlannedSlice {
    rotation: Matrix3<f64>,
    normal: Vector3<f64>,
    offset: f64,
}

fn plan(mesh: &Mesh, spec: &SweepSpec) -> Result<Vec<PlannedSlice>> {
    let mut planned = Vec::with_capacity(spec.planned_count());
    for sweep in &spec.sweeps {
        let normal = sweep.direction.unit()?;
        for rotation in spec.rotation_matrices() {
            for offset in sweep.offsets.values() {
                planned.push(PlannedSlice { rotation, normal, offset });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.random_direction_count {
        // rejection-sample a uniform direction
        let normal = loop {
            let v: Vector3<f64> = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n2 = v.norm_squared();
            if n2 > 1e-6 && n2 <= 1.0 {
                break v / n2.sqrt();
            }
        };
        let (lo, hi) = mesh
            .vertices()
            .iter()
            .map(|p| normal.dot(&p.coords))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let t: f64 = rng.random_range(0.05..0.95);
        planned.push(PlannedSlice {
            rotation: Matrix3::identity(),
            normal,
            offset: lo + (hi - lo) * t,
        });
    }
    Ok(planned)
}

fn rotate_about(mesh: &Mesh, rotation: &Matrix3<f64>, center: &Point3<f64>) -> Mesh {
    if *rotation == Matrix3::identity() {
        return mesh.clone();
    }
    let pos = mesh
        .vertices()
        .iter()
        .map(|p| center + rotation * (p - center))
        .collect();
    mesh.with_positions(pos).expect("same vertex count")
}

/// Window shared by all slices of one plane orientation: centred on the
/// projected bounding-box centre, wide enough for any section.
fn raster_window(plane: &PlaneSpec, center: &Point3<f64>, diagonal: f64) -> Window2 {
    let c = plane.frame().project(center);
    let half = 0.55 * diagonal.max(f64::MIN_POSITIVE);
    Window2 {
        min: Point2::new(c.x - half, c.y - half),
        max: Point2::new(c.x + half, c.y + half),
    }
}

pub fn image_filename(index: usize) -> String {
    format!("slice_{index:05}.png")
}

/// Slices, rasterizes and writes every planned plane plus `manifest.tsv`
/// into `out_dir`.
pub fn generate(mesh: &Mesh, spec: &SweepSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let bbox = mesh.bounding_box().expect("non-empty mesh");
    let center = bbox.center();
    let diagonal = bbox.diagonal();
    let planned = plan(mesh, spec)?;

    let mut rotated: Vec<(Matrix3<f64>, Mesh)> = Vec::new();
    for p in &planned {
        if !rotated.iter().any(|(r, _)| *r == p.rotation) {
            rotated.push((p.rotation, rotate_about(mesh, &p.rotation, &center)));
        }
    }

    let outputs: Vec<Result<ManifestRecord>> = planned
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let m = &rotated.iter().find(|(r, _)| *r == p.rotation).unwrap().1;
            let plane = PlaneSpec::new(p.normal, p.offset)?;
            let result = slice(m, &plane);
            let window = raster_window(&plane, &center, diagonal);
            let mask = rasterize_slice(&result, spec.resolution, Some(window))?;
            let filename = image_filename(index);
            mask.save_png(out_dir.join(&filename))?;
            Ok(ManifestRecord {
                filename,
                normal: p.normal,
                offset: p.offset,
                rotation: p.rotation,
                loop_count: result.loops.len(),
                metrics: MetricsSummary::of(&result),
            })
        })
        .collect();
    let records = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        model_id: spec.model_id.clone(),
        label: spec.label.clone(),
        tool_version: TOOL_VERSION.to_string(),
        seed: spec.seed,
        records,
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_tsv()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn join_floats<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_floats(field: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = field
        .split(',')
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| manifest_error(format!("bad number in {field:?}: {e}")))?;
    if values.len() != expected {
        return Err(manifest_error(format!("expected {expected} values in {field:?}")));
    }
    Ok(values)
}

fn manifest_error(message: String) -> Error {
    Error::Parse {
        format: "manifest".into(),
        message,
    }
}

const HEADER_KEYS: [&str; 4] = ["model_id", "label", "tool_version", "seed"];

impl DatasetManifest {
    /// Header line of `key=value` fields, then one tab-separated record per
    /// image: filename, normal, offset, rotation (row-major), loop count,
    /// metrics summary.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let values = [
            escape(&self.model_id),
            escape(&self.label),
            escape(&self.tool_version),
            self.seed.to_string(),
        ];
        let header: Vec<String> = HEADER_KEYS.iter().zip(values).map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "#{}", header.join("\t")).unwrap();
        for r in &self.records {
            let rows: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| r.rotation[(i, j)]).collect();
            let m = &r.metrics;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\tempty={};net_area={};perimeter={};equivalent_diameter={};max_feret={};min_feret={}",
                escape(&r.filename),
                join_floats(r.normal.iter()),
                r.offset,
                join_floats(&rows),
                r.loop_count,
                m.empty,
                m.net_area,
                m.perimeter,
                m.equivalent_diameter,
                m.max_feret,
                m.min_feret,
            )
            .unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| manifest_error("missing header line".into()))?;
        let mut values = [String::new(), String::new(), String::new(), String::new()];
        for field in header.split('\t') {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| manifest_error(format!("bad header field {field:?}")))?;
            let slot = HEADER_KEYS
                .iter()
                .position(|&h| h == k)
                .ok_or_else(|| manifest_error(format!("unknown header key {k:?}")))?;
            values[slot] = unescape(v);
        }
        let seed = values[3]
            .parse()
            .map_err(|_| manifest_error(format!("bad seed {:?}", values[3])))?;
        let mut records = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(manifest_error(format!("expected 6 fields, got {}", f.len())));
            }
            let normal = parse_floats(f[1], 3)?;
            let rot = parse_floats(f[3], 9)?;
            let mut summary = [0.0; 5];
            let mut empty = None;
            for kv in f[5].split(';') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| manifest_error(format!("bad metrics field {kv:?}")))?;
                let slot = match k {
                    "empty" => {
                        empty = Some(v == "true");
                        continue;
                    }
                    "net_area" => 0,
                    "perimeter" => 1,
                    "equivalent_diameter" => 2,
                    "max_feret" => 3,
                    "min_feret" => 4,
                    _ => return Err(manifest_error(format!("unknown metric {k:?}"))),
                };
                summary[slot] = v.parse().map_err(|_| manifest_error(format!("bad metric {kv:?}")))?;
            }
            records.push(ManifestRecord {
                filename: unescape(f[0]),
                normal: Vector3::new(normal[0], normal[1], normal[2]),
                offset: f[2].parse().map_err(|_| manifest_error(format!("bad offset {:?}", f[2])))?,
                rotation: Matrix3::from_row_slice(&rot),
                loop_count: f[4].parse().map_err(|_| manifest_error(format!("bad loop count {:?}", f[4])))?,
                metrics: MetricsSummary {
                    empty: empty.ok_or_else(|| manifest_error("missing empty flag".into()))?,
                    net_area: summary[0],
                    perimeter: summary[1],
                    equivalent_diameter: summary[2],
                    max_feret: summary[3],
                    min_feret: summary[4],
                },
            });
        }
        Ok(DatasetManifest {
            model_id: values[0].clone(),
            label: values[1].clone(),
            tool_version: values[2].clone(),
            seed,
            records,
        })
    }
}

pub fn read_manifest(dir_or_file: impl AsRef<Path>) -> Result<DatasetManifest> {
    let p = dir_or_file.as_ref();
    let path: PathBuf = if p.is_dir() { p.join(MANIFEST_FILE) } else { p.to_path_buf() };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    DatasetManifest::from_tsv(&text)
}
