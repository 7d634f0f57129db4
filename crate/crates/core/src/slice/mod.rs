//! Plane/mesh intersection, loop assembly and cross-section metrics.
//!
//! Vertices whose signed distance to the plane is within the snap tolerance
//! are treated as lying exactly on the plane. For assembling segments, such
//! vertices are then counted on the negative side, which is the limit of a
//! plane shifted by an infinitesimal amount along its normal. This keeps
//! every section of a watertight mesh closed, including planes through
//! vertices or along edges:
//!
//! - a face with vertices strictly on both sides yields one segment between
//!   its two edge crossings;
//! - a face with one on-plane vertex and the other two split yields the
//!   on-plane vertex plus one crossing, and the face is not divided;
//! - a face touching the plane in a single vertex yields nothing;
//! - a face with an edge on the plane yields that edge only when its third
//!   vertex is on the positive side;
//! - coplanar faces yield nothing and are counted separately.

mod metrics;
mod raster;
mod subdivide;

pub use metrics::{compute_metrics, convex_hull, feret_diameters, SliceMetrics};
pub use raster::{rasterize_loops, rasterize_slice, SliceMask, Window2, MIN_RESOLUTION};
pub use subdivide::subdivide_crossed_faces;

use std::collections::HashMap;

use nalgebra::{Matrix3, Point2, Point3, Rotation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Snap tolerance relative to the bounding-box diagonal.
pub const DEFAULT_RELATIVE_SNAP_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }

    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis `{other}`"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// The plane `{x : normal . x = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlane")]
pub struct PlaneSpec {
    normal: Vector3<f64>,
    offset: f64,
}

#[derive(Deserialize)]
struct RawPlane {
    normal: Vector3<f64>,
    offset: f64,
}

impl TryFrom<RawPlane> for PlaneSpec {
    type Error = Error;

    fn try_from(raw: RawPlane) -> Result<Self> {
        PlaneSpec::new(raw.normal, raw.offset)
    }
}

impl PlaneSpec {
    /// `normal` must already be unit length within 1e-9.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        if !normal.iter().all(|c| c.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidPlane("non-finite normal or offset".into()));
        }
        let len = normal.norm();
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPlane(format!("normal has length {len}, expected 1")));
        }
        Ok(PlaneSpec { normal, offset })
    }

    /// Normalizes `direction`; `offset` is the signed distance of the plane
    /// from the origin along the resulting unit normal.
    pub fn from_direction(direction: Vector3<f64>, offset: f64) -> Result<Self> {
        if !direction.iter().all(|c| c.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidPlane("non-finite normal or offset".into()));
        }
        let normal = direction
            .try_normalize(f64::MIN_POSITIVE)
            .ok_or_else(|| Error::InvalidPlane("normal has zero length".into()))?;
        Ok(PlaneSpec { normal, offset })
    }

    pub fn axial(axis: Axis, offset: f64) -> Self {
        PlaneSpec {
            normal: axis.unit(),
            offset,
        }
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    /// Right-handed in-plane frame `(u, v, normal)`. `u` is perpendicular
    /// to the world axis least aligned with the normal (lowest index on ties).
    pub fn frame(&self) -> PlaneFrame {
        let n = self.normal;
        let mut axis = 0;
        for k in 1..3 {
            if n[k].abs() < n[axis].abs() {
                axis = k;
            }
        }
        let mut e = Vector3::zeros();
        e[axis] = 1.0;
        let u = e.cross(&n).normalize();
        let v = n.cross(&u);
        PlaneFrame {
            origin: Point3::from(n * self.offset),
            u,
            v,
            normal: n,
        }
    }
}

/// Orthonormal 2-D coordinate system embedded in a plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame {
    pub origin: Point3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl PlaneFrame {
    pub fn project(&self, p: &Point3<f64>) -> Point2<f64> {
        let d = p - self.origin;
        Point2::new(d.dot(&self.u), d.dot(&self.v))
    }

    pub fn lift(&self, q: &Point2<f64>) -> Point3<f64> {
        self.origin + self.u * q.x + self.v * q.y
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SliceOptions {
    /// Absolute on-plane tolerance. `None` means 1e-7 of the mesh's
    /// bounding-box diagonal.
    pub snap_tolerance: Option<f64>,
}

impl SliceOptions {
    pub fn resolve_tolerance(&self, mesh: &Mesh) -> f64 {
        self.snap_tolerance
            .unwrap_or_else(|| DEFAULT_RELATIVE_SNAP_TOLERANCE * mesh.bbox_diagonal())
    }
}

/// Result of intersecting a single edge with a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeIntersection {
    /// Both endpoints strictly on the same side.
    Miss,
    Point(Point3<f64>),
    /// Both endpoints on the plane; resolved at the face level.
    OnPlane,
}

/// Intersects segment `a-b` with `plane`; endpoints within `tolerance` of
/// the plane are returned as-is.
pub fn intersect_edge_plane(a: &Point3<f64>, b: &Point3<f64>, plane: &PlaneSpec, tolerance: f64) -> EdgeIntersection {
    let (da, db) = (plane.signed_distance(a), plane.signed_distance(b));
    match (da.abs() <= tolerance, db.abs() <= tolerance) {
        (true, true) => EdgeIntersection::OnPlane,
        (true, false) => EdgeIntersection::Point(*a),
        (false, true) => EdgeIntersection::Point(*b),
        (false, false) if da * db > 0.0 => EdgeIntersection::Miss,
        (false, false) => {
            let t = da / (da - db);
            EdgeIntersection::Point(a + (b - a) * t)
        }
    }
}

/// Identity of a segment endpoint: either an on-plane mesh vertex or the
/// crossing on the edge between two vertices (smaller index first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EndpointKey {
    Vertex(usize),
    Edge(usize, usize),
}

/// Per-face intersection segments before loop assembly.
#[derive(Debug, Clone)]
pub struct SegmentSoup {
    plane: PlaneSpec,
    tolerance: f64,
    keys: Vec<[EndpointKey; 2]>,
    points: Vec<[Point3<f64>; 2]>,
    faces: Vec<usize>,
    coplanar_face_count: usize,
}

impl SegmentSoup {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segments(&self) -> &[[Point3<f64>; 2]] {
        &self.points
    }

    /// Source face of each segment.
    pub fn faces(&self) -> &[usize] {
        &self.faces
    }
}

/// Snapped signed distances of all vertices.
fn vertex_distances(mesh: &Mesh, plane: &PlaneSpec, tolerance: f64) -> Vec<f64> {
    let snap = |d: f64| if d.abs() <= tolerance { 0.0 } else { d };
    let n = plane.normal;
    let axis = (0..3).find(|&k| n[k] == 1.0 && n.iter().filter(|c| **c == 0.0).count() == 2);
    match axis {
        Some(k) => mesh.vertices().iter().map(|p| snap(p[k] - plane.offset)).collect(),
        None => mesh.vertices().iter().map(|p| snap(plane.signed_distance(p))).collect(),
    }
}

fn edge_crossing(mesh: &Mesh, d: &[f64], a: usize, b: usize) -> (EndpointKey, Point3<f64>) {
    if d[a] == 0.0 {
        return (EndpointKey::Vertex(a), mesh.vertices()[a]);
    }
    if d[b] == 0.0 {
        return (EndpointKey::Vertex(b), mesh.vertices()[b]);
    }
    // fixed evaluation order so both faces of the edge get identical bits
    let (lo, hi) = (a.min(b), a.max(b));
    let t = d[lo] / (d[lo] - d[hi]);
    let (p, q) = (mesh.vertices()[lo], mesh.vertices()[hi]);
    (EndpointKey::Edge(lo, hi), p + (q - p) * t)
}

/// Computes the intersection segment of every face with the plane.
pub fn intersect_faces(mesh: &Mesh, plane: &PlaneSpec, options: &SliceOptions) -> SegmentSoup {
    let tolerance = options.resolve_tolerance(mesh);
    let d = vertex_distances(mesh, plane, tolerance);
    let mut soup = SegmentSoup {
        plane: *plane,
        tolerance,
        keys: Vec::new(),
        points: Vec::new(),
        faces: Vec::new(),
        coplanar_face_count: 0,
    };
    for (fi, f) in mesh.faces().iter().enumerate() {
        let above = f.map(|v| d[v] > 0.0);
        let count = above.iter().filter(|&&a| a).count();
        if count == 0 || count == 3 {
            if f.iter().all(|&v| d[v] == 0.0) {
                soup.coplanar_face_count += 1;
            }
            continue;
        }
        // Start at the edge leaving the positive side so that segment
        // direction follows the face winding.
        let mut start = None;
        let mut end = None;
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if above[k] && !above[(k + 1) % 3] {
                start = Some(edge_crossing(mesh, &d, a, b));
            } else if !above[k] && above[(k + 1) % 3] {
                end = Some(edge_crossing(mesh, &d, a, b));
            }
        }
        let (s, e) = (start.unwrap(), end.unwrap());
        if s.0 == e.0 {
            // touches the plane in one vertex
            continue;
        }
        soup.keys.push([s.0, e.0]);
        soup.points.push([s.1, e.1]);
        soup.faces.push(fi);
    }
    soup
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceLoop {
    /// Points in the plane frame; closure from last to first is implicit.
    pub points: Vec<Point2<f64>>,
    pub points_3d: Vec<Point3<f64>>,
    /// Indices into `SliceResult::segments`.
    pub segment_ids: Vec<usize>,
    /// Set when the loop passed through a junction of more than two
    /// segments and was continued by smallest turning angle.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenChain {
    pub points_3d: Vec<Point3<f64>>,
    pub segment_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub plane: PlaneSpec,
    pub frame: PlaneFrame,
    pub snap_tolerance: f64,
    pub segments: Vec<[Point3<f64>; 2]>,
    pub loops: Vec<SliceLoop>,
    pub open_chains: Vec<OpenChain>,
    /// One entry per loop.
    pub metrics: Vec<SliceMetrics>,
    pub crossed_face_count: usize,
    pub coplanar_face_count: usize,
}

impl SliceResult {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Net cross-section area: outer loops minus holes.
    pub fn total_area(&self) -> f64 {
        self.metrics.iter().map(|m| m.signed_area).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("slice result serializes")
    }
}

pub fn slice(mesh: &Mesh, plane: &PlaneSpec) -> SliceResult {
    slice_with(mesh, plane, &SliceOptions::default())
}

pub fn slice_with(mesh: &Mesh, plane: &PlaneSpec, options: &SliceOptions) -> SliceResult {
    assemble(intersect_faces(mesh, plane, options))
}

/// Slice by the axis-aligned plane `axis = offset`.
pub fn slice_axial(mesh: &Mesh, axis: Axis, offset: f64) -> SliceResult {
    slice(mesh, &PlaneSpec::axial(axis, offset))
}

/// Rotation taking `normal` to `+Y`.
pub fn rotation_to_y(normal: &Vector3<f64>) -> Matrix3<f64> {
    let y = Vector3::y();
    match Rotation3::rotation_between(normal, &y) {
        Some(r) => *r.matrix(),
        None => *Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), std::f64::consts::PI).matrix(),
    }
}

/// Slices by rotating the mesh so that the plane normal becomes `+Y`,
/// cutting with `y = offset`, and rotating the geometry back.
pub fn slice_by_alignment(mesh: &Mesh, plane: &PlaneSpec, options: &SliceOptions) -> Result<SliceResult> {
    let r = rotation_to_y(&plane.normal());
    let rotated = mesh.transform(&r, &Vector3::zeros())?;
    let options = SliceOptions {
        snap_tolerance: Some(options.resolve_tolerance(mesh)),
    };
    let aligned = slice_with(&rotated, &PlaneSpec::axial(Axis::Y, plane.offset()), &options);
    let back = r.transpose();
    let map = |p: &Point3<f64>| Point3::from(back * p.coords);
    let mut result = aligned;
    for s in &mut result.segments {
        *s = s.map(|p| map(&p));
    }
    for l in &mut result.loops {
        for p in &mut l.points_3d {
            *p = map(p);
        }
    }
    for c in &mut result.open_chains {
        for p in &mut c.points_3d {
            *p = map(p);
        }
    }
    result.plane = *plane;
    result.frame = plane.frame();
    for l in &mut result.loops {
        l.points = l.points_3d.iter().map(|p| result.frame.project(p)).collect();
    }
    result.metrics = result.loops.iter().map(|l| compute_metrics(&l.points).expect("loops have >= 3 points")).collect();
    Ok(result)
}

struct Walk {
    nodes: Vec<usize>,
    segments: Vec<usize>,
    ambiguous: bool,
}

/// Chains segments into closed loops and open polylines.
pub fn assemble(soup: SegmentSoup) -> SliceResult {
    let frame = soup.plane.frame();
    let mut node_of: HashMap<EndpointKey, usize> = HashMap::with_capacity(soup.len());
    let mut node_points: Vec<Point3<f64>> = Vec::new();
    let mut seg_nodes: Vec<[usize; 2]> = Vec::with_capacity(soup.len());
    for (keys, pts) in soup.keys.iter().zip(&soup.points) {
        let mut pair = [0; 2];
        for k in 0..2 {
            pair[k] = *node_of.entry(keys[k]).or_insert_with(|| {
                node_points.push(pts[k]);
                node_points.len() - 1
            });
        }
        seg_nodes.push(pair);
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); node_points.len()];
    for (s, pair) in seg_nodes.iter().enumerate() {
        incident[pair[0]].push(s);
        incident[pair[1]].push(s);
    }
    let node_2d: Vec<Point2<f64>> = node_points.iter().map(|p| frame.project(p)).collect();

    let mut used = vec![false; seg_nodes.len()];
    let mut walks: Vec<(Walk, bool)> = Vec::new();

    let walk_from = |start_node: usize, first: usize, used: &mut Vec<bool>| -> (Walk, bool) {
        let mut w = Walk {
            nodes: vec![start_node],
            segments: Vec::new(),
            ambiguous: false,
        };
        let mut seg = first;
        let mut cur = start_node;
        loop {
            used[seg] = true;
            w.segments.push(seg);
            let [a, b] = seg_nodes[seg];
            let next = if a == cur { b } else { a };
            if next == start_node {
                return (w, true);
            }
            w.nodes.push(next);
            let prev = cur;
            cur = next;
            let mut candidates: Vec<usize> = incident[cur].iter().copied().filter(|&s| !used[s]).collect();
            if candidates.len() > 1 && candidates.iter().any(|&s| seg_nodes[s][0] == cur) {
                // keep following face winding through a junction
                candidates.retain(|&s| seg_nodes[s][0] == cur);
                w.ambiguous = true;
            }
            seg = match candidates.len() {
                0 => return (w, false),
                1 => candidates[0],
                _ => {
                    w.ambiguous = true;
                    let incoming = node_2d[cur] - node_2d[prev];
                    *candidates
                        .iter()
                        .min_by(|&&s1, &&s2| {
                            let t1 = turning_angle(&incoming, &outgoing(&seg_nodes, &node_2d, s1, cur));
                            let t2 = turning_angle(&incoming, &outgoing(&seg_nodes, &node_2d, s2, cur));
                            t1.total_cmp(&t2).then(s1.cmp(&s2))
                        })
                        .unwrap()
                }
            };
        }
    };

    // open chains first, from nodes of odd degree
    for node in 0..node_points.len() {
        if incident[node].len() % 2 == 1 {
            while let Some(&s) = incident[node].iter().find(|&&s| !used[s]) {
                walks.push(walk_from(node, s, &mut used));
            }
        }
    }
    for s in 0..seg_nodes.len() {
        if !used[s] {
            walks.push(walk_from(seg_nodes[s][0], s, &mut used));
        }
    }

    let joined = join_open_walks(walks, &node_points, soup.tolerance);

    let mut loops = Vec::new();
    let mut open_chains = Vec::new();
    for (w, closed) in joined {
        if closed && w.nodes.len() >= 3 {
            loops.push(SliceLoop {
                points: w.nodes.iter().map(|&n| node_2d[n]).collect(),
                points_3d: w.nodes.iter().map(|&n| node_points[n]).collect(),
                segment_ids: w.segments,
                ambiguous: w.ambiguous,
            });
        } else {
            let mut nodes = w.nodes;
            if closed {
                nodes.push(nodes[0]);
            }
            open_chains.push(OpenChain {
                points_3d: nodes.iter().map(|&n| node_points[n]).collect(),
                segment_ids: w.segments,
            });
        }
    }
    let metrics = loops
        .iter()
        .map(|l| compute_metrics(&l.points).expect("loops have >= 3 points"))
        .collect();
    SliceResult {
        plane: soup.plane,
        frame,
        snap_tolerance: soup.tolerance,
        segments: soup.points,
        loops,
        open_chains,
        metrics,
        crossed_face_count: soup.faces.len(),
        coplanar_face_count: soup.coplanar_face_count,
    }
}

fn outgoing(seg_nodes: &[[usize; 2]], node_2d: &[Point2<f64>], seg: usize, from: usize) -> Vector2<f64> {
    let [a, b] = seg_nodes[seg];
    let to = if a == from { b } else { a };
    node_2d[to] - node_2d[from]
}

/// Absolute angle between the incoming and outgoing directions.
fn turning_angle(incoming: &Vector2<f64>, out: &Vector2<f64>) -> f64 {
    let cross = incoming.x * out.y - incoming.y * out.x;
    cross.atan2(incoming.dot(out)).abs()
}

/// Joins open polylines whose ends coincide within `tolerance` (geometry
/// that was not welded into shared vertices). Returns `(walk, closed)`.
fn join_open_walks(walks: Vec<(Walk, bool)>, points: &[Point3<f64>], tolerance: f64) -> Vec<(Walk, bool)> {
    let (closed, mut open): (Vec<_>, Vec<_>) = walks.into_iter().partition(|(_, c)| *c);
    let mut out: Vec<(Walk, bool)> = closed;
    if open.is_empty() {
        return out;
    }
    let close = |a: usize, b: usize| (points[a] - points[b]).norm() <= tolerance;
    let mut alive = vec![true; open.len()];
    for i in 0..open.len() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        let mut chain = std::mem::replace(
            &mut open[i].0,
            Walk {
                nodes: vec![],
                segments: vec![],
                ambiguous: false,
            },
        );
        loop {
            let tail = *chain.nodes.last().unwrap();
            let found = (0..open.len()).find_map(|j| {
                if !alive[j] {
                    return None;
                }
                let w = &open[j].0;
                if close(tail, w.nodes[0]) {
                    Some((j, false))
                } else if close(tail, *w.nodes.last().unwrap()) {
                    Some((j, true))
                } else {
                    None
                }
            });
            let Some((j, reversed)) = found else { break };
            alive[j] = false;
            let mut w = std::mem::replace(
                &mut open[j].0,
                Walk {
                    nodes: vec![],
                    segments: vec![],
                    ambiguous: false,
                },
            );
            if reversed {
                w.nodes.reverse();
                w.segments.reverse();
            }
            chain.nodes.extend_from_slice(&w.nodes[1..]);
            chain.segments.extend(w.segments);
            chain.ambiguous |= w.ambiguous;
        }
        let first = chain.nodes[0];
        let last = *chain.nodes.last().unwrap();
        if chain.nodes.len() > 3 && close(first, last) {
            chain.nodes.pop();
            out.push((chain, true));
        } else {
            out.push((chain, false));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;

    #[test]
    fn edge_examples() {
        let y = PlaneSpec::axial(Axis::Y, 1.0);
        assert_eq!(
            intersect_edge_plane(&Point3::origin(), &Point3::new(0.0, 2.0, 0.0), &y, 1e-12),
            EdgeIntersection::Point(Point3::new(0.0, 1.0, 0.0))
        );
        let z = PlaneSpec::axial(Axis::Z, 2.0);
        assert_eq!(
            intersect_edge_plane(&Point3::new(1.0, 3.0, 2.0), &Point3::new(5.0, 7.0, 2.0), &z, 1e-12),
            EdgeIntersection::OnPlane
        );
        let x = PlaneSpec::axial(Axis::X, 1.0);
        // t = 0.25 solved by hand: x(t) = 4t = 1
        assert_eq!(
            intersect_edge_plane(&Point3::origin(), &Point3::new(4.0, 2.0, 0.0), &x, 1e-12),
            EdgeIntersection::Point(Point3::new(1.0, 0.5, 0.0))
        );
        assert_eq!(
            intersect_edge_plane(&Point3::new(2.0, 0.0, 0.0), &Point3::new(4.0, 2.0, 0.0), &x, 1e-12),
            EdgeIntersection::Miss
        );
    }

    #[test]
    fn plane_validation() {
        assert!(PlaneSpec::new(Vector3::new(0.0, 2.0, 0.0), 1.0).is_err());
        assert!(PlaneSpec::from_direction(Vector3::zeros(), 1.0).is_err());
        assert!(PlaneSpec::from_direction(Vector3::new(f64::NAN, 0.0, 1.0), 1.0).is_err());
        let p = PlaneSpec::from_direction(Vector3::new(0.0, 3.0, 4.0), 2.0).unwrap();
        assert!((p.normal().norm() - 1.0).abs() < 1e-15);
        let json = r#"{"normal":[0.0,0.0,0.0],"offset":1.0}"#;
        assert!(serde_json::from_str::<PlaneSpec>(json).is_err());
    }

    #[test]
    fn frame_is_orthonormal_and_round_trips() {
        for n in [Vector3::x(), Vector3::y(), Vector3::z(), Vector3::new(1.0, -2.0, 0.5).normalize()] {
            let plane = PlaneSpec::new(n, 0.7).unwrap();
            let f = plane.frame();
            assert!((f.u.cross(&f.v) - n).norm() < 1e-12);
            let p = f.lift(&Point2::new(0.3, -1.2));
            assert!(plane.signed_distance(&p).abs() < 1e-12);
            assert!((f.project(&p) - Point2::new(0.3, -1.2)).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_cube_mid_section() {
        let r = slice(&primitives::cube(), &PlaneSpec::axial(Axis::Y, 0.5));
        assert_eq!(r.loops.len(), 1);
        assert!(r.open_chains.is_empty());
        assert!((r.metrics[0].area - 1.0).abs() < 1e-12);
        assert!((r.metrics[0].perimeter - 4.0).abs() < 1e-12);
        assert_eq!(r.crossed_face_count, 8);
    }

    #[test]
    fn axial_matches_general() {
        let cube = primitives::cube();
        let a = slice_axial(&cube, Axis::Y, 0.5);
        let b = slice(&cube, &PlaneSpec::new(Vector3::y(), 0.5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn plane_above_cube_is_empty() {
        let r = slice_axial(&primitives::cube(), Axis::Y, 2.0);
        assert!(r.segments.is_empty() && r.loops.is_empty() && r.open_chains.is_empty());
    }

    #[test]
    fn plane_through_cube_face_and_vertices() {
        let cube = primitives::cube();
        // bottom face: coplanar faces counted, outline attributed to the side walls
        let r = slice_axial(&cube, Axis::Y, 0.0);
        assert_eq!(r.coplanar_face_count, 2);
        assert_eq!(r.loops.len(), 1);
        assert!((r.metrics[0].area - 1.0).abs() < 1e-12);
        // top face: the shifted plane misses the solid
        assert!(slice_axial(&cube, Axis::Y, 1.0).loops.is_empty());
        // diagonal plane through two opposite edges
        let diag = PlaneSpec::from_direction(Vector3::new(1.0, -1.0, 0.0), 0.0).unwrap();
        let r = slice(&cube, &diag);
        assert_eq!(r.loops.len(), 1);
        assert!(r.open_chains.is_empty());
        assert!((r.metrics[0].area - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sphere_great_circle() {
        let r = slice_axial(&primitives::icosphere(1.0, 4), Axis::Y, 0.0);
        assert_eq!(r.loops.len(), 1);
        assert!((r.metrics[0].equivalent_diameter - 2.0).abs() < 2.0 * 0.005);
    }

    #[test]
    fn tangent_pole_does_not_crash() {
        let m = primitives::icosphere(1.0, 3);
        // icosphere vertex (0, 1, phi)/|.| is a pole along its own direction
        let pole = m.vertices()[5].coords;
        let plane = PlaneSpec::from_direction(pole, pole.norm()).unwrap();
        let r = slice(&m, &plane);
        assert!(r.loops.len() <= 1);
        let r = slice(&m, &PlaneSpec::from_direction(-pole, -pole.norm()).unwrap());
        assert!(r.loops.len() <= 1);
    }

    #[test]
    fn torus_mid_plane_two_loops() {
        let r = slice_axial(&primitives::torus(3.0, 1.0, 48, 24), Axis::Y, 0.0);
        assert_eq!(r.loops.len(), 2);
        assert!(r.open_chains.is_empty());
        assert!(r.metrics.iter().all(|m| m.signed_area > 0.0));
    }

    #[test]
    fn torus_equator_is_annulus() {
        let r = slice_axial(&primitives::torus(3.0, 1.0, 48, 24), Axis::Z, 0.0);
        assert_eq!(r.loops.len(), 2);
        let holes = r.metrics.iter().filter(|m| m.signed_area < 0.0).count();
        assert_eq!(holes, 1);
        let expected = std::f64::consts::PI * (16.0 - 4.0);
        assert!((r.total_area() - expected).abs() < 0.01 * expected);
    }

    #[test]
    fn open_surface_gives_chains() {
        let r = slice_axial(&primitives::grid(4, 4, 1.0), Axis::Y, 1.5);
        assert!(r.loops.is_empty());
        assert_eq!(r.open_chains.len(), 1);
        assert_eq!(r.open_chains[0].segment_ids.len(), r.segments.len());
    }

    #[test]
    fn unwelded_soup_is_joined_by_tolerance() {
        let cube = primitives::cube();
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for f in cube.faces() {
            let base = vertices.len();
            vertices.extend(f.iter().map(|&v| cube.vertices()[v]));
            faces.push([base, base + 1, base + 2]);
        }
        let soup = Mesh::new(vertices, faces).unwrap();
        let r = slice_axial(&soup, Axis::Y, 0.5);
        assert_eq!(r.loops.len(), 1);
        assert!((r.metrics[0].area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn junction_is_flagged() {
        use crate::mesh::{load_mesh_from_bytes, save_mesh_to_writer, LoadOptions, MeshFormat};
        // two cubes sharing one vertical edge, welded into one mesh
        let a = primitives::centered_cube(1.0);
        let b = a.transform(&Matrix3::identity(), &Vector3::new(1.0, 0.0, 1.0)).unwrap();
        let mut obj = Vec::new();
        save_mesh_to_writer(&primitives::merge(&[&a, &b]), &mut obj, MeshFormat::Obj).unwrap();
        let opts = LoadOptions { format: MeshFormat::Obj, weld_tolerance: Some(1e-9) };
        let (m, _) = load_mesh_from_bytes(&obj, &opts).unwrap();
        assert_eq!(m.vertex_count(), 14);
        let r = slice_axial(&m, Axis::Y, 0.1);
        assert!(r.open_chains.is_empty());
        assert!(r.loops.iter().any(|l| l.ambiguous));
        assert!((r.total_area() - 2.0).abs() < 1e-12, "{}", r.total_area());
    }

    #[test]
    fn alignment_route_matches() {
        let m = primitives::icosphere(1.0, 3);
        let plane = PlaneSpec::from_direction(Vector3::new(0.3, -0.8, 0.4), 0.2).unwrap();
        let direct = slice(&m, &plane);
        let aligned = slice_by_alignment(&m, &plane, &SliceOptions::default()).unwrap();
        assert_eq!(direct.loops.len(), aligned.loops.len());
        for (l1, l2) in direct.loops.iter().zip(&aligned.loops) {
            assert_eq!(l1.points_3d.len(), l2.points_3d.len());
            for p in &l1.points_3d {
                assert!(l2.points_3d.iter().any(|q| (p - q).norm() < 1e-9));
            }
        }
    }
}
