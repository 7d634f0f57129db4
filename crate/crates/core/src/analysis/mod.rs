//! Risky-vertex extraction: topological error vertices, boundary vertices,
//! near-flat vertices, isolated substructures and elongated faces, plus
//! set-based removal.

mod curvature;

pub use curvature::{compute_curvature, CurvatureField};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{compact, face_components, Mesh};

pub type IndexSet = BTreeSet<usize>;

pub(crate) fn boundary_mask(mesh: &Mesh) -> Vec<bool> {
    let adj = mesh.adjacency();
    let mut mask = vec![false; mesh.vertex_count()];
    for e in adj.boundary_edges() {
        for v in adj.edge(e) {
            mask[v] = true;
        }
    }
    mask
}

/// Vertices incident to at least one edge that borders exactly one face.
pub fn detect_boundary(mesh: &Mesh) -> IndexSet {
    boundary_mask(mesh)
        .into_iter()
        .enumerate()
        .filter_map(|(v, b)| b.then_some(v))
        .collect()
}

/// Topological error vertices: unreferenced, on a non-manifold edge,
/// non-manifold (more than one face fan), or with undefined curvature.
pub fn detect_errors(mesh: &Mesh) -> IndexSet {
    match compute_curvature(mesh) {
        Ok(field) => detect_errors_with(mesh, &field),
        // no faces: every vertex is unreferenced
        Err(_) => (0..mesh.vertex_count()).collect(),
    }
}

fn detect_errors_with(mesh: &Mesh, field: &CurvatureField) -> IndexSet {
    let adj = mesh.adjacency();
    let mut errors = IndexSet::new();
    for v in 0..mesh.vertex_count() {
        if adj.vertex_faces(v).is_empty() || !field.is_defined(v) || !is_single_fan(mesh, v) {
            errors.insert(v);
        }
    }
    for e in adj.non_manifold_edges() {
        errors.extend(adj.edge(e));
    }
    errors
}

/// True when the faces around `v` are connected through edges incident to `v`.
fn is_single_fan(mesh: &Mesh, v: usize) -> bool {
    let incident = mesh.adjacency().vertex_faces(v);
    if incident.len() <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..incident.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut by_spoke: HashMap<usize, usize> = HashMap::new();
    for (local, &f) in incident.iter().enumerate() {
        for &w in mesh.faces()[f].iter().filter(|&&w| w != v) {
            if let Some(&other) = by_spoke.get(&w) {
                let (a, b) = (find(&mut parent, local), find(&mut parent, other));
                parent[a.max(b)] = a.min(b);
            } else {
                by_spoke.insert(w, local);
            }
        }
    }
    (0..incident.len()).all(|i| find(&mut parent, i) == 0)
}

/// Longest edge over shortest altitude; infinite for zero-area faces.
pub fn aspect_ratio(mesh: &Mesh, face: usize) -> f64 {
    let [a, b, c] = mesh.triangle(face);
    let longest2 = [(b - a).norm_squared(), (c - b).norm_squared(), (a - c).norm_squared()]
        .into_iter()
        .fold(0.0, f64::max);
    let twice_area = (b - a).cross(&(c - a)).norm();
    if twice_area > 0.0 {
        longest2 / twice_area
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeParams {
    pub eps_gaussian: f64,
    pub eps_mean: f64,
    /// Components with fewer faces than this are reported as isolated.
    pub component_size_threshold: usize,
    pub aspect_ratio_threshold: f64,
}

impl AnalyzeParams {
    /// Scale-aware defaults: `1e-4 / d^2` and `1e-4 / d` for the flatness
    /// thresholds (`d` the bounding-box diagonal), components below 1% of
    /// the faces, aspect ratio 10.
    pub fn defaults_for(mesh: &Mesh) -> Self {
        let d = mesh.bbox_diagonal();
        let d = if d > 0.0 { d } else { 1.0 };
        AnalyzeParams {
            eps_gaussian: 1e-4 / (d * d),
            eps_mean: 1e-4 / d,
            component_size_threshold: (mesh.face_count() as f64 * 0.01).ceil() as usize,
            aspect_ratio_threshold: 10.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_gaussian", self.eps_gaussian),
            ("eps_mean", self.eps_mean),
            ("aspect_ratio_threshold", self.aspect_ratio_threshold),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolatedComponent {
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub params: AnalyzeParams,
    pub error_vertices: IndexSet,
    pub boundary_vertices: IndexSet,
    pub flat_vertices: IndexSet,
    pub risky_vertices: IndexSet,
    pub isolated_components: Vec<IsolatedComponent>,
    pub elongated_faces: IndexSet,
}

impl RiskReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn analyze(mesh: &Mesh, params: &AnalyzeParams) -> Result<RiskReport> {
    params.validate()?;
    let field = compute_curvature(mesh)?;
    let error_vertices = detect_errors_with(mesh, &field);
    let boundary_vertices = detect_boundary(mesh);
    let flat_vertices: IndexSet = (0..mesh.vertex_count())
        .filter(|&v| {
            field.is_defined(v)
                && field.gaussian[v].abs() <= params.eps_gaussian
                && field.mean[v].abs() <= params.eps_mean
        })
        .collect();
    let risky_vertices = error_vertices
        .iter()
        .chain(&boundary_vertices)
        .chain(&flat_vertices)
        .copied()
        .collect();

    let isolated_components = face_components(mesh)
        .into_iter()
        .filter(|faces| faces.len() < params.component_size_threshold)
        .map(|faces| {
            let vertices: IndexSet = faces.iter().flat_map(|&f| mesh.faces()[f]).collect();
            IsolatedComponent {
                vertices: vertices.into_iter().collect(),
                faces,
            }
        })
        .collect();

    let elongated_faces = (0..mesh.face_count())
        .filter(|&f| aspect_ratio(mesh, f) > params.aspect_ratio_threshold)
        .collect();

    Ok(RiskReport {
        vertex_count: mesh.vertex_count(),
        face_count: mesh.face_count(),
        params: *params,
        error_vertices,
        boundary_vertices,
        flat_vertices,
        risky_vertices,
        isolated_components,
        elongated_faces,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalOptions {
    pub remove_boundary: bool,
    /// Indices into `RiskReport::isolated_components`.
    pub components: Vec<usize>,
}

/// Removes unreferenced vertices, the selected isolated components and,
/// optionally, boundary vertices together with their faces. Remaining
/// vertices are renumbered compactly in their original order.
pub fn remove_risky(mesh: &Mesh, report: &RiskReport, options: &RemovalOptions) -> Result<Mesh> {
    if report.vertex_count != mesh.vertex_count() || report.face_count != mesh.face_count() {
        return Err(Error::StaleReport {
            report_vertices: report.vertex_count,
            report_faces: report.face_count,
            mesh_vertices: mesh.vertex_count(),
            mesh_faces: mesh.face_count(),
        });
    }
    let mut drop_face = vec![false; mesh.face_count()];
    for &c in &options.components {
        let comp = report.isolated_components.get(c).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "component {c} out of range ({} reported)",
                report.isolated_components.len()
            ))
        })?;
        for &f in &comp.faces {
            drop_face[f] = true;
        }
    }
    if options.remove_boundary {
        let adj = mesh.adjacency();
        for &v in &report.boundary_vertices {
            for &f in adj.vertex_faces(v) {
                drop_face[f] = true;
            }
        }
    }
    Ok(compact(mesh, |f| !drop_face[f]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use nalgebra::{Point3, Vector3};

    fn cube_with_stray_vertex() -> Mesh {
        let cube = primitives::cube();
        let mut v = cube.vertices().to_vec();
        v.push(Point3::new(3.0, 3.0, 3.0));
        Mesh::new(v, cube.faces().to_vec()).unwrap()
    }

    fn three_fins() -> Mesh {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 0.5),
            Point3::new(-0.5, 0.8, 0.5),
            Point3::new(-0.5, -0.8, 0.5),
        ];
        Mesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap()
    }

    /// Two unit cubes glued at a single corner by index merging.
    fn two_cubes_one_vertex() -> (Mesh, usize) {
        let a = primitives::cube();
        let b_offset = Vector3::new(1.0, 1.0, 1.0);
        let mut vertices = a.vertices().to_vec();
        // corner 0 of the second cube is (1,1,1) == corner 7 of the first
        let mut remap = vec![0; 8];
        for (i, p) in a.vertices().iter().enumerate() {
            let q = p + b_offset;
            remap[i] = match vertices.iter().position(|r| (r - q).norm() < 1e-12) {
                Some(j) => j,
                None => {
                    vertices.push(q);
                    vertices.len() - 1
                }
            };
        }
        let mut faces = a.faces().to_vec();
        faces.extend(a.faces().iter().map(|f| f.map(|i| remap[i])));
        let m = Mesh::new(vertices, faces).unwrap();
        assert_eq!(m.vertex_count(), 15);
        (m, 7)
    }

    fn sphere_with_fragment() -> Mesh {
        let sphere = primitives::icosphere(1.0, 2);
        let frag = primitives::grid(5, 1, 0.1)
            .transform(&nalgebra::Matrix3::identity(), &Vector3::new(3.0, 0.0, 0.0))
            .unwrap();
        assert_eq!(frag.face_count(), 10);
        primitives::merge(&[&sphere, &frag])
    }

    #[test]
    fn boundary_sets() {
        assert!(detect_boundary(&primitives::cube()).is_empty());
        let tri = Mesh::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)], vec![[0, 1, 2]]).unwrap();
        assert_eq!(detect_boundary(&tri), IndexSet::from([0, 1, 2]));
        // open cylinder: rims are the first and last rings by construction
        let (segments, rings) = (12, 4);
        let cyl = primitives::cylinder(1.0, 2.0, segments, rings, false);
        let expected: IndexSet = (0..segments).chain((rings - 1) * segments..rings * segments).collect();
        assert_eq!(detect_boundary(&cyl), expected);
    }

    #[test]
    fn error_fixtures() {
        assert_eq!(detect_errors(&cube_with_stray_vertex()), IndexSet::from([8]));
        assert_eq!(detect_errors(&three_fins()), IndexSet::from([0, 1]));
        let (two, shared) = two_cubes_one_vertex();
        assert_eq!(detect_errors(&two), IndexSet::from([shared]));
        assert!(detect_errors(&primitives::icosphere(1.0, 2)).is_empty());
    }

    #[test]
    fn clean_icosphere_has_no_risk() {
        let m = primitives::icosphere(1.0, 3);
        let r = analyze(&m, &AnalyzeParams::defaults_for(&m)).unwrap();
        assert!(r.risky_vertices.is_empty());
        assert!(r.isolated_components.is_empty());
        assert!(r.elongated_faces.is_empty());
    }

    #[test]
    fn fragment_is_isolated() {
        let m = sphere_with_fragment();
        let params = AnalyzeParams {
            component_size_threshold: 50,
            ..AnalyzeParams::defaults_for(&m)
        };
        let r = analyze(&m, &params).unwrap();
        assert_eq!(r.isolated_components.len(), 1);
        assert_eq!(r.isolated_components[0].faces, (320..330).collect::<Vec<_>>());
        assert_eq!(r.isolated_components[0].vertices.len(), 12);

        let cleaned = remove_risky(&m, &r, &RemovalOptions { components: vec![0], ..Default::default() }).unwrap();
        assert_eq!(cleaned, primitives::icosphere(1.0, 2));
        assert_eq!(cleaned.topology_summary().euler_characteristic, 2);
    }

    #[test]
    fn flat_grid_interior_is_flat() {
        let m = primitives::grid(5, 5, 1.0);
        let params = AnalyzeParams {
            eps_gaussian: 1e-6,
            eps_mean: 1e-6,
            ..AnalyzeParams::defaults_for(&m)
        };
        let r = analyze(&m, &params).unwrap();
        let interior: IndexSet = (0..m.vertex_count()).filter(|v| !r.boundary_vertices.contains(v)).collect();
        assert_eq!(interior.len(), 16);
        assert!(interior.is_subset(&r.flat_vertices));
    }

    #[test]
    fn risky_is_union() {
        let m = primitives::merge(&[&three_fins(), &primitives::grid(3, 3, 1.0)]);
        let r = analyze(&m, &AnalyzeParams { eps_gaussian: 1e-6, eps_mean: 1e-6, ..AnalyzeParams::defaults_for(&m) }).unwrap();
        let union: IndexSet = r.error_vertices.union(&r.boundary_vertices).copied().collect::<IndexSet>().union(&r.flat_vertices).copied().collect();
        assert_eq!(r.risky_vertices, union);
    }

    #[test]
    fn elongated_faces_flagged() {
        let m = Mesh::new(
            vec![Point3::origin(), Point3::new(10.0, 0.0, 0.0), Point3::new(5.0, 0.2, 0.0), Point3::new(0.0, 5.0, 0.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let r = analyze(&m, &AnalyzeParams::defaults_for(&m)).unwrap();
        assert_eq!(r.elongated_faces, IndexSet::from([0]));
    }

    #[test]
    fn removal_paths() {
        let m = cube_with_stray_vertex();
        let r = analyze(&m, &AnalyzeParams::defaults_for(&m)).unwrap();
        let cleaned = remove_risky(&m, &r, &RemovalOptions::default()).unwrap();
        assert_eq!(cleaned.vertex_count(), 8);
        assert!(detect_errors(&cleaned).is_empty());

        let cyl = primitives::cylinder(1.0, 2.0, 12, 4, false);
        let r = analyze(&cyl, &AnalyzeParams::defaults_for(&cyl)).unwrap();
        assert_eq!(remove_risky(&cyl, &r, &RemovalOptions::default()).unwrap(), cyl);
        let trimmed = remove_risky(&cyl, &r, &RemovalOptions { remove_boundary: true, components: vec![] }).unwrap();
        // only the middle band of faces survives
        assert_eq!(trimmed.face_count(), 24);
        assert_eq!(trimmed.vertex_count(), 24);

        assert!(matches!(
            remove_risky(&primitives::cube(), &r, &RemovalOptions::default()),
            Err(Error::StaleReport { .. })
        ));
        assert!(matches!(
            remove_risky(&cyl, &r, &RemovalOptions { remove_boundary: false, components: vec![3] }),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn analysis_is_deterministic() {
        let m = sphere_with_fragment();
        let p = AnalyzeParams::defaults_for(&m);
        assert_eq!(analyze(&m, &p).unwrap(), analyze(&m, &p).unwrap());
    }
}
