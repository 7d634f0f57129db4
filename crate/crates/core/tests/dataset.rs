use organslice::dataset::{generate, read_manifest, AxisSweep, Direction, Offsets, SweepSpec};
use organslice::primitives;
use organslice::slice::Axis;

fn filled(path: &std::path::Path) -> usize {
    image::open(path).unwrap().to_luma8().pixels().filter(|p| p.0[0] == 255).count()
}

#[test]
fn sphere_sweeps_are_symmetric() {
    let mesh = primitives::icosphere(1.0, 4);
    let offsets = vec![-0.6, -0.3, 0.0, 0.3, 0.6];
    let spec = SweepSpec {
        sweeps: Axis::ALL
            .iter()
            .map(|&a| AxisSweep {
                direction: Direction::Axis(a),
                offsets: Offsets::List(offsets.clone()),
            })
            .collect(),
        resolution: 128,
        label: "sphere".into(),
        ..SweepSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&mesh, &spec, dir.path()).unwrap();
    assert_eq!(manifest.records.len(), 15);
    let counts: Vec<usize> = manifest.records.iter().map(|r| filled(&dir.path().join(&r.filename))).collect();
    for axis in 0..3 {
        let c = &counts[axis * 5..axis * 5 + 5];
        // mirrored offsets
        assert_eq!(c[0], c[4], "axis {axis}: {c:?}");
        assert_eq!(c[1], c[3], "axis {axis}: {c:?}");
        assert!(c[2] > c[1] && c[1] > c[0]);
    }
    // the three axis sweeps see the same sections
    assert_eq!(counts[0..5], counts[5..10]);
    assert_eq!(counts[5..10], counts[10..15]);
    for r in &manifest.records {
        assert_eq!(r.loop_count, 1);
    }
    assert_eq!(read_manifest(dir.path()).unwrap(), manifest);
}

#[test]
fn every_record_has_an_image() {
    let mesh = primitives::torus(3.0, 1.0, 32, 16);
    let spec = SweepSpec {
        sweeps: vec![AxisSweep {
            direction: Direction::Normal(nalgebra::Vector3::new(1.0, 1.0, 0.0)),
            offsets: Offsets::Range { start: -4.0, stop: 4.0, count: 7 },
        }],
        resolution: 32,
        random_direction_count: 4,
        seed: 5,
        ..SweepSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&mesh, &spec, dir.path()).unwrap();
    assert_eq!(manifest.records.len(), 11);
    let pngs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 11);
    let mut names: Vec<_> = manifest.records.iter().map(|r| r.filename.clone()).collect();
    names.dedup();
    assert_eq!(names.len(), 11);
    assert!(manifest.records[7..].iter().all(|r| !r.metrics.empty));
}
