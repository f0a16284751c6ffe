use std::path::PathBuf;

use pmorph::fem::{assemble, Axis, Material, NodalDof};
use pmorph::mesh::{generate_structured_beam, read_mesh, write_mesh, GeometryParams};
use pmorph::Point;

fn golden() -> pmorph::mesh::Mesh {
    read_mesh(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/beam_4el.json")).unwrap()
}

#[test]
fn structured_generator_reproduces_the_four_element_beam() {
    let mesh = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.5).unwrap();
    let expected = golden();
    assert_eq!(mesh.elements, expected.elements);
    assert_eq!(mesh.groups, expected.groups);
    assert_eq!(mesh.nodes.len(), expected.nodes.len());
    for (a, b) in mesh.nodes.iter().zip(&expected.nodes) {
        assert!((a.x - b.x).abs() < 1e-15 && (a.z - b.z).abs() < 1e-15, "{a:?} vs {b:?}");
    }
}

#[test]
fn mesh_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("beam.json");
    let mesh = golden();
    write_mesh(&mesh, &path).unwrap();
    assert_eq!(read_mesh(&path).unwrap(), mesh);
}

#[test]
fn clamped_four_element_beam_has_the_expected_system() {
    let mesh = golden();
    let probe = NodalDof::new(Point::new(1.0, 0.1), Axis::Z);
    let fom = assemble(&mesh, &Material::steel_plate(), "Gc1", &probe, &probe).unwrap();
    // three clamped nodes of fifteen
    assert_eq!(fom.n(), 24);
    assert_eq!(fom.constrained_dofs, vec![0, 1, 10, 11, 20, 21]);
    assert!(fom.k.max_asymmetry() <= 1e-12 * fom.k.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    assert!(fom.m.max_asymmetry() <= 1e-12 * fom.m.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let tip = fom.free_dofs.iter().position(|&d| d == 2 * 14 + 1).unwrap();
    assert_eq!(fom.f[tip], 1.0);
    assert_eq!(fom.g[tip], 1.0);
}
