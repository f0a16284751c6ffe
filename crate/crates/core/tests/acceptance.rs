//! End-to-end acceptance checks, one test per criterion.
//!
//! The experiment runs use the checked-in configurations with thinned
//! frequency grids and test sweeps; sample and cluster counts come from full
//! adaptive sampling at the stated mesh scale.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::OnceLock;

use faer::{Mat, Side};
use pmorph::fem::{assemble, assemble_unconstrained, solve_frf, Axis, FomSystem, Material, NodalDof};
use pmorph::harness::{
    choose_reference, run_experiment, timing_report, Experiment, ExperimentResult, FrequencyGrid, Method, SampleStore,
};
use pmorph::mesh::{generate_structured_beam, generate_unstructured_hole, GeometryParams, Mesh, BEAM_HEIGHT};
use pmorph::mor::{lowest_eigenpairs, modal_truncation, project};
use pmorph::morph::{morph_rbf, morph_saeh, MorphSpec, Rule};
use pmorph::pmor::{initial_points, principal_angles};
use pmorph::transfer::locate_point;
use pmorph::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(name: &str) -> Experiment {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    Experiment::load(path).unwrap()
}

fn linspace(start: f64, stop: f64, count: usize) -> FrequencyGrid {
    FrequencyGrid::Linspace { start, stop, count }
}

fn beam_run() -> &'static ExperimentResult {
    static RUN: OnceLock<ExperimentResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut exp = config("beam.json");
        exp.frequencies = linspace(1.0, 5000.0, 1000);
        exp.test_grid = vec![11];
        run_experiment(&exp).unwrap()
    })
}

fn circular_run() -> &'static ExperimentResult {
    static RUN: OnceLock<ExperimentResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut exp = config("circular_hole.json");
        exp.frequencies = linspace(1.0, 5000.0, 500);
        exp.test_grid = vec![11];
        run_experiment(&exp).unwrap()
    })
}

fn elliptic_run() -> &'static ExperimentResult {
    static RUN: OnceLock<ExperimentResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut exp = config("elliptic_hole.json");
        exp.scale = 0.5;
        exp.frequencies = linspace(1.0, 5000.0, 500);
        exp.test_grid = vec![11, 11];
        run_experiment(&exp).unwrap()
    })
}

fn morph_methods(result: &ExperimentResult) -> Vec<Method> {
    result
        .methods
        .iter()
        .map(|m| m.method)
        .filter(|m| *m != Method::ZeroPad)
        .collect()
}

fn mean_mre(result: &ExperimentResult, method: Method) -> f64 {
    let v: Vec<f64> = result.points.iter().map(|p| p.mre[&method]).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn max_mre(result: &ExperimentResult, method: Method) -> f64 {
    result.points.iter().map(|p| p.mre[&method]).fold(0.0, f64::max)
}

#[test]
fn criterion_1_transformation_identities() {
    for result in [beam_run(), circular_run(), elliptic_run()] {
        for (method, checks) in &result.transform_checks {
            let summary = result.summary(*method).unwrap();
            let used: usize = summary.samples - summary.excluded_samples.len();
            assert_eq!(checks.len(), used, "{} {method}: every usable sample is checked", result.name);
            for c in checks {
                assert!(
                    c.identity_error <= 1e-10,
                    "{} {method} sample {}: identity error {:e}",
                    result.name,
                    c.sample,
                    c.identity_error
                );
                assert!(
                    c.max_angle < 1e-7,
                    "{} {method} sample {}: angle {:e} deg",
                    result.name,
                    c.sample,
                    c.max_angle
                );
            }
        }
    }
}

#[test]
fn criterion_2_rbf_reproduces_affine_maps() {
    let reference = GeometryParams::beam(1.0).unwrap();
    let mesh = generate_structured_beam(&reference, 0.02).unwrap();
    for l in [0.8, 0.81, 1.2] {
        let target = GeometryParams::beam(l).unwrap();
        let spec = MorphSpec::between(&reference, &target).unwrap();
        let field = morph_rbf(&mesh, &spec, 1).unwrap();
        for (p, q) in mesh.nodes.iter().zip(&field.mesh.nodes) {
            assert!((q.x - p.x * l).abs() <= 1e-9, "x at {p:?} for l = {l}");
            assert!((q.z - p.z).abs() <= 1e-9, "z at {p:?} for l = {l}");
        }
    }

    let hole = generate_unstructured_hole(&GeometryParams::circular(0.4).unwrap(), 0.08, 3).unwrap();
    let groups: Vec<String> = hole.groups.keys().cloned().collect();
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(20));
    let entry = -0.15..0.15f64;
    let strategy = (
        [entry.clone(), entry.clone(), entry.clone(), entry],
        (0.0..1.0f64, 0.0..1.0f64),
    );
    runner
        .run(&strategy, |(a, (ox, oz))| {
            let a = [[a[0], a[1]], [a[2], a[3]]];
            let origin = Point::new(ox, oz);
            let spec = groups
                .iter()
                .fold(MorphSpec::default(), |s, g| s.push(g, Rule::Affine { a, origin }));
            let field = morph_rbf(&hole, &spec, 1).unwrap();
            let gamma = field.rbf_max_gamma.unwrap();
            prop_assert!(gamma[0] <= 1e-9 && gamma[1] <= 1e-9, "gamma {gamma:?}");
            for (p, d) in hole.nodes.iter().zip(&field.displacement) {
                let r = *p - origin;
                let exact = [a[0][0] * r.x + a[0][1] * r.z, a[1][0] * r.x + a[1][1] * r.z];
                prop_assert!((d.x - exact[0]).abs() <= 1e-9 && (d.z - exact[1]).abs() <= 1e-9);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn criterion_3_morphs_of_the_circular_reference_stay_valid() {
    let exp = config("circular_hole.json");
    let mut store = SampleStore::new(&exp);
    let reference = choose_reference(&mut store, &initial_points(&exp.bounds())).unwrap();
    for p in exp.test_points() {
        let target = GeometryParams::new(exp.case, p.clone()).unwrap();
        let spec = MorphSpec::between(&reference.params, &target).unwrap();
        for field in [morph_saeh(&reference.mesh, &spec, exp.saeh_steps), morph_rbf(&reference.mesh, &spec, exp.rbf_order)] {
            let field = field.unwrap_or_else(|e| panic!("d = {}: {e}", p[0]));
            assert_eq!(field.quality.inverted, 0, "d = {}", p[0]);
            assert!(field.residual <= 1e-9, "d = {}: residual {:e}", p[0], field.residual);
        }
    }
}

fn rigid_modes(mesh: &Mesh) -> [Vec<f64>; 3] {
    let field = |f: &dyn Fn(Point) -> [f64; 2]| mesh.nodes.iter().flat_map(|p| f(*p)).collect::<Vec<f64>>();
    [field(&|_| [1.0, 0.0]), field(&|_| [0.0, 1.0]), field(&|p| [-p.z, p.x])]
}

/// Area enclosed by quadratic edges: straight triangle plus the parabolic
/// segment `2/3 chord x sagitta` of every edge.
fn quadratic_area(mesh: &Mesh) -> f64 {
    let cross = |a: Point, b: Point| a.x * b.z - a.z * b.x;
    mesh.elements
        .iter()
        .map(|el| {
            let p = |i: usize| mesh.nodes[el[i]];
            let straight = 0.5 * cross(p(1) - p(0), p(2) - p(0));
            let bulge: f64 = [(0, 1, 3), (1, 2, 4), (2, 0, 5)]
                .iter()
                .map(|&(a, b, m)| {
                    let mid = Point::new(0.5 * (p(a).x + p(b).x), 0.5 * (p(a).z + p(b).z));
                    2.0 / 3.0 * cross(p(m) - mid, p(b) - p(a))
                })
                .sum();
            straight + bulge
        })
        .sum()
}

#[test]
fn criterion_4_finite_element_correctness() {
    let mat = Material::steel_plate();
    let beam = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.02).unwrap();
    let hole = generate_unstructured_hole(&GeometryParams::circular(0.4).unwrap(), 0.04, 1).unwrap();
    for (mesh, exact_area) in [(&beam, Some(BEAM_HEIGHT)), (&hole, None)] {
        let (m, k) = assemble_unconstrained(mesh, &mat).unwrap();
        let kmax = k.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut ku = vec![0.0; mesh.n_dofs()];
        for u in rigid_modes(mesh) {
            k.matvec(&u, &mut ku);
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm(&ku) / (norm(&u) * kmax) < 1e-9, "rigid residual {:e}", norm(&ku) / norm(&u));
        }
        let area = exact_area.unwrap_or_else(|| quadratic_area(mesh));
        let [tx, tz, _] = rigid_modes(mesh);
        for t in [tx, tz] {
            let mut mt = vec![0.0; mesh.n_dofs()];
            m.matvec(&t, &mut mt);
            let mass: f64 = t.iter().zip(&mt).map(|(a, b)| a * b).sum();
            let expected = mat.rho * mat.t * area;
            assert!((mass - expected).abs() <= 1e-8 * expected, "mass {mass} vs {expected}");
        }
    }

    let l = 1.0;
    let fine = generate_structured_beam(&GeometryParams::beam(l).unwrap(), 0.01).unwrap();
    let probe = NodalDof::new(Point::new(l, BEAM_HEIGHT), Axis::Z);
    let fom = assemble(&fine, &mat, "Gc1", &probe, &probe).unwrap();
    let f1 = modal_truncation(&fom, 1).unwrap().eigfreqs[0];
    let inertia = mat.t * BEAM_HEIGHT.powi(3) / 12.0;
    let area = mat.t * BEAM_HEIGHT;
    let oracle = 1.875_104_068_711_961f64.powi(2) / TAU * (mat.e * inertia / (mat.rho * area * l.powi(4))).sqrt();
    assert!((f1 - oracle).abs() < 0.05 * oracle, "f1 = {f1} Hz, Euler-Bernoulli {oracle} Hz");
}

#[test]
fn criterion_5_beam_reproduction() {
    let result = beam_run();
    let mut failures = Vec::new();
    for method in morph_methods(result) {
        let s = result.summary(method).unwrap();
        if s.clusters != 1 || !(6..=12).contains(&s.samples) {
            failures.push(format!("{method}: {} samples in {} clusters", s.samples, s.clusters));
        }
        let mean = mean_mre(result, method);
        if !(mean < 0.02) {
            failures.push(format!("{method}: mean MRE {mean:.4}"));
        }
        let at = result.mre_at(method, &[0.81]).unwrap();
        if !(at < 0.05) {
            failures.push(format!("{method}: MRE {at:.4} at l = 0.81"));
        }
        let baseline = mean_mre(result, Method::ZeroPad);
        if !(baseline >= 10.0 * mean) {
            failures.push(format!("{method}: zero-padding mean MRE {baseline:.4} vs {mean:.4}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("; "));
}

#[test]
fn criterion_6_circular_hole_reproduction() {
    let result = circular_run();
    let mut failures = Vec::new();
    let baseline = mean_mre(result, Method::ZeroPad);
    if !(baseline > 0.5) {
        failures.push(format!("zero-padding mean MRE {baseline:.4}"));
    }
    for method in morph_methods(result) {
        let s = result.summary(method).unwrap();
        if !(5..=7).contains(&s.clusters) || !(35..=55).contains(&s.samples) {
            failures.push(format!("{method}: {} samples in {} clusters", s.samples, s.clusters));
        }
        let at = result.mre_at(method, &[0.33]).unwrap();
        if !(at < 0.05) {
            failures.push(format!("{method}: MRE {at:.4} at d = 0.33"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("; "));
}

#[test]
fn criterion_7_elliptic_hole_pipeline() {
    let result = elliptic_run();
    for method in morph_methods(result) {
        let s = result.summary(method).unwrap();
        assert!(s.error.is_none(), "{method}: {:?}", s.error);
        assert!(s.clusters >= 3, "{method}: {} clusters", s.clusters);
        let worst = max_mre(result, method);
        assert!(worst < 0.1, "{method}: max MRE {worst:.4}");
    }
}

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().compute_Q()
}

/// Angles in degrees from the eigenvalues `cos^2` of `Vi^T Vj Vj^T Vi`.
fn gram_angles(vi: &Mat<f64>, vj: &Mat<f64>) -> Vec<f64> {
    let c = vi.transpose() * vj;
    let g = &c * c.transpose();
    let mut cos2 = g.self_adjoint_eigenvalues(Side::Lower).unwrap();
    cos2.sort_by(|a, b| b.total_cmp(a));
    cos2.iter().map(|v| v.clamp(0.0, 1.0).sqrt().acos().to_degrees()).collect()
}

fn coarse_models() -> Vec<FomSystem> {
    let mat = Material::steel_plate();
    let beam = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.025).unwrap();
    let hole = generate_unstructured_hole(&GeometryParams::circular(0.4).unwrap(), 0.06, 2).unwrap();
    let beam_probe = NodalDof::new(Point::new(1.0, BEAM_HEIGHT), Axis::Z);
    let hole_in = NodalDof::new(Point::new(0.0, 1.0), Axis::X);
    let hole_out = NodalDof::new(Point::new(1.0, 1.0), Axis::X);
    vec![
        assemble(&beam, &mat, "Gc1", &beam_probe, &beam_probe).unwrap(),
        assemble(&hole, &mat, "Gc1", &hole_in, &hole_out).unwrap(),
    ]
}

#[test]
fn criterion_8_oracle_equivalences() {
    // Principal angles on subspaces with prescribed angles, rotated at random.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, r) = (60, 8);
    for _ in 0..5 {
        let q = random_orthonormal(&mut rng, n);
        let theta: Vec<f64> = (0..r).map(|_| rng.random_range(2.0..88.0f64).to_radians()).collect();
        let vi = Mat::from_fn(n, r, |i, j| q[(i, j)]);
        let vj = Mat::from_fn(n, r, |i, j| theta[j].cos() * q[(i, j)] + theta[j].sin() * q[(i, r + j)]);
        let mut got = principal_angles(vi.as_ref(), vj.as_ref()).unwrap();
        got.sort_by(|a, b| a.total_cmp(b));
        let oracle = gram_angles(&vi, &vj);
        let mut exact: Vec<f64> = theta.iter().map(|t| t.to_degrees()).collect();
        exact.sort_by(|a, b| a.total_cmp(b));
        for ((a, b), c) in got.iter().zip(&oracle).zip(&exact) {
            assert!((a - b).abs() < 1e-8, "angle {a} vs Gram oracle {b}");
            assert!((a - c).abs() < 1e-8, "angle {a} vs constructed {c}");
        }
    }

    // Natural coordinates: map interior points forward with the quadratic
    // shape functions and locate them again.
    let hole = generate_unstructured_hole(&GeometryParams::circular(0.5).unwrap(), 0.05, 4).unwrap();
    for e in (0..hole.elements.len()).step_by(7) {
        let nodes = hole.element_nodes(e);
        for _ in 0..4 {
            let (a, b) = (rng.random_range(0.1..0.8f64), rng.random_range(0.1..0.8f64));
            let xi = if a + b < 0.9 { [a, b] } else { [0.9 - b, 0.9 - a] };
            let l1 = 1.0 - xi[0] - xi[1];
            let w = [
                l1 * (2.0 * l1 - 1.0),
                xi[0] * (2.0 * xi[0] - 1.0),
                xi[1] * (2.0 * xi[1] - 1.0),
                4.0 * l1 * xi[0],
                4.0 * xi[0] * xi[1],
                4.0 * xi[1] * l1,
            ];
            let x = Point::new(
                w.iter().zip(&nodes).map(|(w, p)| w * p.x).sum(),
                w.iter().zip(&nodes).map(|(w, p)| w * p.z).sum(),
            );
            let c = locate_point(&hole, x).unwrap();
            assert_eq!(c.element, e);
            assert!((c.xi[0] - xi[0]).abs() < 1e-10 && (c.xi[1] - xi[1]).abs() < 1e-10, "{:?} vs {xi:?}", c.xi);
        }
    }

    for fom in coarse_models() {
        assert!(fom.n() > 400, "sparse path needs more than 400 dofs, got {}", fom.n());
        let k = fom.k.to_dense();
        let m = fom.m.to_dense();
        let llt = m.llt(Side::Lower).unwrap();
        let l = llt.L();
        let mut a = k.clone();
        l.solve_lower_triangular_in_place(a.as_mut());
        let mut a = a.transpose().to_owned();
        l.solve_lower_triangular_in_place(a.as_mut());
        let a = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let oracle = a.self_adjoint_eigenvalues(Side::Lower).unwrap();
        let pairs = lowest_eigenpairs(&fom.k, &fom.m, 10).unwrap();
        for (j, (got, want)) in pairs.values.iter().zip(&oracle).enumerate() {
            assert!((got - want).abs() <= 1e-8 * want, "eigenvalue {j}: {got} vs {want}");
            let phi = pairs.vectors.col(j).to_owned();
            let res = &k * &phi - (&m * &phi) * faer::Scale(*want);
            assert!(res.norm_l2() <= 1e-8 * (&k * &phi).norm_l2(), "eigenvector {j}");
        }

        let freqs = [1.0, 250.0, 1234.5, 3000.0, 4999.0];
        let full = solve_frf(&fom, &freqs).unwrap();
        let q = random_orthonormal(&mut rng, fom.n());
        let reduced = project(&fom, &q).frf(&freqs);
        assert!(reduced.singular.is_empty());
        for (a, b) in reduced.y.iter().zip(&full) {
            assert!((a - b).norm() <= 1e-9 * b.norm(), "{a} vs {b}");
        }
    }
}

#[test]
fn criterion_9_timing_ordering() {
    let exp = config("elliptic_hole.json");
    let report = timing_report(&exp).unwrap();
    assert_eq!(report.vectors, 50);
    assert!(
        report.rbf_faster_than_saeh(),
        "RBF {:.3}s vs SAEH {:.3}s",
        report.rbf_seconds,
        report.saeh_seconds
    );
    assert!(
        report.rbf_faster_than_interpolation(),
        "RBF {:.3}s vs interpolation {:.3}s",
        report.rbf_seconds,
        report.interpolation_seconds
    );
}
