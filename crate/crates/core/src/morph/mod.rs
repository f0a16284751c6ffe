//! Mesh morphing of the reference mesh onto a sampled geometry.
//!
//! Two morphers share one boundary description ([`MorphSpec`]): the spring
//! analogy with elastic hardening solves a sequence of static spring
//! problems, and polyharmonic RBF interpolation extends the boundary
//! displacements in one linear solve per component.

pub mod rbf;
pub mod saeh;
mod spec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, QualityReport};
use crate::Point;

pub use spec::{characteristic_nodes, MorphSpec, NodalTargets, Prescription, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MorphMethod {
    Saeh { steps: usize },
    Rbf { order: u32 },
}

impl MorphMethod {
    pub const SAEH: MorphMethod = MorphMethod::Saeh { steps: 10 };
    pub const RBF: MorphMethod = MorphMethod::Rbf { order: 1 };

    pub fn name(&self) -> &'static str {
        match self {
            MorphMethod::Saeh { .. } => "saeh",
            MorphMethod::Rbf { .. } => "rbf",
        }
    }
}

/// Result of morphing a mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphField {
    pub method: MorphMethod,
    /// Per-node displacement from the reference positions.
    pub displacement: Vec<Point>,
    /// Reference connectivity on the displaced nodes.
    pub mesh: Mesh,
    pub quality: QualityReport,
    /// Largest deviation of a prescribed component from its target.
    pub residual: f64,
    /// RBF block-system sizes per component.
    pub rbf_system_sizes: Option<[usize; 2]>,
    /// Largest RBF weight magnitude per component.
    pub rbf_max_gamma: Option<[f64; 2]>,
}

fn finish(
    mesh: &Mesh,
    targets: &NodalTargets,
    method: MorphMethod,
    nodes: Vec<Point>,
    increment: usize,
) -> Result<MorphField> {
    let displacement: Vec<Point> = nodes.iter().zip(&mesh.nodes).map(|(a, b)| *a - *b).collect();
    let residual = targets
        .iter()
        .zip(&displacement)
        .flat_map(|(t, d)| {
            [t[0].map(|v| (d.x - v).abs()), t[1].map(|v| (d.z - v).abs())]
        })
        .flatten()
        .fold(0.0, f64::max);
    let morphed = mesh.with_nodes(nodes);
    let quality = QualityReport::of(&morphed);
    if quality.inverted > 0 {
        return Err(Error::ElementInversion {
            increment,
            element: quality.worst_element,
            area: quality.min_area,
        });
    }
    Ok(MorphField {
        method,
        displacement,
        mesh: morphed,
        quality,
        residual,
        rbf_system_sizes: None,
        rbf_max_gamma: None,
    })
}

/// Spring analogy with elastic hardening in `steps` equal increments.
pub fn morph_saeh(mesh: &Mesh, spec: &MorphSpec, steps: usize) -> Result<MorphField> {
    let targets = spec.resolve(mesh)?;
    let out = saeh::morph(mesh, &targets, steps)?;
    finish(mesh, &targets, MorphMethod::Saeh { steps }, out.nodes, steps)
}

/// Polyharmonic RBF morph of kernel order `order`.
pub fn morph_rbf(mesh: &Mesh, spec: &MorphSpec, order: u32) -> Result<MorphField> {
    let targets = spec.resolve(mesh)?;
    let [fx, fz] = rbf::fit(&mesh.nodes, &targets, order)?;
    let nodes: Vec<Point> = mesh
        .nodes
        .iter()
        .map(|&p| p + Point::new(fx.eval(p), fz.eval(p)))
        .collect();
    let mut field = finish(mesh, &targets, MorphMethod::Rbf { order }, nodes, 0)?;
    let max_abs = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    field.rbf_system_sizes = Some([fx.system_size(), fz.system_size()]);
    field.rbf_max_gamma = Some([max_abs(&fx.gamma), max_abs(&fz.gamma)]);
    Ok(field)
}

pub fn morph(mesh: &Mesh, spec: &MorphSpec, method: MorphMethod) -> Result<MorphField> {
    match method {
        MorphMethod::Saeh { steps } => morph_saeh(mesh, spec, steps),
        MorphMethod::Rbf { order } => morph_rbf(mesh, spec, order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Axis;
    use crate::mesh::{generate_structured_beam, generate_unstructured_hole, GeometryParams};

    fn beam() -> (GeometryParams, Mesh) {
        let p = GeometryParams::beam(1.0).unwrap();
        let m = generate_structured_beam(&p, 0.05).unwrap();
        (p, m)
    }

    #[test]
    fn zero_prescription_is_identity() {
        let (p, mesh) = beam();
        let spec = MorphSpec::between(&p, &p).unwrap();
        for method in [MorphMethod::SAEH, MorphMethod::RBF] {
            let f = morph(&mesh, &spec, method).unwrap();
            assert!(f.displacement.iter().all(|d| d.norm() < 1e-15), "{method:?}");
        }
    }

    #[test]
    fn rbf_beam_stretch_is_linear_scaling() {
        let (p, mesh) = beam();
        let spec = MorphSpec::between(&p, &GeometryParams::beam(1.2).unwrap()).unwrap();
        let f = morph_rbf(&mesh, &spec, 1).unwrap();
        for (a, b) in mesh.nodes.iter().zip(&f.mesh.nodes) {
            assert!((b.x - 1.2 * a.x).abs() < 1e-9);
            assert!((b.z - a.z).abs() < 1e-9);
        }
        assert!(f.rbf_max_gamma.unwrap()[0] < 1e-9);
    }

    #[test]
    fn saeh_beam_stretch_hits_targets_and_is_monotone() {
        let (p, mesh) = beam();
        let spec = MorphSpec::between(&p, &GeometryParams::beam(1.1).unwrap()).unwrap();
        let f = morph_saeh(&mesh, &spec, 10).unwrap();
        assert!(f.residual < 1e-12);
        for &n in mesh.group("Gc4").unwrap() {
            assert!((f.mesh.nodes[n].x - 1.1).abs() < 1e-12);
        }
        // Along the mid line, x-displacement grows with x.
        let mut mid: Vec<usize> = (0..mesh.n_nodes()).filter(|&i| (mesh.nodes[i].z - 0.05).abs() < 1e-12).collect();
        mid.sort_by(|a, b| mesh.nodes[*a].x.total_cmp(&mesh.nodes[*b].x));
        for w in mid.windows(2) {
            assert!(f.displacement[w[1]].x >= f.displacement[w[0]].x - 1e-12);
        }
    }

    #[test]
    fn hole_morphs_keep_elements_valid() {
        let p0 = GeometryParams::circular(0.4).unwrap();
        let mesh = generate_unstructured_hole(&p0, 0.05, 1).unwrap();
        for d in [0.2, 0.6] {
            let p1 = GeometryParams::circular(d).unwrap();
            let spec = MorphSpec::between(&p0, &p1).unwrap();
            let hole = p1.hole().unwrap();
            for method in [MorphMethod::SAEH, MorphMethod::RBF] {
                let f = morph(&mesh, &spec, method).unwrap();
                assert_eq!(f.quality.inverted, 0);
                assert!(f.residual < 1e-9, "{method:?} {}", f.residual);
                for &n in mesh.group("Gc5").unwrap() {
                    assert!(hole.outline_residual(f.mesh.nodes[n]) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn saeh_rejects_zero_steps() {
        let (p, mesh) = beam();
        let spec = MorphSpec::between(&p, &p).unwrap();
        assert!(morph_saeh(&mesh, &spec, 0).is_err());
    }

    #[test]
    fn rbf_reports_collinear_prescription() {
        let (_, mesh) = beam();
        let spec = MorphSpec::default().push("Gc4", Rule::Component { axis: Axis::X, value: 0.1 });
        assert!(matches!(morph_rbf(&mesh, &spec, 1), Err(Error::RbfSingular { component: 0, .. })));
    }
}
