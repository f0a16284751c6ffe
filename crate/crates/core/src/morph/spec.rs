use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Axis;
use crate::mesh::{GeometryCase, GeometryParams, Mesh};
use crate::Point;

/// Displacement rule applied to every node of a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// One displacement component takes a fixed value; the other stays free.
    Component { axis: Axis, value: f64 },
    /// Both components follow the affine field `q(x) = A (x - origin)`.
    Affine { a: [[f64; 2]; 2], origin: Point },
}

impl Rule {
    fn components(&self, x: Point) -> [Option<f64>; 2] {
        match *self {
            Rule::Component { axis, value } => {
                let mut out = [None, None];
                out[axis.index()] = Some(value);
                out
            }
            Rule::Affine { a, origin } => {
                let d = x - origin;
                [
                    Some(a[0][0] * d.x + a[0][1] * d.z),
                    Some(a[1][0] * d.x + a[1][1] * d.z),
                ]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prescription {
    pub group: String,
    pub rule: Rule,
}

/// Prescribed boundary displacements that carry the reference mesh onto a
/// sampled geometry.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MorphSpec {
    pub prescriptions: Vec<Prescription>,
}

/// Per-node prescribed components; `None` marks a free component.
pub type NodalTargets = Vec<[Option<f64>; 2]>;

/// Agreement required where two groups prescribe the same component.
const CONFLICT_TOL: f64 = 1e-12;

impl MorphSpec {
    pub fn push(mut self, group: &str, rule: Rule) -> Self {
        self.prescriptions.push(Prescription {
            group: group.to_string(),
            rule,
        });
        self
    }

    /// Boundary displacements that move the reference geometry onto `target`.
    ///
    /// Beam: the clamped edge keeps `x`, the bottom, top and clamped edges
    /// keep `z`, and the free end moves by the length change. Hole plate:
    /// each outer edge keeps its normal coordinate and the hole boundary is
    /// scaled about the centre per axis, which maps the reference outline
    /// onto the target outline exactly.
    pub fn between(reference: &GeometryParams, target: &GeometryParams) -> Result<Self> {
        if reference.case != target.case {
            return Err(Error::InvalidInput(format!(
                "cannot morph {:?} onto {:?}",
                reference.case, target.case
            )));
        }
        let x = |value| Rule::Component { axis: Axis::X, value };
        let z = |value| Rule::Component { axis: Axis::Z, value };
        Ok(match reference.case {
            GeometryCase::BeamPlate => {
                let dl = target.p[0] - reference.p[0];
                MorphSpec::default()
                    .push("Gc1", x(0.0))
                    .push("Gc1", z(0.0))
                    .push("Gc2", z(0.0))
                    .push("Gc3", z(0.0))
                    .push("Gc4", x(dl))
            }
            GeometryCase::CircularHole | GeometryCase::EllipticHole => {
                let (h0, h1) = (reference.hole().unwrap(), target.hole().unwrap());
                let a = [[h1.a / h0.a - 1.0, 0.0], [0.0, h1.b / h0.b - 1.0]];
                MorphSpec::default()
                    .push("Gc1", z(0.0))
                    .push("Gc3", z(0.0))
                    .push("Gc2", x(0.0))
                    .push("Gc4", x(0.0))
                    .push("Gc5", Rule::Affine { a, origin: h0.center })
            }
        })
    }

    /// Resolves every rule on `mesh`, rejecting groups that prescribe
    /// different values for the same component of a node.
    pub fn resolve(&self, mesh: &Mesh) -> Result<NodalTargets> {
        let mut out: NodalTargets = vec![[None, None]; mesh.n_nodes()];
        for pr in &self.prescriptions {
            for &node in mesh.group(&pr.group)? {
                for (axis, v) in pr.rule.components(mesh.nodes[node]).into_iter().enumerate() {
                    let Some(v) = v else { continue };
                    match out[node][axis] {
                        Some(prev) if (prev - v).abs() > CONFLICT_TOL * (1.0 + prev.abs()) => {
                            return Err(Error::ConflictingPrescription {
                                dof: 2 * node + axis,
                                first: prev,
                                second: v,
                            });
                        }
                        _ => out[node][axis] = Some(v),
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Nodes with at least one prescribed component.
pub fn characteristic_nodes(targets: &NodalTargets) -> Vec<usize> {
    targets
        .iter()
        .enumerate()
        .filter(|(_, t)| t[0].is_some() || t[1].is_some())
        .map(|(i, _)| i)
        .collect()
}
