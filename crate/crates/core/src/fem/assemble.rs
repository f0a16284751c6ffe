use serde::{Deserialize, Serialize};

use super::material::Material;
use super::tri6;
use crate::error::{Error, Result};
use crate::linalg::{Csc, Pattern};
use crate::mesh::{Mesh, DOFS_PER_NODE};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Z => 1,
        }
    }
}

/// Single nodal DOF picked as the mesh node nearest to `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalDof {
    pub at: Point,
    pub direction: Axis,
    #[serde(default = "unit")]
    pub magnitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl NodalDof {
    pub fn new(at: Point, direction: Axis) -> Self {
        NodalDof {
            at,
            direction,
            magnitude: 1.0,
        }
    }

    /// Global DOF index on `mesh`.
    pub fn resolve(&self, mesh: &Mesh) -> usize {
        DOFS_PER_NODE * mesh.nearest_node(self.at) + self.direction.index()
    }
}

/// Full-order model `(s^2 M + s C + K) q = f u`, `y = g q` on the free DOFs.
#[derive(Debug, Clone)]
pub struct FomSystem {
    pub m: Csc,
    pub c: Csc,
    pub k: Csc,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Eliminated DOFs, as mesh DOF indices.
    pub constrained_dofs: Vec<usize>,
    /// Mesh DOF index of every free DOF.
    pub free_dofs: Vec<usize>,
    /// DOF count of the mesh before elimination.
    pub n_full: usize,
    pub mesh_id: String,
    pub material: Material,
}

impl FomSystem {
    /// Number of free DOFs.
    pub fn n(&self) -> usize {
        self.free_dofs.len()
    }

    /// Scatters a free-DOF vector into a mesh-DOF vector with zeros on the
    /// constrained DOFs.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full];
        for (v, &d) in free.iter().zip(&self.free_dofs) {
            full[d] = *v;
        }
        full
    }

    /// Map from mesh DOF to free index.
    pub fn free_index(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.n_full];
        for (i, &d) in self.free_dofs.iter().enumerate() {
            map[d] = Some(i);
        }
        map
    }
}

struct Element {
    dofs: [usize; 12],
    m: tri6::ElementMatrix<f64>,
    k: tri6::ElementMatrix<f64>,
}

fn element_matrices(mesh: &Mesh, mat: &Material) -> Result<Vec<Element>> {
    mat.validate()?;
    let d = tri6::plane_stress(mat.e, mat.nu);
    mesh.elements
        .iter()
        .enumerate()
        .map(|(e, el)| {
            let nodes = mesh.element_nodes(e);
            let k = tri6::stiffness(&nodes, &d, mat.t)
                .map_err(|det| Error::SingularJacobian { element: e, det })?;
            let m = tri6::mass(&nodes, mat.rho, mat.t)
                .map_err(|det| Error::SingularJacobian { element: e, det })?;
            let mut dofs = [0usize; 12];
            for (a, &node) in el.iter().enumerate() {
                dofs[2 * a] = DOFS_PER_NODE * node;
                dofs[2 * a + 1] = DOFS_PER_NODE * node + 1;
            }
            Ok(Element { dofs, m, k })
        })
        .collect()
}

/// Assembles `M` and `K` over the mesh DOFs listed in `index` (mesh DOF to
/// matrix row, `None` to drop). Both share one sparsity pattern.
fn assemble_pair(elements: &[Element], index: &[Option<usize>], n: usize) -> (Csc, Csc) {
    let mut coords = Vec::with_capacity(elements.len() * 144);
    let mut mv = Vec::with_capacity(elements.len() * 144);
    let mut kv = Vec::with_capacity(elements.len() * 144);
    for el in elements {
        for (a, &da) in el.dofs.iter().enumerate() {
            let Some(r) = index[da] else { continue };
            for (b, &db) in el.dofs.iter().enumerate() {
                let Some(c) = index[db] else { continue };
                coords.push((r, c));
                mv.push(el.m[a][b]);
                kv.push(el.k[a][b]);
            }
        }
    }
    let pattern = Pattern::from_coords(n, &coords);
    (pattern.gather(&mv), pattern.gather(&kv))
}

/// Mass and stiffness over all mesh DOFs, without boundary conditions.
pub fn assemble_unconstrained(mesh: &Mesh, mat: &Material) -> Result<(Csc, Csc)> {
    let elements = element_matrices(mesh, mat)?;
    let n = mesh.n_dofs();
    let index: Vec<Option<usize>> = (0..n).map(Some).collect();
    Ok(assemble_pair(&elements, &index, n))
}

/// Assembles the full-order model with every DOF of group `fixed` eliminated,
/// a unit-scaled point force at `input` and a point displacement output at
/// `output`.
pub fn assemble(
    mesh: &Mesh,
    mat: &Material,
    fixed: &str,
    input: &NodalDof,
    output: &NodalDof,
) -> Result<FomSystem> {
    let n_full = mesh.n_dofs();
    let mut constrained = vec![false; n_full];
    for &node in mesh.group(fixed)? {
        for k in 0..DOFS_PER_NODE {
            constrained[DOFS_PER_NODE * node + k] = true;
        }
    }
    let free_dofs: Vec<usize> = (0..n_full).filter(|&d| !constrained[d]).collect();
    let constrained_dofs: Vec<usize> = (0..n_full).filter(|&d| constrained[d]).collect();
    let mut index = vec![None; n_full];
    for (i, &d) in free_dofs.iter().enumerate() {
        index[d] = Some(i);
    }
    let n = free_dofs.len();

    let in_dof = input.resolve(mesh);
    let out_dof = output.resolve(mesh);
    let (Some(fi), Some(gi)) = (index[in_dof], index[out_dof]) else {
        return Err(Error::InvalidInput(format!(
            "input dof {in_dof} or output dof {out_dof} lies on the fixed group `{fixed}`"
        )));
    };

    let elements = element_matrices(mesh, mat)?;
    let (m, k) = assemble_pair(&elements, &index, n);
    let c = m.with_values(
        m.values
            .iter()
            .zip(&k.values)
            .map(|(mv, kv)| mat.alpha * mv + mat.beta * kv)
            .collect(),
    );
    let mut f = vec![0.0; n];
    f[fi] = input.magnitude;
    let mut g = vec![0.0; n];
    g[gi] = 1.0;

    Ok(FomSystem {
        m,
        c,
        k,
        f,
        g,
        constrained_dofs,
        free_dofs,
        n_full,
        mesh_id: mesh.id(),
        material: *mat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_beam, GeometryParams};

    fn beam() -> Mesh {
        generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.05).unwrap()
    }

    fn fom(mesh: &Mesh) -> FomSystem {
        assemble(
            mesh,
            &Material::steel_plate(),
            "Gc1",
            &NodalDof::new(Point::new(1.0, 0.1), Axis::Z),
            &NodalDof::new(Point::new(1.0, 0.0), Axis::Z),
        )
        .unwrap()
    }

    #[test]
    fn rayleigh_damping_is_exact() {
        let s = fom(&beam());
        let mat = Material::steel_plate();
        for ((c, m), k) in s.c.values.iter().zip(&s.m.values).zip(&s.k.values) {
            assert_eq!(*c, mat.alpha * m + mat.beta * k);
        }
        assert_eq!(s.m.row_idx, s.k.row_idx);
        assert_eq!(s.m.max_asymmetry(), 0.0);
        assert_eq!(s.k.max_asymmetry(), 0.0);
    }

    #[test]
    fn constrained_dofs_are_removed() {
        let mesh = beam();
        let s = fom(&mesh);
        assert_eq!(s.constrained_dofs.len(), 2 * mesh.group("Gc1").unwrap().len());
        assert_eq!(s.n() + s.constrained_dofs.len(), mesh.n_dofs());
        assert_eq!(s.f.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(s.g.iter().sum::<f64>(), 1.0);
        let full = s.expand(&vec![1.0; s.n()]);
        assert!(s.constrained_dofs.iter().all(|&d| full[d] == 0.0));
    }

    #[test]
    fn missing_fixed_group_is_an_error() {
        let mesh = beam();
        let r = assemble(
            &mesh,
            &Material::steel_plate(),
            "Gc9",
            &NodalDof::new(Point::new(1.0, 0.1), Axis::Z),
            &NodalDof::new(Point::new(1.0, 0.0), Axis::Z),
        );
        assert!(matches!(r, Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn input_on_fixed_edge_is_an_error() {
        let mesh = beam();
        let r = assemble(
            &mesh,
            &Material::steel_plate(),
            "Gc1",
            &NodalDof::new(Point::new(0.0, 0.1), Axis::Z),
            &NodalDof::new(Point::new(1.0, 0.0), Axis::Z),
        );
        assert!(r.is_err());
    }
}
