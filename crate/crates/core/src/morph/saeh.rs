//! Spring analogy with elastic hardening: lineal edge springs plus
//! torsional corner springs, stiffened on poorly shaped triangles.

use std::collections::HashMap;

use super::spec::NodalTargets;
use crate::error::{Error, Result};
use crate::geometry::{signed_area, triangle_quality};
use crate::linalg::{Pattern, SparseCholesky};
use crate::mesh::Mesh;
use crate::Point;

/// Corner-node sub-triangles of a TRI6 with midsides on (0-1), (1-2), (2-0).
pub const SUB_TRIANGLES: [[usize; 3]; 4] = [[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]];

/// Lineal spring of stiffness `1/l` along the edge `a -> b`, in the DOF
/// order `[x_a, z_a, x_b, z_b]`.
pub fn lineal_spring(a: Point, b: Point) -> [[f64; 4]; 4] {
    let d = b - a;
    let l = d.norm();
    let k = 1.0 / l;
    let (c, s) = (d.x / l, d.z / l);
    let block = [[c * c, c * s], [c * s, s * s]];
    let mut out = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = k * block[i][j];
            out[i + 2][j + 2] = k * block[i][j];
            out[i][j + 2] = -k * block[i][j];
            out[i + 2][j] = -k * block[i][j];
        }
    }
    out
}

/// Torsional springs at the three corners of triangle `p`, in the DOF
/// order `[x_0, z_0, x_1, z_1, x_2, z_2]`, before hardening.
pub fn torsional_springs(p: [Point; 3]) -> [[f64; 6]; 6] {
    let area = signed_area(p[0], p[1], p[2]);
    // Row i of R maps nodal displacements to the angle change at corner i.
    let mut r = [[0.0; 6]; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (eij, eik) = (p[j] - p[i], p[k] - p[i]);
        let (lij2, lik2) = (eij.dot(eij), eik.dot(eik));
        let (aij, bij) = (eij.x / lij2, eij.z / lij2);
        let (aik, bik) = (eik.x / lik2, eik.z / lik2);
        r[i][2 * i] = bik - bij;
        r[i][2 * i + 1] = aij - aik;
        r[i][2 * j] = bij;
        r[i][2 * j + 1] = -aij;
        r[i][2 * k] = -bik;
        r[i][2 * k + 1] = aik;
        c[i] = lij2 * lik2 / (4.0 * area * area);
    }
    let mut out = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            out[a][b] = (0..3).map(|i| r[i][a] * c[i] * r[i][b]).sum();
        }
    }
    out
}

/// Hardening factor `4 R / r - 1`, equal to 7 on an equilateral triangle.
pub fn hardening(p: [Point; 3]) -> f64 {
    let q = triangle_quality(p[0], p[1], p[2]);
    4.0 * q.circumradius / q.inradius - 1.0
}

pub(crate) struct SaehResult {
    pub nodes: Vec<Point>,
}

/// Runs `steps` equal increments of the prescribed displacements,
/// reassembling the spring network on the updated geometry each time.
pub(crate) fn morph(mesh: &Mesh, targets: &NodalTargets, steps: usize) -> Result<SaehResult> {
    if steps == 0 {
        return Err(Error::InvalidInput("SAEH needs at least one increment".into()));
    }
    let n_nodes = mesh.n_nodes();
    let tris: Vec<[usize; 3]> = mesh
        .elements
        .iter()
        .flat_map(|el| SUB_TRIANGLES.map(|t| t.map(|a| el[a])))
        .collect();
    let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
    for t in &tris {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }

    let mut index = vec![None; 2 * n_nodes];
    let mut n_free = 0;
    for (node, t) in targets.iter().enumerate() {
        for axis in 0..2 {
            if t[axis].is_none() {
                index[2 * node + axis] = Some(n_free);
                n_free += 1;
            }
        }
    }
    let dofs_of = |t: &[usize; 3]| -> [usize; 6] { [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1] };
    let mut coords = Vec::with_capacity(tris.len() * 36);
    for t in &tris {
        let dofs = dofs_of(t);
        for &da in &dofs {
            let Some(r) = index[da] else { continue };
            for &db in &dofs {
                if let Some(c) = index[db] {
                    coords.push((r, c));
                }
            }
        }
    }
    let pattern = Pattern::from_coords(n_free, &coords);

    let mut x = mesh.nodes.clone();
    let mut applied = vec![[0.0f64; 2]; n_nodes];
    for step in 1..=steps {
        let mut values = Vec::with_capacity(coords.len());
        let mut rhs = vec![0.0; n_free];
        // Increment of the prescribed components; the last one closes the gap
        // exactly so rounding does not accumulate.
        let mut du = vec![0.0; 2 * n_nodes];
        for (node, t) in targets.iter().enumerate() {
            for axis in 0..2 {
                if let Some(total) = t[axis] {
                    let goal = if step == steps { total } else { total * step as f64 / steps as f64 };
                    du[2 * node + axis] = goal - applied[node][axis];
                }
            }
        }
        for t in &tris {
            let p = t.map(|a| x[a]);
            let mut ke = torsional_springs(p);
            let c_eh = hardening(p);
            for row in ke.iter_mut() {
                row.iter_mut().for_each(|v| *v *= c_eh);
            }
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let w = 1.0 / edge_count[&(a.min(b), a.max(b))] as f64;
                let kl = lineal_spring(x[a], x[b]);
                let local = [2 * i, 2 * i + 1, 2 * ((i + 1) % 3), 2 * ((i + 1) % 3) + 1];
                for (r, &lr) in local.iter().enumerate() {
                    for (c, &lc) in local.iter().enumerate() {
                        ke[lr][lc] += w * kl[r][c];
                    }
                }
            }
            let dofs = dofs_of(t);
            for (a, &da) in dofs.iter().enumerate() {
                let Some(r) = index[da] else { continue };
                for (b, &db) in dofs.iter().enumerate() {
                    match index[db] {
                        Some(_) => values.push(ke[a][b]),
                        None => rhs[r] -= ke[a][b] * du[db],
                    }
                }
            }
        }
        let k = pattern.gather(&values);
        if n_free > 0 {
            let chol = SparseCholesky::new(&k)?;
            chol.solve_in_place(&mut rhs);
        }
        for node in 0..n_nodes {
            for axis in 0..2 {
                let d = match index[2 * node + axis] {
                    Some(i) => rhs[i],
                    None => du[2 * node + axis],
                };
                applied[node][axis] += d;
                if axis == 0 {
                    x[node].x += d;
                } else {
                    x[node].z += d;
                }
            }
        }
        let (worst, area) = tris
            .iter()
            .enumerate()
            .map(|(i, t)| (i, signed_area(x[t[0]], x[t[1]], x[t[2]])))
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        if area <= 0.0 {
            return Err(Error::ElementInversion {
                increment: step,
                element: worst / 4,
                area,
            });
        }
    }
    Ok(SaehResult { nodes: x })
}
