//! Evaluation of nodal fields given on one mesh at the nodes of another,
//! through point location and inversion of the quadratic element map.

use faer::Mat;

use crate::error::{Error, Result};
use crate::fem::tri6;
use crate::mesh::{Mesh, DOFS_PER_NODE};
use crate::Point;

/// Barycentric slack accepted as "inside" an element.
pub const INSIDE_TOL: f64 = 1e-8;
/// Newton stops once the mapped point is this close to the target.
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 25;
/// Points outside the mesh by less than this fraction of the mesh diagonal are
/// evaluated on the closest point of the nearest element.
const CLAMP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalCoords {
    pub element: usize,
    pub xi: [f64; 2],
    /// Distance from the query point to `map(xi)`; zero up to round-off for
    /// located points, positive for clamped ones.
    pub distance: f64,
}

impl NaturalCoords {
    pub fn shape(&self) -> [f64; 6] {
        tri6::shape(self.xi)
    }
}

/// Smallest barycentric coordinate; negative outside the reference triangle.
fn inside_measure(xi: [f64; 2]) -> f64 {
    xi[0].min(xi[1]).min(1.0 - xi[0] - xi[1])
}

/// Euclidean projection onto the reference triangle.
fn clamp_to_triangle(xi: [f64; 2]) -> [f64; 2] {
    let [mut a, mut b] = xi;
    if a + b > 1.0 {
        let excess = 0.5 * (a + b - 1.0);
        a -= excess;
        b -= excess;
    }
    a = a.clamp(0.0, 1.0);
    b = b.clamp(0.0, 1.0);
    if a + b > 1.0 {
        // Only reached from the corner regions after clamping one coordinate.
        if xi[0] > xi[1] {
            b = 1.0 - a;
        } else {
            a = 1.0 - b;
        }
    }
    [a, b]
}

/// Solves `map(xi) = x` by Newton's method from the affine (corner) guess.
/// Returns the final iterate and whether the residual tolerance was met.
pub fn invert_map(nodes: &[Point; 6], x: Point) -> ([f64; 2], bool) {
    let (p0, p1, p2) = (nodes[0], nodes[1], nodes[2]);
    let (e1, e2, d) = (p1 - p0, p2 - p0, x - p0);
    let det = e1.cross(e2);
    let mut xi = [d.cross(e2) / det, e1.cross(d) / det];
    for _ in 0..NEWTON_MAX_ITER {
        let r = x - tri6::map_point(nodes, xi);
        if r.norm() <= NEWTON_TOL {
            return (xi, true);
        }
        let j = tri6::jacobian(nodes, xi);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return (xi, false);
        }
        let dx = (j[1][1] * r.x - j[0][1] * r.z) / det;
        let dz = (-j[1][0] * r.x + j[0][0] * r.z) / det;
        xi = [xi[0] + dx, xi[1] + dz];
        if !(xi[0].is_finite() && xi[1].is_finite()) {
            return (xi, false);
        }
    }
    let r = x - tri6::map_point(nodes, xi);
    (xi, r.norm() <= NEWTON_TOL)
}

/// Uniform-grid bucket index over element bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    clamp_distance: f64,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &mesh.nodes {
            lo = Point::new(lo.x.min(p.x), lo.z.min(p.z));
            hi = Point::new(hi.x.max(p.x), hi.z.max(p.z));
        }
        let ext = hi - lo;
        let diag = ext.norm().max(f64::MIN_POSITIVE);
        let n_el = mesh.elements.len().max(1) as f64;
        let cell = ((ext.x.max(diag * 1e-6) * ext.z.max(diag * 1e-6)) / n_el).sqrt().max(diag * 1e-6);
        let dims = [((ext.x / cell).ceil() as usize).max(1), ((ext.z / cell).ceil() as usize).max(1)];
        let mut loc = PointLocator {
            mesh,
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1]],
            clamp_distance: CLAMP_FRACTION * diag,
        };
        for (e, el) in mesh.elements.iter().enumerate() {
            let (mut a, mut b) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
            for &n in el {
                let p = mesh.nodes[n];
                a = Point::new(a.x.min(p.x), a.z.min(p.z));
                b = Point::new(b.x.max(p.x), b.z.max(p.z));
            }
            let (i0, j0) = loc.cell_of(a);
            let (i1, j1) = loc.cell_of(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(e);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (f(p.x, self.origin.x, self.dims[0]), f(p.z, self.origin.z, self.dims[1]))
    }

    fn try_element(&self, e: usize, x: Point) -> ([f64; 2], bool, f64) {
        let nodes = self.mesh.element_nodes(e);
        let (xi, converged) = invert_map(&nodes, x);
        (xi, converged, inside_measure(xi))
    }

    /// Element and natural coordinates of `x`.
    pub fn locate(&self, x: Point) -> Result<NaturalCoords> {
        let (i, j) = self.cell_of(x);
        let mut best: Option<(usize, [f64; 2], f64)> = None;
        for &e in &self.buckets[j * self.dims[0] + i] {
            let (xi, converged, inside) = self.try_element(e, x);
            if converged && inside >= -INSIDE_TOL {
                return Ok(NaturalCoords {
                    element: e,
                    xi,
                    distance: 0.0,
                });
            }
            if converged && best.map_or(true, |b| inside > b.2) {
                best = Some((e, xi, inside));
            }
        }
        // Not inside any candidate: evaluate on the closest point of the
        // nearest element in the neighbouring cells.
        let mut nearest: Option<NaturalCoords> = None;
        let ring = |a: usize, n: usize| a.saturating_sub(1)..=(a + 1).min(n - 1);
        let mut consider = |e: usize, xi: [f64; 2]| {
            let xc = clamp_to_triangle(xi);
            let d = x.distance(tri6::map_point(&self.mesh.element_nodes(e), xc));
            if nearest.map_or(true, |n| d < n.distance) {
                nearest = Some(NaturalCoords {
                    element: e,
                    xi: xc,
                    distance: d,
                });
            }
        };
        if let Some((e, xi, _)) = best {
            consider(e, xi);
        }
        for jj in ring(j, self.dims[1]) {
            for ii in ring(i, self.dims[0]) {
                for &e in &self.buckets[jj * self.dims[0] + ii] {
                    let (xi, _, _) = self.try_element(e, x);
                    if xi[0].is_finite() && xi[1].is_finite() {
                        consider(e, xi);
                    }
                }
            }
        }
        match nearest {
            Some(n) if n.distance <= self.clamp_distance => Ok(n),
            Some(n) => Err(Error::PointOutside {
                x: x.x,
                z: x.z,
                element: n.element,
                distance: n.distance,
            }),
            None => Err(Error::PointOutside {
                x: x.x,
                z: x.z,
                element: usize::MAX,
                distance: f64::INFINITY,
            }),
        }
    }
}

/// Element and natural coordinates of `x` on `mesh`.
pub fn locate_point(mesh: &Mesh, x: Point) -> Result<NaturalCoords> {
    PointLocator::new(mesh).locate(x)
}

/// Free-DOF layout of a field on a mesh: `free[i]` is the mesh DOF of row `i`.
#[derive(Debug, Clone, Copy)]
pub struct DofLayout<'a> {
    pub mesh: &'a Mesh,
    pub free: &'a [usize],
}

/// Shape-function weights of every target node inside the source mesh.
#[derive(Debug, Clone)]
pub struct TransferMap {
    pub coords: Vec<NaturalCoords>,
    /// Target nodes evaluated by clamping to the nearest element.
    pub clamped: usize,
}

impl TransferMap {
    /// Locates every node of `target` in `source`; fails with the full list
    /// of nodes that could not be located.
    pub fn new(source: &Mesh, target: &Mesh) -> Result<Self> {
        let loc = PointLocator::new(source);
        let mut coords = Vec::with_capacity(target.n_nodes());
        let mut failed = Vec::new();
        for (i, &p) in target.nodes.iter().enumerate() {
            match loc.locate(p) {
                Ok(c) => coords.push(c),
                Err(_) => {
                    failed.push(i);
                    coords.push(NaturalCoords {
                        element: 0,
                        xi: [0.0, 0.0],
                        distance: f64::INFINITY,
                    });
                }
            }
        }
        if !failed.is_empty() {
            return Err(Error::TransferFailed { nodes: failed });
        }
        let clamped = coords.iter().filter(|c| c.distance > 0.0).count();
        if clamped > 0 {
            log::warn!("{clamped} target nodes lie marginally outside the source mesh and were clamped");
        }
        Ok(TransferMap { coords, clamped })
    }

    /// Evaluates the columns of `v` (rows on `source.free`) at the target
    /// nodes and returns them on `target.free`.
    pub fn apply(&self, v: &Mat<f64>, source: DofLayout<'_>, target: DofLayout<'_>) -> Mat<f64> {
        assert_eq!(v.nrows(), source.free.len(), "basis rows must match the source free DOFs");
        let mut row_of = vec![None; source.mesh.n_dofs()];
        for (i, &d) in source.free.iter().enumerate() {
            row_of[d] = Some(i);
        }
        let mut out = Mat::zeros(target.free.len(), v.ncols());
        for (row, &dof) in target.free.iter().enumerate() {
            let (node, axis) = (dof / DOFS_PER_NODE, dof % DOFS_PER_NODE);
            let c = &self.coords[node];
            let n = c.shape();
            let el = &source.mesh.elements[c.element];
            for a in 0..6 {
                let Some(src) = row_of[DOFS_PER_NODE * el[a] + axis] else { continue };
                for col in 0..v.ncols() {
                    out[(row, col)] += n[a] * v[(src, col)];
                }
            }
        }
        out
    }
}

/// Re-represents basis `v` of the sampled mesh on the morphed reference mesh.
/// Constrained source DOFs contribute zero. Columns are not re-orthonormalized.
pub fn interpolate_basis(v: &Mat<f64>, sampled: DofLayout<'_>, morphed_ref: DofLayout<'_>) -> Result<Mat<f64>> {
    let map = TransferMap::new(sampled.mesh, morphed_ref.mesh)?;
    Ok(map.apply(v, sampled, morphed_ref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_beam, generate_unstructured_hole, GeometryParams};
    use proptest::prelude::*;

    fn curved_element() -> [Point; 6] {
        let mut n = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.1),
            Point::new(0.2, 0.9),
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
        ];
        n[3] = n[0].midpoint(n[1]) + Point::new(0.02, -0.05);
        n[4] = n[1].midpoint(n[2]) + Point::new(0.04, 0.03);
        n[5] = n[2].midpoint(n[0]) + Point::new(-0.03, 0.01);
        n
    }

    proptest! {
        #[test]
        fn newton_round_trip(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!(a + b <= 1.0);
            let nodes = curved_element();
            let x = tri6::map_point(&nodes, [a, b]);
            let (xi, ok) = invert_map(&nodes, x);
            prop_assert!(ok);
            prop_assert!((xi[0] - a).abs() < 1e-10 && (xi[1] - b).abs() < 1e-10);
        }
    }

    #[test]
    fn nodes_map_to_reference_points() {
        let mesh = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.1).unwrap();
        let loc = PointLocator::new(&mesh);
        for (i, &p) in mesh.nodes.iter().enumerate() {
            let c = loc.locate(p).unwrap();
            let n = c.shape();
            let el = mesh.elements[c.element];
            let k = el.iter().position(|&v| v == i).expect("node belongs to the element");
            assert!((n[k] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn straight_element_needs_one_newton_step() {
        let mut n = curved_element();
        n[3] = n[0].midpoint(n[1]);
        n[4] = n[1].midpoint(n[2]);
        n[5] = n[2].midpoint(n[0]);
        let x = tri6::map_point(&n, [0.3, 0.25]);
        let (xi, ok) = invert_map(&n, x);
        assert!(ok);
        // The affine guess is already the answer.
        assert!((xi[0] - 0.3).abs() < 1e-14 && (xi[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn far_point_is_rejected() {
        let mesh = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.1).unwrap();
        assert!(matches!(locate_point(&mesh, Point::new(2.0, 0.05)), Err(Error::PointOutside { .. })));
        // Just outside the boundary is clamped.
        let c = locate_point(&mesh, Point::new(1.0 + 1e-6, 0.05)).unwrap();
        assert!(c.distance > 0.0 && c.distance < 2e-6);
    }

    #[test]
    fn identity_transfer_is_exact() {
        let mesh = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.1).unwrap();
        let free: Vec<usize> = (0..mesh.n_dofs()).filter(|d| d % 3 != 0).collect();
        let v = Mat::from_fn(free.len(), 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let lay = DofLayout { mesh: &mesh, free: &free };
        let out = interpolate_basis(&v, lay, lay).unwrap();
        assert!((&out - &v).norm_max() < 1e-12);
    }

    #[test]
    fn linear_fields_transfer_exactly_between_meshes() {
        let p = GeometryParams::circular(0.4).unwrap();
        let a = generate_unstructured_hole(&p, 0.08, 1).unwrap();
        let b = generate_unstructured_hole(&p, 0.06, 2).unwrap();
        let fa: Vec<usize> = (0..a.n_dofs()).collect();
        let fb: Vec<usize> = (0..b.n_dofs()).collect();
        // u_x = x, u_z = 2 - z + 0.5 x
        let field = |m: &Mesh| Mat::from_fn(m.n_dofs(), 1, |d, _| {
            let p = m.nodes[d / 2];
            if d % 2 == 0 { p.x } else { 2.0 - p.z + 0.5 * p.x }
        });
        let map = TransferMap::new(&a, &b).unwrap();
        let out = map.apply(&field(&a), DofLayout { mesh: &a, free: &fa }, DofLayout { mesh: &b, free: &fb });
        let expected = field(&b);
        // Nodes clamped onto the polygonal hole of `a` see a small offset.
        let mut worst: f64 = 0.0;
        for (d, _) in fb.iter().enumerate() {
            let c = map.coords[d / 2];
            if c.distance == 0.0 {
                worst = worst.max((out[(d, 0)] - expected[(d, 0)]).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }
}
