//! Six-node triangle: shape functions, quadrature and element matrices.
//!
//! Natural coordinates are `xi = (L2, L3)` with `L1 = 1 - xi1 - xi2`.

use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Quadratic shape functions at `xi`: corners first, then the midside nodes
/// of edges `0-1`, `1-2`, `2-0`.
pub fn shape<T: Scalar>(xi: [T; 2]) -> [T; 6] {
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let l2 = xi[0];
    let l3 = xi[1];
    let l1 = one - l2 - l3;
    [
        l1 * (two * l1 - one),
        l2 * (two * l2 - one),
        l3 * (two * l3 - one),
        four * l1 * l2,
        four * l2 * l3,
        four * l3 * l1,
    ]
}

/// Derivatives `[dN/dxi1, dN/dxi2]` of the shape functions.
pub fn shape_grad<T: Scalar>(xi: [T; 2]) -> [[T; 2]; 6] {
    let one = T::one();
    let four = T::lit(4.0);
    let l2 = xi[0];
    let l3 = xi[1];
    let l1 = one - l2 - l3;
    // dL1/dxi = (-1, -1), dL2/dxi = (1, 0), dL3/dxi = (0, 1).
    let d1 = four * l1 - one;
    [
        [-d1, -d1],
        [four * l2 - one, T::zero()],
        [T::zero(), four * l3 - one],
        [four * (l1 - l2), -four * l2],
        [four * l3, four * l2],
        [-four * l3, four * (l1 - l3)],
    ]
}

/// Physical point `sum N_i(xi) x_i`.
pub fn map_point<T: Scalar>(nodes: &[Point2<T>; 6], xi: [T; 2]) -> Point2<T> {
    let n = shape(xi);
    let mut p = Point2::zero();
    for i in 0..6 {
        p += nodes[i] * n[i];
    }
    p
}

/// Jacobian `dx/dxi` as `[[dx/dxi1, dx/dxi2], [dz/dxi1, dz/dxi2]]`.
pub fn jacobian<T: Scalar>(nodes: &[Point2<T>; 6], xi: [T; 2]) -> [[T; 2]; 2] {
    let g = shape_grad(xi);
    let mut j = [[T::zero(); 2]; 2];
    for i in 0..6 {
        for k in 0..2 {
            j[0][k] = j[0][k] + nodes[i].x * g[i][k];
            j[1][k] = j[1][k] + nodes[i].z * g[i][k];
        }
    }
    j
}

/// Quadrature rule on the reference triangle (weights sum to 1/2).
pub struct Rule<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

/// Three-point rule, exact for quadratics.
pub fn rule_degree2<T: Scalar>() -> Rule<T> {
    let a = T::lit(1.0 / 6.0);
    let b = T::lit(2.0 / 3.0);
    Rule {
        points: vec![[a, a], [b, a], [a, b]],
        weights: vec![a; 3],
    }
}

/// Six-point symmetric rule, exact for quartics.
pub fn rule_degree4<T: Scalar>() -> Rule<T> {
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (a, w) in [
        (0.445_948_490_915_965, 0.223_381_589_678_011),
        (0.091_576_213_509_771, 0.109_951_743_655_322),
    ] {
        let c = 1.0 - 2.0 * a;
        for xi in [[a, a], [c, a], [a, c]] {
            points.push([T::lit(xi[0]), T::lit(xi[1])]);
            weights.push(T::lit(0.5 * w));
        }
    }
    Rule { points, weights }
}

/// Plane-stress constitutive matrix.
pub fn plane_stress<T: Scalar>(e: T, nu: T) -> [[T; 3]; 3] {
    let one = T::one();
    let f = e / (one - nu * nu);
    [
        [f, f * nu, T::zero()],
        [f * nu, f, T::zero()],
        [T::zero(), T::zero(), f * (one - nu) * T::lit(0.5)],
    ]
}

/// Element matrix of size 12 stored row-major, DOFs ordered
/// `(x0, z0, x1, z1, ..., x5, z5)`.
pub type ElementMatrix<T> = [[T; 12]; 12];

/// Jacobian determinant and physical shape-function gradients at `xi`.
fn physical_gradients<T: Scalar>(nodes: &[Point2<T>; 6], xi: [T; 2]) -> (T, [[T; 2]; 6]) {
    let j = jacobian(nodes, xi);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let g = shape_grad(xi);
    let mut out = [[T::zero(); 2]; 6];
    for i in 0..6 {
        // Solve J^T [dN/dx, dN/dz] = [dN/dxi1, dN/dxi2].
        out[i][0] = (j[1][1] * g[i][0] - j[1][0] * g[i][1]) / det;
        out[i][1] = (-j[0][1] * g[i][0] + j[0][0] * g[i][1]) / det;
    }
    (det, out)
}

/// Stiffness `t int B^T D B dA` with the three-point rule. Returns `Err(det)`
/// with the offending determinant if the map is not orientation-preserving.
pub fn stiffness<T: Scalar>(nodes: &[Point2<T>; 6], d: &[[T; 3]; 3], t: T) -> Result<ElementMatrix<T>, T> {
    let rule = rule_degree2::<T>();
    let mut k = [[T::zero(); 12]; 12];
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let (det, dn) = physical_gradients(nodes, *xi);
        if !(det > T::zero()) {
            return Err(det);
        }
        // B is 3 x 12: rows eps_xx, eps_zz, gamma_xz.
        let mut b = [[T::zero(); 12]; 3];
        for i in 0..6 {
            b[0][2 * i] = dn[i][0];
            b[1][2 * i + 1] = dn[i][1];
            b[2][2 * i] = dn[i][1];
            b[2][2 * i + 1] = dn[i][0];
        }
        let mut db = [[T::zero(); 12]; 3];
        for r in 0..3 {
            for c in 0..12 {
                db[r][c] = d[r][0] * b[0][c] + d[r][1] * b[1][c] + d[r][2] * b[2][c];
            }
        }
        let scale = *w * det * t;
        for r in 0..12 {
            for c in 0..12 {
                let v = b[0][r] * db[0][c] + b[1][r] * db[1][c] + b[2][r] * db[2][c];
                k[r][c] = k[r][c] + scale * v;
            }
        }
    }
    symmetrize(&mut k);
    Ok(k)
}

/// Consistent mass `rho t int N^T N dA` with the six-point rule.
pub fn mass<T: Scalar>(nodes: &[Point2<T>; 6], rho: T, t: T) -> Result<ElementMatrix<T>, T> {
    let rule = rule_degree4::<T>();
    let mut m = [[T::zero(); 12]; 12];
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let j = jacobian(nodes, *xi);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det > T::zero()) {
            return Err(det);
        }
        let n = shape(*xi);
        let scale = *w * det * rho * t;
        for a in 0..6 {
            for b in 0..6 {
                let v = scale * n[a] * n[b];
                m[2 * a][2 * b] = m[2 * a][2 * b] + v;
                m[2 * a + 1][2 * b + 1] = m[2 * a + 1][2 * b + 1] + v;
            }
        }
    }
    symmetrize(&mut m);
    Ok(m)
}

// Exact symmetry regardless of summation order.
fn symmetrize<T: Scalar>(a: &mut ElementMatrix<T>) {
    let half = T::lit(0.5);
    for r in 0..12 {
        for c in r + 1..12 {
            let v = (a[r][c] + a[c][r]) * half;
            a[r][c] = v;
            a[c][r] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn straight(corners: [Point2<f64>; 3]) -> [Point2<f64>; 6] {
        let [a, b, c] = corners;
        [a, b, c, a.midpoint(b), b.midpoint(c), c.midpoint(a)]
    }

    const NODES_XI: [[f64; 2]; 6] = [
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 0.0],
        [0.5, 0.5],
        [0.0, 0.5],
    ];

    #[test]
    fn kronecker_property() {
        for (i, xi) in NODES_XI.iter().enumerate() {
            let n = shape(*xi);
            for (j, v) in n.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let xi = [0.23f64, 0.41];
        let g = shape_grad(xi);
        let h = 1e-6;
        for k in 0..2 {
            let mut p = xi;
            let mut m = xi;
            p[k] += h;
            m[k] -= h;
            let (np, nm) = (shape(p), shape(m));
            for i in 0..6 {
                assert!(((np[i] - nm[i]) / (2.0 * h) - g[i][k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rules_integrate_monomials() {
        // int_T xi1^a xi2^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        let exact = |a: u32, b: u32| fact(a) * fact(b) / fact(a + b + 2);
        let r2 = rule_degree2::<f64>();
        let r4 = rule_degree4::<f64>();
        for (rule, deg) in [(&r2, 2), (&r4, 4)] {
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((q - exact(a, b)).abs() < 1e-14, "deg {deg} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn rigid_modes_are_in_the_stiffness_null_space() {
        let nodes = straight([
            Point2::new(0.1, 0.0),
            Point2::new(1.2, 0.3),
            Point2::new(0.4, 0.9),
        ]);
        let d = plane_stress(2.1e11, 0.3);
        let k = stiffness(&nodes, &d, 0.01).unwrap();
        let kmax = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let modes: [Box<dyn Fn(Point2<f64>) -> [f64; 2]>; 3] = [
            Box::new(|_| [1.0, 0.0]),
            Box::new(|_| [0.0, 1.0]),
            Box::new(|p| [-p.z, p.x]),
        ];
        for mode in &modes {
            let u: Vec<f64> = nodes.iter().flat_map(|p| mode(*p)).collect();
            for row in &k {
                let r: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
                assert!(r.abs() < 1e-9 * kmax);
            }
        }
    }

    #[test]
    fn single_precision_mass_sums_to_element_mass() {
        let nodes = [
            Point2::new(0.0f32, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.0, 0.5),
        ];
        let m = mass(&nodes, 2.0, 0.5).unwrap();
        let total: f32 = (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).map(|(a, b)| m[2 * a][2 * b]).sum();
        assert!((total - 0.5).abs() < 1e-6);
    }

    #[test]
    fn inverted_element_is_rejected() {
        let nodes = straight([
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 0.0),
        ]);
        assert!(stiffness(&nodes, &plane_stress(1.0, 0.3), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let xi = [a * (1.0 - b), b];
            let s: f64 = shape(xi).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            let g = shape_grad(xi);
            for k in 0..2 {
                let gs: f64 = g.iter().map(|r| r[k]).sum();
                prop_assert!(gs.abs() < 1e-12);
            }
        }
    }
}
