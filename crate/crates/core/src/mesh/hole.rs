use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use super::distmesh::{distmesh_2d, DistmeshOptions};
use super::params::{GeometryCase, GeometryParams, HoleShape, PLATE_SIZE};
use super::{enrich_quadratic, Mesh};
use crate::error::{Error, Result};
use crate::Point;

/// Signed distance to the square `[0, s]^2` (distmesh's rectangle form:
/// exact inside, an underestimate beyond the corners).
fn d_square(p: Point, s: f64) -> f64 {
    -(p.z).min(s - p.z).min(p.x).min(s - p.x)
}

/// Exact signed distance to an axis-aligned ellipse, negative inside.
pub(crate) fn d_ellipse(p: Point, hole: &HoleShape) -> f64 {
    let v = p - hole.center;
    if hole.is_circle() {
        return v.norm() - hole.a;
    }
    let (mut y0, mut y1, mut e0, mut e1) = (v.x.abs(), v.z.abs(), hole.a, hole.b);
    if e0 < e1 {
        std::mem::swap(&mut y0, &mut y1);
        std::mem::swap(&mut e0, &mut e1);
    }
    let dist = unsigned_ellipse_distance(e0, e1, y0, y1);
    let inside = (v.x / hole.a).powi(2) + (v.z / hole.b).powi(2) < 1.0;
    if inside {
        -dist
    } else {
        dist
    }
}

// Eberly's robust first-quadrant solution, e0 >= e1, y0, y1 >= 0.
fn unsigned_ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1).powi(2);
            let sbar = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (sbar + r0);
            let x1 = y1 / (sbar + 1.0);
            ((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt()
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).sqrt();
            ((x0 - y0).powi(2) + x1 * x1).sqrt()
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Relative element size near the hole.
///
/// Circle: `0.05 + 0.3 (|x - x_c| - d/2)`, i.e. the base size grows linearly
/// with the distance from the hole boundary. Ellipse:
/// `0.5 sqrt(((x-x_c)/(d_x/2))^2 + ((z-z_c)/(d_z/2))^2)`.
fn size_function(case: GeometryCase, hole: HoleShape) -> impl Fn(Point) -> f64 {
    move |p: Point| {
        let v = p - hole.center;
        match case {
            GeometryCase::EllipticHole => {
                0.5 * ((v.x / hole.a).powi(2) + (v.z / hole.b).powi(2)).sqrt()
            }
            _ => 0.05 + 0.3 * (v.norm() - hole.a),
        }
    }
}

/// Unstructured TRI6 mesh of the unit plate with a circular or elliptic hole.
///
/// Corner nodes come from [`distmesh_2d`] with initial spacing `h0`. Boundary
/// nodes are then snapped exactly onto the plate sides and the hole outline,
/// midside nodes are added at edge midpoints, and those on the hole are
/// projected onto the outline as well.
///
/// Groups: `Gc1` bottom, `Gc2` right, `Gc3` top, `Gc4` left (each sorted along
/// the edge), `Gc5` hole nodes sorted by `atan2(z - z_c, x - x_c)` in `[0, 2pi)`.
pub fn generate_unstructured_hole(params: &GeometryParams, h0: f64, seed: u64) -> Result<Mesh> {
    let hole = params.hole().ok_or_else(|| {
        Error::InvalidInput("unstructured generator expects a plate with a hole".into())
    })?;
    let s = PLATE_SIZE;
    if hole.center.x - hole.a <= 0.0
        || hole.center.x + hole.a >= s
        || hole.center.z - hole.b <= 0.0
        || hole.center.z + hole.b >= s
    {
        return Err(Error::InvalidInput("hole must lie strictly inside the plate".into()));
    }

    let fd = move |p: Point| d_square(p, s).max(-d_ellipse(p, &hole));
    let fh = size_function(params.case, hole);
    let pfix = [
        Point::new(0.0, 0.0),
        Point::new(s, 0.0),
        Point::new(s, s),
        Point::new(0.0, s),
    ];
    let tri = distmesh_2d(
        fd,
        fh,
        h0,
        (Point::new(0.0, 0.0), Point::new(s, s)),
        &pfix,
        seed,
        &DistmeshOptions::default(),
    )?;
    let iterations = tri.iterations;

    let mut boundary: BTreeSet<usize> = BTreeSet::new();
    let mut bedges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in &tri.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *bedges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let bedges: Vec<(usize, usize)> = bedges
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(e, _)| e)
        .collect();
    for &(a, b) in &bedges {
        boundary.insert(a);
        boundary.insert(b);
    }

    let mut points = tri.points;
    let mut on_hole = vec![false; points.len()];
    for &i in &boundary {
        let p = points[i];
        let dh = d_ellipse(p, &hole).abs();
        let sides = [p.z, s - p.x, s - p.z, p.x];
        let (side, ds) = sides
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &d)| if d.abs() < acc.1 { (k, d.abs()) } else { acc });
        if dh < ds {
            points[i] = hole.project(p);
            on_hole[i] = true;
        } else {
            match side {
                0 => points[i].z = 0.0,
                1 => points[i].x = s,
                2 => points[i].z = s,
                _ => points[i].x = 0.0,
            }
        }
    }
    for (i, p) in pfix.iter().enumerate() {
        // Fixed points are inserted first and survive compaction in order of use,
        // so locate them by position.
        let j = points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(*p).total_cmp(&b.1.distance(*p)))
            .map(|(j, _)| j)
            .unwrap();
        if points[j].distance(*p) > 1e-9 {
            return Err(Error::MeshGeneration {
                iterations,
                reason: format!("plate corner {i} missing from triangulation"),
            });
        }
        points[j] = *p;
    }

    let n_corner = points.len();
    let (mut nodes, elements) = enrich_quadratic(points, &tri.triangles);
    let mut hole_nodes: Vec<usize> = (0..n_corner).filter(|&i| on_hole[i]).collect();
    for el in &elements {
        for k in 0..3 {
            let (a, b) = (el[k], el[(k + 1) % 3]);
            if a < n_corner && on_hole[a] && on_hole[b] && bedges.binary_search(&(a.min(b), a.max(b))).is_ok() {
                let m = el[k + 3];
                nodes[m] = hole.project(nodes[m]);
                hole_nodes.push(m);
            }
        }
    }
    hole_nodes.sort_unstable();
    hole_nodes.dedup();

    let phi = |p: Point| {
        let a = (p.z - hole.center.z).atan2(p.x - hole.center.x);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    };
    hole_nodes.sort_by(|&i, &j| phi(nodes[i]).total_cmp(&phi(nodes[j])));

    let side_group = |on: &dyn Fn(Point) -> bool, key: &dyn Fn(Point) -> f64| {
        let mut g: Vec<usize> = (0..nodes.len()).filter(|&i| on(nodes[i])).collect();
        g.sort_by(|&i, &j| key(nodes[i]).total_cmp(&key(nodes[j])));
        g
    };
    let mut groups = BTreeMap::new();
    groups.insert("Gc1".to_string(), side_group(&|p| p.z == 0.0, &|p| p.x));
    groups.insert("Gc2".to_string(), side_group(&|p| p.x == s, &|p| p.z));
    groups.insert("Gc3".to_string(), side_group(&|p| p.z == s, &|p| p.x));
    groups.insert("Gc4".to_string(), side_group(&|p| p.x == 0.0, &|p| p.z));
    groups.insert("Gc5".to_string(), hole_nodes);

    let mesh = Mesh {
        nodes,
        elements,
        groups,
    };
    mesh.validate().map_err(|e| Error::MeshGeneration {
        iterations,
        reason: format!("snapping boundary nodes produced an invalid mesh: {e}"),
    })?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_distance_matches_circle_limit() {
        let h = HoleShape {
            center: Point::new(0.0, 0.0),
            a: 0.3,
            b: 0.3 * (1.0 - 1e-12),
        };
        for p in [Point::new(0.5, 0.2), Point::new(0.1, -0.05), Point::new(-0.4, 0.7)] {
            let exact = p.norm() - 0.3;
            assert!((d_ellipse(p, &h) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipse_distance_is_orthogonal_projection() {
        let h = HoleShape {
            center: Point::new(0.5, 0.5),
            a: 0.2,
            b: 0.1,
        };
        // Brute-force minimum over a fine parametrisation of the outline.
        for p in [Point::new(0.9, 0.8), Point::new(0.55, 0.52), Point::new(0.1, 0.45)] {
            let brute = (0..200_000)
                .map(|k| {
                    let t = TAU * k as f64 / 200_000.0;
                    p.distance(h.center + Point::new(h.a * t.cos(), h.b * t.sin()))
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d_ellipse(p, &h).abs() - brute).abs() < 1e-8, "{p:?}");
        }
    }
}
