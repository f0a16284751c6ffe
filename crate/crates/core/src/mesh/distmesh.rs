//! Force-equilibrium triangulation of a domain given by a signed distance
//! function, after Persson and Strang's `distmesh2d`.
//!
//! Bars between Delaunay neighbours act as springs that only push; points
//! leaving the domain are projected back along the numerical gradient of the
//! distance function. Initial points are thinned with a seeded generator, so a
//! fixed seed reproduces the same mesh.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, HasPosition, Point2 as SPoint, Triangulation as _};

use crate::error::{Error, Result};
use crate::geometry::signed_area;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistmeshOptions {
    /// Internal pressure factor: target bar lengths exceed the actual ones.
    pub fscale: f64,
    /// Pseudo time step of the force update.
    pub deltat: f64,
    /// Retriangulate once a point moved more than `ttol * h0`.
    pub ttol: f64,
    /// Converged when all interior moves are below `dptol * h0`.
    pub dptol: f64,
    pub max_iterations: usize,
}

impl Default for DistmeshOptions {
    fn default() -> Self {
        Self {
            fscale: 1.2,
            deltat: 0.2,
            ttol: 0.1,
            dptol: 0.001,
            max_iterations: 500,
        }
    }
}

/// Linear triangulation with counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub points: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Indexed {
    pos: SPoint<f64>,
    idx: usize,
}

impl HasPosition for Indexed {
    type Scalar = f64;
    fn position(&self) -> SPoint<f64> {
        self.pos
    }
}

fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let verts: Vec<Indexed> = points
        .iter()
        .enumerate()
        .map(|(idx, p)| Indexed {
            pos: SPoint::new(p.x, p.z),
            idx,
        })
        .collect();
    let dt = DelaunayTriangulation::<Indexed>::bulk_load(verts)
        .map_err(|e| Error::MeshGeneration {
            iterations: 0,
            reason: format!("delaunay insertion failed: {e:?}"),
        })?;
    Ok(dt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.data().idx))
        .collect())
}

/// Triangulates `{fd < 0}` with relative size function `fh`.
///
/// `h0` is the initial point spacing, `bbox` = `(min, max)` corners enclosing
/// the domain and `pfix` points that never move.
pub fn distmesh_2d(
    fd: impl Fn(Point) -> f64,
    fh: impl Fn(Point) -> f64,
    h0: f64,
    bbox: (Point, Point),
    pfix: &[Point],
    seed: u64,
    opts: &DistmeshOptions,
) -> Result<Triangulation> {
    if !(h0 > 0.0) {
        return Err(Error::InvalidInput(format!("h0 must be positive, got {h0}")));
    }
    let geps = 1e-3 * h0;
    let deps = f64::EPSILON.sqrt() * h0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Equilateral grid, every other row shifted by h0/2.
    let mut grid = Vec::new();
    let dz = h0 * 3f64.sqrt() / 2.0;
    let ncols = ((bbox.1.x - bbox.0.x) / h0).floor() as usize + 1;
    let nrows = ((bbox.1.z - bbox.0.z) / dz).floor() as usize + 1;
    for j in 0..nrows {
        let shift = if j % 2 == 1 { 0.5 * h0 } else { 0.0 };
        for i in 0..ncols {
            let p = Point::new(bbox.0.x + i as f64 * h0 + shift, bbox.0.z + j as f64 * dz);
            if fd(p) < geps {
                grid.push(p);
            }
        }
    }
    let r0: Vec<f64> = grid.iter().map(|&p| 1.0 / fh(p).powi(2)).collect();
    let r0_max = r0.iter().cloned().fold(0.0, f64::max);
    let mut p: Vec<Point> = pfix.to_vec();
    for (q, r) in grid.into_iter().zip(r0) {
        let keep = rng.random::<f64>() < r / r0_max;
        if keep && !pfix.iter().any(|f| f.distance(q) < geps) {
            p.push(q);
        }
    }
    let nfix = pfix.len();
    let n = p.len();
    if n < 3 {
        return Err(Error::MeshGeneration {
            iterations: 0,
            reason: format!("only {n} initial points inside the domain"),
        });
    }

    let centroid_inside = |pts: &[Point], t: &[usize; 3]| {
        let c = Point::new(
            (pts[t[0]].x + pts[t[1]].x + pts[t[2]].x) / 3.0,
            (pts[t[0]].z + pts[t[1]].z + pts[t[2]].z) / 3.0,
        );
        fd(c) < -geps
    };

    let mut pold = vec![Point::new(f64::INFINITY, f64::INFINITY); n];
    let mut bars: Vec<(usize, usize)> = Vec::new();
    let mut ftot = vec![Point::zero(); n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let moved = p
            .iter()
            .zip(&pold)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        if !(moved / h0 <= opts.ttol) {
            pold.clone_from(&p);
            let tris: Vec<[usize; 3]> = delaunay(&p)?
                .into_iter()
                .filter(|t| centroid_inside(&p, t))
                .collect();
            bars.clear();
            for t in &tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    bars.push((a.min(b), a.max(b)));
                }
            }
            bars.sort_unstable();
            bars.dedup();
        }

        let mut sum_l2 = 0.0;
        let mut sum_h2 = 0.0;
        let mut hbars = Vec::with_capacity(bars.len());
        for &(a, b) in &bars {
            let hb = fh(p[a].midpoint(p[b]));
            sum_l2 += (p[a] - p[b]).dot(p[a] - p[b]);
            sum_h2 += hb * hb;
            hbars.push(hb);
        }
        let scale = opts.fscale * (sum_l2 / sum_h2).sqrt();
        ftot.iter_mut().for_each(|f| *f = Point::zero());
        for (&(a, b), hb) in bars.iter().zip(&hbars) {
            let barvec = p[a] - p[b];
            let l = barvec.norm();
            let f = (hb * scale - l).max(0.0);
            if f > 0.0 {
                let fv = barvec * (f / l);
                ftot[a] += fv;
                ftot[b] -= fv;
            }
        }
        for f in ftot.iter_mut().take(nfix) {
            *f = Point::zero();
        }

        let mut max_move = 0.0f64;
        for i in 0..n {
            let step = ftot[i] * opts.deltat;
            p[i] += step;
            let d = fd(p[i]);
            if d > 0.0 {
                let gx = (fd(Point::new(p[i].x + deps, p[i].z)) - d) / deps;
                let gz = (fd(Point::new(p[i].x, p[i].z + deps)) - d) / deps;
                p[i] -= Point::new(d * gx, d * gz);
            } else if d < -geps {
                max_move = max_move.max(step.norm());
            }
        }
        if max_move / h0 < opts.dptol {
            converged = true;
            break;
        }
    }

    let triangles: Vec<[usize; 3]> = delaunay(&p)?
        .into_iter()
        .filter(|t| centroid_inside(&p, t))
        .collect();

    // Drop points no triangle uses and renumber.
    let mut used = vec![usize::MAX; n];
    let mut points = Vec::new();
    for t in &triangles {
        for &i in t {
            if used[i] == usize::MAX {
                used[i] = points.len();
                points.push(p[i]);
            }
        }
    }
    let mut out = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let mut t = t.map(|i| used[i]);
        let area = signed_area(points[t[0]], points[t[1]], points[t[2]]);
        if area < 0.0 {
            t.swap(1, 2);
        }
        if !(area.abs() > 1e-12 * h0 * h0) {
            return Err(Error::MeshGeneration {
                iterations,
                reason: format!("degenerate triangle {t:?} with area {area:e}"),
            });
        }
        out.push(t);
    }
    if !converged {
        log::warn!("distmesh stopped after {iterations} iterations without reaching dptol");
    }
    Ok(Triangulation {
        points,
        triangles: out,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_is_covered() {
        let fd = |p: Point| p.norm() - 1.0;
        let tri = distmesh_2d(
            fd,
            |_| 1.0,
            0.2,
            (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            &[],
            7,
            &DistmeshOptions::default(),
        )
        .unwrap();
        let area: f64 = tri
            .triangles
            .iter()
            .map(|t| signed_area(tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]))
            .sum();
        assert!(tri.triangles.iter().all(|t| {
            signed_area(tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]) > 0.0
        }));
        // Inscribed polygon: slightly below pi.
        assert!(area > 3.0 && area < std::f64::consts::PI);
        assert!(tri.points.iter().all(|&p| fd(p) < 1e-6));
    }

    #[test]
    fn same_seed_same_mesh() {
        let run = |seed| {
            distmesh_2d(
                |p: Point| p.norm() - 1.0,
                |p: Point| 0.5 + p.norm(),
                0.25,
                (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
                &[],
                seed,
                &DistmeshOptions::default(),
            )
            .unwrap()
        };
        let (a, b) = (run(3), run(3));
        assert_eq!(a.points, b.points);
        assert_eq!(a.triangles, b.triangles);
    }

    #[test]
    fn rejects_nonpositive_size() {
        let r = distmesh_2d(
            |p: Point| p.norm() - 1.0,
            |_| 1.0,
            0.0,
            (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            &[],
            1,
            &DistmeshOptions::default(),
        );
        assert!(r.is_err());
    }
}
