//! Adaptive sampling of the parameter space driven by subspace angles
//! between the bases of neighbouring samples, and clustering of the
//! samples into regions of consistent bases.
//!
//! Distances are measured on parameters normalized to `[0, 1]` per
//! dimension. A neighbour pair is
//! - consistent if its largest angle is at most `theta_lower`, unless the
//!   pair is farther apart than `d_upper`, in which case it is bisected;
//! - a cluster boundary if its largest angle reaches `theta_upper` and the
//!   pair is no farther apart than `d_lower`;
//! - bisected while it is farther apart than `d_lower`;
//! - otherwise (minimum spacing reached below `theta_upper`) inconsistent.
//!
//! Clusters are the connected components over consistent edges. Clusters
//! smaller than the minimum size are merged into the neighbouring cluster
//! across the edge with the smallest angle.
//!
//! Neighbours are adjacent samples in 1D and Delaunay neighbours in 2D.

use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation as _};

use super::angles::{subspace_angles, AnglePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Degrees.
    pub theta_lower: f64,
    /// Degrees.
    pub theta_upper: f64,
    pub d_lower: f64,
    pub d_upper: f64,
    /// Neighbourhood expansion; only 0 (disabled) is supported.
    pub d_neighbourhood: f64,
    pub min_cluster_size: usize,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.theta_lower && self.theta_lower <= self.theta_upper && self.theta_upper <= 90.0) {
            return Err(Error::InvalidInput(format!(
                "angle thresholds must satisfy 0 <= {} <= {} <= 90",
                self.theta_lower, self.theta_upper
            )));
        }
        if !(self.d_lower > 0.0 && self.d_lower <= self.d_upper) {
            return Err(Error::InvalidInput(format!(
                "distance thresholds must satisfy 0 < {} <= {}",
                self.d_lower, self.d_upper
            )));
        }
        if self.d_neighbourhood != 0.0 {
            return Err(Error::InvalidInput("neighbourhood expansion d_N must be 0".into()));
        }
        if self.min_cluster_size == 0 {
            return Err(Error::InvalidInput("minimum cluster size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Supplies orthonormal bases on a common set of DOFs.
pub trait BasisSource {
    /// Orthonormal basis at the physical parameter point `p`.
    fn basis(&mut self, p: &[f64]) -> Result<Mat<f64>>;
}

impl<F: FnMut(&[f64]) -> Result<Mat<f64>>> BasisSource for F {
    fn basis(&mut self, p: &[f64]) -> Result<Mat<f64>> {
        self(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Consistent,
    /// Angle above `theta_lower` at the minimum spacing, below `theta_upper`.
    Inconsistent,
    Boundary,
    Bisect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourEdge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub max_angle: f64,
    pub state: EdgeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Sample ids per cluster, ascending.
    pub clusters: Vec<Vec<usize>>,
    /// Final neighbour graph.
    pub edges: Vec<NeighbourEdge>,
    pub hyper: Hyperparameters,
}

impl ClusterSet {
    pub fn cluster_of(&self, sample: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&sample))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingResult {
    /// Physical parameter points in the order they were sampled.
    pub points: Vec<Vec<f64>>,
    pub clusters: ClusterSet,
    /// All pairwise angle evaluations performed.
    pub angles: Vec<AnglePair>,
    /// False when the sample budget stopped refinement.
    pub converged: bool,
    #[serde(skip)]
    pub bases: Vec<Mat<f64>>,
}

fn classify(max_angle: f64, distance: f64, h: &Hyperparameters) -> EdgeState {
    if max_angle <= h.theta_lower {
        if distance > h.d_upper {
            EdgeState::Bisect
        } else {
            EdgeState::Consistent
        }
    } else if distance > h.d_lower {
        EdgeState::Bisect
    } else if max_angle >= h.theta_upper {
        EdgeState::Boundary
    } else {
        EdgeState::Inconsistent
    }
}

pub(crate) fn normalize(p: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    p.iter().zip(bounds).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect()
}

pub(crate) fn denormalize(t: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    t.iter().zip(bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

struct Site {
    pos: Point2<f64>,
    idx: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Neighbour pairs `(a, b)` with `a < b`.
pub fn neighbour_pairs(points: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let dim = points.first().map_or(0, |p| p.len());
    let mut pairs = BTreeSet::new();
    match dim {
        0 => {}
        1 => {
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|a, b| points[*a][0].total_cmp(&points[*b][0]));
            for w in order.windows(2) {
                pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        2 => {
            if points.len() == 2 {
                pairs.insert((0, 1));
            } else if points.len() > 2 {
                let sites: Vec<Site> = points
                    .iter()
                    .enumerate()
                    .map(|(idx, p)| Site {
                        pos: Point2::new(p[0], p[1]),
                        idx,
                    })
                    .collect();
                let dt = DelaunayTriangulation::<Site>::bulk_load(sites)
                    .map_err(|e| Error::InvalidInput(format!("Delaunay triangulation of samples: {e:?}")))?;
                for edge in dt.undirected_edges() {
                    let [a, b] = edge.vertices().map(|v| v.data().idx);
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
        _ => return Err(Error::InvalidInput(format!("{dim}-dimensional parameter spaces are not supported"))),
    }
    Ok(pairs.into_iter().collect())
}

/// Initial samples: interval end points in 1D, box corners in 2D.
pub fn initial_points(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    match bounds.len() {
        1 => vec![vec![bounds[0].0], vec![bounds[0].1]],
        _ => {
            let mut out = vec![Vec::new()];
            for &(lo, hi) in bounds {
                out = out
                    .into_iter()
                    .flat_map(|p: Vec<f64>| {
                        let mut a = p.clone();
                        a.push(lo);
                        let mut b = p;
                        b.push(hi);
                        [a, b]
                    })
                    .collect();
            }
            out
        }
    }
}

/// Refines the sample set until every neighbour pair is consistent or a
/// cluster boundary, or until `budget` samples exist.
pub fn adaptive_sample(
    source: &mut dyn BasisSource,
    bounds: &[(f64, f64)],
    initial: &[Vec<f64>],
    hyper: &Hyperparameters,
    budget: usize,
) -> Result<SamplingResult> {
    hyper.validate()?;
    if initial.len() < 2 {
        return Err(Error::InvalidInput("adaptive sampling needs at least two initial points".into()));
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut norm: Vec<Vec<f64>> = Vec::new();
    let mut bases: Vec<Mat<f64>> = Vec::new();
    let mut cache: BTreeMap<(usize, usize), AnglePair> = BTreeMap::new();
    let mut converged = true;

    let mut add = |p: &[f64], points: &mut Vec<Vec<f64>>, norm: &mut Vec<Vec<f64>>, bases: &mut Vec<Mat<f64>>| -> Result<()> {
        let v = source.basis(p).map_err(|e| e.in_sample(points.len()))?;
        log::info!("sample {} at {:?}", points.len(), p);
        points.push(p.to_vec());
        norm.push(normalize(p, bounds));
        bases.push(v);
        Ok(())
    };
    for p in initial.iter().take(budget.max(2)) {
        add(p, &mut points, &mut norm, &mut bases)?;
    }
    if initial.len() > budget {
        converged = false;
    }

    let edges = loop {
        let pairs = neighbour_pairs(&norm)?;
        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let pair = match cache.get(&(a, b)) {
                Some(p) => p.clone(),
                None => {
                    let p = subspace_angles(a, bases[a].as_ref(), b, bases[b].as_ref())?;
                    cache.insert((a, b), p.clone());
                    p
                }
            };
            let d = distance(&norm[a], &norm[b]);
            edges.push(NeighbourEdge {
                a,
                b,
                distance: d,
                max_angle: pair.max(),
                state: classify(pair.max(), d, hyper),
            });
        }
        let mut new: Vec<Vec<f64>> = Vec::new();
        for e in edges.iter().filter(|e| e.state == EdgeState::Bisect) {
            let mid: Vec<f64> = norm[e.a].iter().zip(&norm[e.b]).map(|(x, y)| 0.5 * (x + y)).collect();
            if !new.iter().chain(norm.iter()).any(|q| distance(q, &mid) < 1e-12) {
                new.push(mid);
            }
        }
        if new.is_empty() {
            break edges;
        }
        if points.len() + new.len() > budget {
            converged = false;
            log::warn!("sample budget {budget} exhausted with {} refinements pending", new.len());
            break edges;
        }
        for t in new {
            add(&denormalize(&t, bounds), &mut points, &mut norm, &mut bases)?;
        }
    };

    let clusters = build_clusters(points.len(), &edges, hyper.min_cluster_size);
    Ok(SamplingResult {
        points,
        clusters: ClusterSet {
            clusters,
            edges,
            hyper: *hyper,
        },
        angles: cache.into_values().collect(),
        converged,
        bases,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components over consistent edges, then small clusters merged
/// into the neighbour cluster across the edge with the smallest angle.
pub fn build_clusters(n: usize, edges: &[NeighbourEdge], min_size: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    for e in edges.iter().filter(|e| e.state == EdgeState::Consistent) {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    loop {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        if groups.len() <= 1 {
            return groups.into_values().collect();
        }
        let Some((&root, _)) = groups
            .iter()
            .filter(|(_, g)| g.len() < min_size)
            .min_by_key(|(r, g)| (g.len(), **r))
        else {
            return groups.into_values().collect();
        };
        let mut best: Option<(f64, usize)> = None;
        for e in edges {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            let other = if ra == root && rb != root {
                rb
            } else if rb == root && ra != root {
                ra
            } else {
                continue;
            };
            if best.map_or(true, |(angle, r)| e.max_angle < angle || (e.max_angle == angle && other < r)) {
                best = Some((e.max_angle, other));
            }
        }
        let Some((_, other)) = best else {
            // Isolated cluster without neighbours: nothing to merge into.
            return groups.into_values().collect();
        };
        parent[root.max(other)] = root.min(other);
    }
}
