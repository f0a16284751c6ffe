//! Six-node triangular meshes: data model, generators, quality and file I/O.
//!
//! Element connectivity stores the three corner nodes counterclockwise
//! followed by the midside nodes of edges `0-1`, `1-2` and `2-0`.

mod distmesh;
mod hole;
mod io;
mod params;
mod quality;
mod structured;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::signed_area;
use crate::Point;

pub use distmesh::{distmesh_2d, DistmeshOptions, Triangulation};
pub use hole::generate_unstructured_hole;
pub use io::{read_mesh, write_mesh};
pub use params::{GeometryCase, GeometryParams, HoleShape, BEAM_HEIGHT, HOLE_CENTER, PLATE_SIZE};
pub use quality::{element_quality, QualityReport};
pub use structured::generate_structured_beam;

/// Degrees of freedom per node: `x` and `z` displacement.
pub const DOFS_PER_NODE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<[usize; 6]>,
    pub groups: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        DOFS_PER_NODE * self.nodes.len()
    }

    pub fn group(&self, name: &str) -> Result<&[usize]> {
        match self.groups.get(name) {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(Error::EmptyGroup(name.to_string())),
        }
    }

    /// Corner coordinates of element `e`.
    pub fn corners(&self, e: usize) -> [Point; 3] {
        let el = &self.elements[e];
        [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]]
    }

    /// All six node coordinates of element `e`.
    pub fn element_nodes(&self, e: usize) -> [Point; 6] {
        self.elements[e].map(|i| self.nodes[i])
    }

    pub fn corner_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.corners(e);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.corner_area(e)).sum()
    }

    pub fn with_nodes(&self, nodes: Vec<Point>) -> Mesh {
        assert_eq!(nodes.len(), self.nodes.len());
        Mesh {
            nodes,
            elements: self.elements.clone(),
            groups: self.groups.clone(),
        }
    }

    /// Index of the node closest to `p` (lowest index on ties).
    pub fn nearest_node(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.nodes.iter().enumerate() {
            let d = (*q - p).dot(*q - p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Union of the given groups, sorted and deduplicated.
    pub fn group_union(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in names {
            out.extend_from_slice(self.group(name)?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Stable 64-bit fingerprint of coordinates and connectivity, printed
    /// as hex. Ties reduced bases to the discretization they were built on.
    pub fn id(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for p in &self.nodes {
            feed(&p.x.to_le_bytes());
            feed(&p.z.to_le_bytes());
        }
        for el in &self.elements {
            for i in el {
                feed(&(*i as u64).to_le_bytes());
            }
        }
        format!("{h:016x}")
    }

    /// Checks index bounds, counterclockwise corners and group indices.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(bad) = el.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidInput(format!(
                    "element {e} references node {bad}, mesh has {n} nodes"
                )));
            }
            let area = self.corner_area(e);
            if !(area > 0.0) {
                return Err(Error::SingularJacobian {
                    element: e,
                    det: 2.0 * area,
                });
            }
        }
        for (name, g) in &self.groups {
            if let Some(bad) = g.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidInput(format!(
                    "group {name} references node {bad}, mesh has {n} nodes"
                )));
            }
        }
        Ok(())
    }

    /// Largest distance between a midside node and the midpoint of its edge.
    pub fn max_midside_offset(&self) -> f64 {
        let mut worst = 0.0f64;
        for el in &self.elements {
            for k in 0..3 {
                let a = self.nodes[el[k]];
                let b = self.nodes[el[(k + 1) % 3]];
                let m = self.nodes[el[k + 3]];
                worst = worst.max(m.distance(a.midpoint(b)));
            }
        }
        worst
    }

    /// Edges of the corner triangulation that belong to exactly one element,
    /// as `(corner_a, corner_b, midside)`.
    pub fn boundary_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut count: HashMap<(usize, usize), (usize, usize, usize, usize)> = HashMap::new();
        for el in &self.elements {
            for k in 0..3 {
                let a = el[k];
                let b = el[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                count.entry(key).or_insert((a, b, el[k + 3], 0)).3 += 1;
            }
        }
        let mut out: Vec<_> = count
            .into_values()
            .filter(|v| v.3 == 1)
            .map(|(a, b, m, _)| (a, b, m))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Adds a node at the midpoint of every edge of a linear triangulation.
///
/// Midside nodes are numbered after the corner nodes in order of first
/// appearance while walking the elements, so the result is deterministic.
pub fn enrich_quadratic(mut nodes: Vec<Point>, triangles: &[[usize; 3]]) -> (Vec<Point>, Vec<[usize; 6]>) {
    let mut edge_node: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(triangles.len());
    for t in triangles {
        let mut mid = [0usize; 3];
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            mid[k] = *edge_node.entry(key).or_insert_with(|| {
                nodes.push(nodes[a].midpoint(nodes[b]));
                nodes.len() - 1
            });
        }
        elements.push([t[0], t[1], t[2], mid[0], mid[1], mid[2]]);
    }
    (nodes, elements)
}
