use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::geometry::{triangle_quality, TriangleQuality};

/// Per-element corner-triangle measures.
pub fn element_quality(mesh: &Mesh) -> Vec<TriangleQuality<f64>> {
    (0..mesh.elements.len())
        .map(|e| {
            let [a, b, c] = mesh.corners(e);
            triangle_quality(a, b, c)
        })
        .collect()
}

/// Summary of [`element_quality`] over a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub min_area: f64,
    pub max_ratio: f64,
    pub inverted: usize,
    pub degenerate: usize,
    /// Element with the smallest signed area.
    pub worst_element: usize,
}

impl QualityReport {
    pub fn of(mesh: &Mesh) -> Self {
        let q = element_quality(mesh);
        let mut report = QualityReport {
            min_area: f64::INFINITY,
            max_ratio: 0.0,
            inverted: 0,
            degenerate: 0,
            worst_element: 0,
        };
        for (e, t) in q.iter().enumerate() {
            if t.signed_area < report.min_area {
                report.min_area = t.signed_area;
                report.worst_element = e;
            }
            if t.signed_area <= 0.0 {
                report.inverted += 1;
            }
            if t.degenerate {
                report.degenerate += 1;
            } else {
                report.max_ratio = report.max_ratio.max(t.ratio);
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_beam, GeometryParams};

    #[test]
    fn structured_beam_is_right_isoceles() {
        let m = generate_structured_beam(&GeometryParams::beam(1.0).unwrap(), 0.1).unwrap();
        let r = QualityReport::of(&m);
        assert_eq!(r.inverted, 0);
        // Right isoceles: R/r = 1 + sqrt(2).
        assert!((r.max_ratio - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((r.min_area - 0.005).abs() < 1e-15);
    }
}
