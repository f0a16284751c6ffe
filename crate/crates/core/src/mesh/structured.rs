use std::collections::BTreeMap;

use super::params::{GeometryCase, GeometryParams, BEAM_HEIGHT};
use super::Mesh;
use crate::error::{Error, Result};
use crate::Point;

/// Regular right-triangle mesh of the `l x 0.1` beam plate.
///
/// The rectangle is split into `ceil(l/h) x ceil(0.1/h)` cells, each cut
/// along its rising diagonal. Nodes lie on the grid of half the cell size
/// and are numbered row by row from the bottom-left corner; midside
/// coordinates are computed as the average of their two corners so they are
/// exact edge midpoints.
///
/// Groups: `Gc1` left edge, `Gc2` bottom, `Gc3` top, `Gc4` right edge.
pub fn generate_structured_beam(params: &GeometryParams, h: f64) -> Result<Mesh> {
    if params.case != GeometryCase::BeamPlate {
        return Err(Error::InvalidInput(format!(
            "structured generator expects a beam plate, got {:?}",
            params.case
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("element size must be positive, got {h}")));
    }
    let l = params.p[0];
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!("degenerate beam length {l}")));
    }

    // The small offset keeps l/h = 50 from rounding up to 51.
    let nx = ((l / h) - 1e-9).ceil().max(1.0) as usize;
    let nz = ((BEAM_HEIGHT / h) - 1e-9).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=nx).map(|i| l * i as f64 / nx as f64).collect();
    let zs: Vec<f64> = (0..=nz).map(|j| BEAM_HEIGHT * j as f64 / nz as f64).collect();
    let fine = |coarse: &[f64], k: usize| {
        if k % 2 == 0 {
            coarse[k / 2]
        } else {
            0.5 * (coarse[k / 2] + coarse[k / 2 + 1])
        }
    };

    let cols = 2 * nx + 1;
    let rows = 2 * nz + 1;
    let mut nodes = Vec::with_capacity(cols * rows);
    for jj in 0..rows {
        for ii in 0..cols {
            nodes.push(Point::new(fine(&xs, ii), fine(&zs, jj)));
        }
    }
    let id = |ii: usize, jj: usize| jj * cols + ii;

    let mut elements = Vec::with_capacity(2 * nx * nz);
    for j in 0..nz {
        for i in 0..nx {
            let (i0, j0) = (2 * i, 2 * j);
            let a = id(i0, j0);
            let b = id(i0 + 2, j0);
            let c = id(i0 + 2, j0 + 2);
            let d = id(i0, j0 + 2);
            let center = id(i0 + 1, j0 + 1);
            elements.push([a, b, c, id(i0 + 1, j0), id(i0 + 2, j0 + 1), center]);
            elements.push([a, c, d, center, id(i0 + 1, j0 + 2), id(i0, j0 + 1)]);
        }
    }

    let mut groups = BTreeMap::new();
    groups.insert("Gc1".to_string(), (0..rows).map(|jj| id(0, jj)).collect());
    groups.insert("Gc2".to_string(), (0..cols).map(|ii| id(ii, 0)).collect());
    groups.insert("Gc3".to_string(), (0..cols).map(|ii| id(ii, rows - 1)).collect());
    groups.insert("Gc4".to_string(), (0..rows).map(|jj| id(cols - 1, jj)).collect());

    let mesh = Mesh {
        nodes,
        elements,
        groups,
    };
    mesh.validate()?;
    Ok(mesh)
}
