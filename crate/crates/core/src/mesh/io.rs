//! JSON mesh files: `{"nodes": [[x, z], ...], "elements": [[i0, ..., i5], ...],
//! "groups": {"Gc1": [...], ...}}`.
//!
//! Coordinates are written in shortest round-trip form, so reading a written
//! mesh reproduces every coordinate bit for bit.

use std::fs;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(mesh)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text).map_err(|message| Error::MeshFormat {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_mesh(text: &str) -> std::result::Result<Mesh, String> {
    let mesh: Mesh = serde_json::from_str(text).map_err(|e| e.to_string())?;
    mesh.validate().map_err(|e| e.to_string())?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_groups_names_the_key() {
        let err = parse_mesh(r#"{"nodes": [[0,0],[1,0],[0,1]], "elements": []}"#).unwrap_err();
        assert!(err.contains("groups"), "{err}");
    }

    #[test]
    fn malformed_node_reports_position() {
        let err = parse_mesh("{\"nodes\": [[0,0],\n[1]], \"elements\": [], \"groups\": {}}").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn out_of_range_element_is_rejected() {
        let err = parse_mesh(
            r#"{"nodes": [[0,0],[1,0],[0,1]], "elements": [[0,1,2,3,4,5]], "groups": {}}"#,
        )
        .unwrap_err();
        assert!(err.contains("node 3"), "{err}");
    }
}
