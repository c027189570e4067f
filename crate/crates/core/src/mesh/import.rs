//! Plain-text spatial mesh format.
//!
//! ```text
//! # comments and blank lines are ignored
//! dim n_vertices n_cells
//! x [y]                 (n_vertices lines)
//! v0 v1 [v2]            (n_cells lines, 0-based vertex indices)
//! v0 [v1] marker        (any number of boundary-side lines)
//! ```
//!
//! Boundary sides without a marker line get no marker. Meshes with hanging
//! vertices (a vertex in the interior of a boundary side of the cell
//! connectivity) are rejected.

use std::path::Path;

use super::SpatialMesh;
use crate::{Error, Result};

pub fn read_spatial_mesh(path: impl AsRef<Path>) -> Result<SpatialMesh> {
    parse_spatial_mesh(&std::fs::read_to_string(path)?)
}

pub fn parse_spatial_mesh(text: &str) -> Result<SpatialMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(Error::Parse { line: 0, message: "empty mesh file".into() })?;
    let header: Vec<usize> = parse_fields(line, header)?;
    let [dim, nv, nc] = header[..] else {
        return Err(Error::Parse { line, message: "header must be `dim n_vertices n_cells`".into() });
    };
    if dim != 1 && dim != 2 {
        return Err(Error::Parse { line, message: format!("unsupported dimension {dim}") });
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or(Error::Parse { line, message: "missing vertex lines".into() })?;
        let xs: Vec<f64> = parse_fields(line, l)?;
        if xs.len() != dim {
            return Err(Error::Parse { line, message: format!("expected {dim} coordinates") });
        }
        vertices.push([xs[0], if dim == 2 { xs[1] } else { 0.0 }]);
    }

    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (line, l) = lines.next().ok_or(Error::Parse { line, message: "missing cell lines".into() })?;
        let vs: Vec<usize> = parse_fields(line, l)?;
        if vs.len() != dim + 1 {
            return Err(Error::Parse { line, message: format!("expected {} vertex indices", dim + 1) });
        }
        cells.push(vs);
    }

    let mut markers = Vec::new();
    for (line, l) in lines {
        let fs: Vec<i64> = parse_fields(line, l)?;
        if fs.len() != dim + 1 || fs[..dim].iter().any(|&v| v < 0) {
            return Err(Error::Parse { line, message: "boundary line must be `v0 [v1] marker`".into() });
        }
        let marker =
            i32::try_from(fs[dim]).map_err(|_| Error::Parse { line, message: "marker out of range".into() })?;
        markers.push((fs[..dim].iter().map(|&v| v as usize).collect(), marker));
    }

    let mesh = SpatialMesh::new(dim, vertices, cells, &markers)?;
    reject_hanging_vertices(&mesh)?;
    Ok(mesh)
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|f| f.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse `{f}`") }))
        .collect()
}

fn reject_hanging_vertices(mesh: &SpatialMesh) -> Result<()> {
    if mesh.dim() == 1 {
        return Ok(());
    }
    let verts = mesh.vertices();
    for side in mesh.sides().iter().filter(|s| s.is_boundary()) {
        let (a, b) = (verts[side.vertices[0]], verts[side.vertices[1]]);
        let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
        for (v, p) in verts.iter().enumerate() {
            if side.vertices.contains(&v) {
                continue;
            }
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            let s = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
            if cross.abs() <= 1e-12 * len2 && s > 1e-12 && s < 1.0 - 1e-12 {
                return Err(Error::Mesh(format!(
                    "vertex {v} hangs on side {:?}; spatially nonconforming meshes are not supported",
                    side.vertices
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_triangles() {
        let text = "# unit square\n2 4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 5\n1 2 5\n2 3 7\n3 0 7\n";
        let m = parse_spatial_mesh(text).unwrap();
        assert_eq!(m.cells().len(), 2);
        assert!((m.measure() - 1.0).abs() < 1e-14);
        let markers: Vec<_> = m.sides().iter().filter_map(|s| s.marker).collect();
        assert_eq!(markers.len(), 4);
    }

    #[test]
    fn parses_interval() {
        let m = parse_spatial_mesh("1 3 2\n0\n0.3\n1\n0 1\n1 2\n0 1\n2 1\n").unwrap();
        assert_eq!(m.cells().len(), 2);
        assert!((m.cell(0).measure - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_and_hanging() {
        assert!(matches!(parse_spatial_mesh("2 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_spatial_mesh("1 2 1\n0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_spatial_mesh("1 2 1\n0\nx\n0 1\n"), Err(Error::Parse { line: 3, .. })));
        // big triangle next to two small ones sharing its edge midpoint
        let text = "2 5 3\n0 0\n2 0\n1 1\n1 0\n1 -1\n0 1 2\n0 4 3\n3 4 1\n";
        assert!(matches!(parse_spatial_mesh(text), Err(Error::Mesh(_))));
    }
}
