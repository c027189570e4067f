use std::collections::HashMap;

use crate::{Error, Result};

/// A spatial cell: an interval (1D) or a triangle (2D).
#[derive(Clone, Debug)]
pub struct Cell {
    pub vertices: Vec<usize>,
    pub sides: Vec<usize>,
    pub measure: f64,
    pub diameter: f64,
    pub centroid: [f64; 2],
}

/// A spatial side: a point (1D) or an edge (2D).
#[derive(Clone, Debug)]
pub struct Side {
    pub vertices: Vec<usize>,
    /// First entry is the owner; the normal points out of it.
    pub cells: (usize, Option<usize>),
    pub measure: f64,
    pub normal: [f64; 2],
    pub marker: Option<i32>,
}

impl Side {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// Conforming simplicial mesh of a 1D or 2D polytopal domain.
#[derive(Clone, Debug)]
pub struct SpatialMesh {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    cells: Vec<Cell>,
    sides: Vec<Side>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl SpatialMesh {
    /// Builds a mesh from vertex coordinates and cell connectivity.
    ///
    /// `boundary_markers` lists boundary sides (by vertex indices) with an
    /// integer marker. Boundary sides not listed get marker `None`; listing an
    /// interior or nonexistent side is an error.
    pub fn new(
        dim: usize,
        vertices: Vec<[f64; 2]>,
        cells: Vec<Vec<usize>>,
        boundary_markers: &[(Vec<usize>, i32)],
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Mesh(format!("unsupported spatial dimension {dim}")));
        }
        if cells.is_empty() {
            return Err(Error::Mesh("mesh has no cells".into()));
        }
        let nv = dim + 1;
        let mut out_cells = Vec::with_capacity(cells.len());
        for (c, verts) in cells.into_iter().enumerate() {
            if verts.len() != nv {
                return Err(Error::Mesh(format!("cell {c} has {} vertices, expected {nv}", verts.len())));
            }
            if let Some(&v) = verts.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("cell {c} references missing vertex {v}")));
            }
            let mut verts = verts;
            let measure = if dim == 1 {
                let (a, b) = (vertices[verts[0]][0], vertices[verts[1]][0]);
                if a > b {
                    verts.swap(0, 1);
                }
                (b - a).abs()
            } else {
                let [p, q, r] = [vertices[verts[0]], vertices[verts[1]], vertices[verts[2]]];
                let signed = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
                if signed < 0.0 {
                    verts.swap(1, 2);
                }
                signed.abs()
            };
            if !(measure > 0.0) {
                return Err(Error::Mesh(format!("cell {c} is degenerate")));
            }
            let mut diameter: f64 = 0.0;
            let mut centroid = [0.0; 2];
            for (i, &a) in verts.iter().enumerate() {
                for &b in &verts[i + 1..] {
                    diameter = diameter.max(dist(vertices[a], vertices[b]));
                }
                centroid[0] += vertices[a][0] / nv as f64;
                centroid[1] += vertices[a][1] / nv as f64;
            }
            out_cells.push(Cell { vertices: verts, sides: Vec::new(), measure, diameter, centroid });
        }

        let mut sides: Vec<Side> = Vec::new();
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
        for c in 0..out_cells.len() {
            let verts = out_cells[c].vertices.clone();
            let local_sides: Vec<(Vec<usize>, usize)> = if dim == 1 {
                // (side vertices, opposite vertex)
                vec![(vec![verts[0]], verts[1]), (vec![verts[1]], verts[0])]
            } else {
                vec![
                    (vec![verts[0], verts[1]], verts[2]),
                    (vec![verts[1], verts[2]], verts[0]),
                    (vec![verts[2], verts[0]], verts[1]),
                ]
            };
            for (sv, opposite) in local_sides {
                let mut key = sv.clone();
                key.sort_unstable();
                if let Some(&s) = lookup.get(&key) {
                    let side = &mut sides[s];
                    if side.cells.1.is_some() {
                        return Err(Error::Mesh(format!("side {key:?} is shared by more than two cells")));
                    }
                    side.cells.1 = Some(c);
                    out_cells[c].sides.push(s);
                } else {
                    let (measure, normal) = side_geometry(dim, &vertices, &sv, opposite);
                    let s = sides.len();
                    sides.push(Side { vertices: sv, cells: (c, None), measure, normal, marker: None });
                    lookup.insert(key, s);
                    out_cells[c].sides.push(s);
                }
            }
        }

        for (verts, marker) in boundary_markers {
            let mut key = verts.clone();
            key.sort_unstable();
            match lookup.get(&key) {
                Some(&s) if sides[s].is_boundary() => sides[s].marker = Some(*marker),
                Some(_) => return Err(Error::Mesh(format!("marked side {key:?} is not on the boundary"))),
                None => return Err(Error::Mesh(format!("marked side {key:?} does not exist"))),
            }
        }

        Ok(Self { dim, vertices, cells: out_cells, sides })
    }

    /// Uniform partition of `(a, b)` into `n` intervals.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(Error::Mesh(format!("invalid interval ({a}, {b}) with {n} cells")));
        }
        let nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        Self::from_nodes_1d(&nodes)
    }

    /// 1D mesh with the given strictly increasing nodes.
    pub fn from_nodes_1d(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh("1D nodes must be strictly increasing".into()));
        }
        let vertices = nodes.iter().map(|&x| [x, 0.0]).collect();
        let cells = (0..nodes.len() - 1).map(|i| vec![i, i + 1]).collect();
        let markers = [(vec![0], 1), (vec![nodes.len() - 1], 1)];
        Self::new(1, vertices, cells, &markers)
    }

    /// Structured triangulation of a rectangle: `nx × ny` squares, each split
    /// along the diagonal from its lower-left to its upper-right corner.
    pub fn rectangle(lower: [f64; 2], upper: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(upper[0] > lower[0]) || !(upper[1] > lower[1]) {
            return Err(Error::Mesh("degenerate rectangle".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    lower[0] + (upper[0] - lower[0]) * i as f64 / nx as f64,
                    lower[1] + (upper[1] - lower[1]) * j as f64 / ny as f64,
                ]);
            }
        }
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut markers = Vec::new();
        for i in 0..nx {
            markers.push((vec![id(i, 0), id(i + 1, 0)], 1));
            markers.push((vec![id(i, ny), id(i + 1, ny)], 1));
        }
        for j in 0..ny {
            markers.push((vec![id(0, j), id(0, j + 1)], 1));
            markers.push((vec![id(nx, j), id(nx, j + 1)], 1));
        }
        Self::new(2, vertices, cells, &markers)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn cell(&self, c: usize) -> &Cell {
        &self.cells[c]
    }

    pub fn side(&self, s: usize) -> &Side {
        &self.sides[s]
    }

    /// |Ω|
    pub fn measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// |∂Ω|
    pub fn boundary_measure(&self) -> f64 {
        self.sides.iter().filter(|s| s.is_boundary()).map(|s| s.measure).sum()
    }

    /// Outward normal of side `s` seen from cell `c`.
    pub fn outward_normal(&self, s: usize, c: usize) -> [f64; 2] {
        let side = &self.sides[s];
        if side.cells.0 == c {
            side.normal
        } else {
            [-side.normal[0], -side.normal[1]]
        }
    }
}

fn side_geometry(dim: usize, vertices: &[[f64; 2]], sv: &[usize], opposite: usize) -> (f64, [f64; 2]) {
    if dim == 1 {
        let x = vertices[sv[0]][0];
        let o = vertices[opposite][0];
        (1.0, [if x > o { 1.0 } else { -1.0 }, 0.0])
    } else {
        let (a, b) = (vertices[sv[0]], vertices[sv[1]]);
        let len = dist(a, b);
        let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let o = vertices[opposite];
        if n[0] * (o[0] - a[0]) + n[1] * (o[1] - a[1]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        (len, n)
    }
}
