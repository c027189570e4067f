//! Prismatic space-time meshes `K = K_x × K_t`.
//!
//! A mesh is a spatial simplicial mesh where every spatial cell carries its
//! own time partition. When all cells share one partition the mesh splits
//! into time slabs; otherwise neighbouring cells meet along hanging
//! time-like facets obtained by intersecting their time intervals.

mod import;
mod spatial;
mod time;

use std::ops::Range;

pub use import::{parse_spatial_mesh, read_spatial_mesh};
pub use spatial::{Cell, Side, SpatialMesh};
pub use time::{geometric_time_partition, symmetric_graded_nodes, TimePartition};

use crate::{Error, Point, Result};

/// Axis-aligned box `Π (lower_i, upper_i)` in 1 or 2 dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn spatial_mesh(&self, n: usize) -> Result<SpatialMesh> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Mesh("box bounds have different dimensions".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| !(b > a)) {
            return Err(Error::Mesh(format!("degenerate box {:?} × {:?}", self.lower, self.upper)));
        }
        match self.dim() {
            1 => SpatialMesh::interval(self.lower[0], self.upper[0], n),
            2 => SpatialMesh::rectangle([self.lower[0], self.lower[1]], [self.upper[0], self.upper[1]], n, n),
            d => Err(Error::Mesh(format!("unsupported box dimension {d}"))),
        }
    }
}

/// Polynomial degree assignment per time slab.
#[derive(Clone, Debug, PartialEq)]
pub enum DegreeRule {
    Uniform(usize),
    /// One degree per slab, in slab order.
    PerSlab(Vec<usize>),
}

impl DegreeRule {
    pub fn degree(&self, slab: usize) -> Result<usize> {
        let p = match self {
            DegreeRule::Uniform(p) => *p,
            DegreeRule::PerSlab(ps) => {
                *ps.get(slab).ok_or_else(|| Error::InvalidParameter(format!("no degree given for slab {slab}")))?
            }
        };
        if p == 0 {
            return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug)]
pub struct Element {
    pub cell: usize,
    /// Index of the time interval within the cell's partition.
    pub slab: usize,
    pub time: (f64, f64),
    pub degree: usize,
    pub hx: f64,
    pub ht: f64,
    /// Diameter of the prism, `sqrt(h_x² + h_t²)`.
    pub h: f64,
    pub centroid: [f64; 2],
    pub t_center: f64,
    pub h_hat_t: f64,
    pub p_hat: usize,
    pub lambda: f64,
}

impl Element {
    pub fn center(&self) -> Point {
        Point::new(self.centroid, self.t_center)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FacetKind {
    /// Space-like facet on `Ω × {0}`.
    Initial,
    /// Space-like facet on `Ω × {T}`.
    Final,
    /// Space-like facet between two elements.
    SpaceInterior,
    /// Time-like facet between two elements.
    TimeInterior,
    /// Time-like facet on `∂Ω × (0, T)`.
    Dirichlet,
}

impl FacetKind {
    pub fn is_space_like(self) -> bool {
        matches!(self, FacetKind::Initial | FacetKind::Final | FacetKind::SpaceInterior)
    }

    pub fn is_time_like(self) -> bool {
        !self.is_space_like()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FacetGeometry {
    SpaceLike { cell: usize, time: f64 },
    TimeLike { side: usize, interval: (f64, f64) },
}

/// A mesh facet with its reference normal.
///
/// Space-like facets use `n = (0, 1)`: the owner is the element before the
/// facet (or the single element for initial facets) and the neighbour the
/// element after it. Time-like facets have `n_t = 0` and `n_x` pointing out
/// of the owner, which is the adjacent element with the lower index.
#[derive(Clone, Debug)]
pub struct Facet {
    pub kind: FacetKind,
    pub geometry: FacetGeometry,
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub normal_x: [f64; 2],
    pub normal_t: f64,
    pub measure: f64,
}

impl Facet {
    /// Element before a space-like facet, if any.
    pub fn before(&self) -> Option<usize> {
        match self.kind {
            FacetKind::Initial => None,
            FacetKind::Final | FacetKind::SpaceInterior => Some(self.owner),
            _ => None,
        }
    }

    /// Element after a space-like facet, if any.
    pub fn after(&self) -> Option<usize> {
        match self.kind {
            FacetKind::Initial => Some(self.owner),
            FacetKind::SpaceInterior => self.neighbor,
            _ => None,
        }
    }

    /// Elements adjacent to the facet.
    pub fn elements(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.owner).chain(self.neighbor)
    }
}

/// Disjoint facet groups `F⁰, Fᵀ, F^space, F^D, F^time`.
#[derive(Clone, Debug, Default)]
pub struct FacetGroups {
    pub initial: Vec<usize>,
    pub final_: Vec<usize>,
    pub space: Vec<usize>,
    pub dirichlet: Vec<usize>,
    pub time: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SpaceTimeMesh {
    spatial: SpatialMesh,
    partitions: Vec<TimePartition>,
    elements: Vec<Element>,
    cell_elements: Vec<Vec<usize>>,
    facets: Vec<Facet>,
    element_facets: Vec<Vec<usize>>,
    groups: FacetGroups,
    final_time: f64,
}

impl SpaceTimeMesh {
    /// Extrudes `spatial` over a single time partition shared by all cells.
    pub fn extrude(spatial: SpatialMesh, partition: &TimePartition, degrees: &DegreeRule) -> Result<Self> {
        let slab_degrees: Vec<usize> = (0..partition.len()).map(|n| degrees.degree(n)).collect::<Result<_>>()?;
        let partitions = vec![partition.clone(); spatial.cells().len()];
        Self::from_cell_partitions(spatial, partitions, |_, slab, _| slab_degrees[slab])
    }

    /// General constructor: one time partition per spatial cell and a degree
    /// for every `(cell, interval index, interval)`.
    pub fn from_cell_partitions(
        spatial: SpatialMesh,
        partitions: Vec<TimePartition>,
        degree: impl Fn(usize, usize, (f64, f64)) -> usize,
    ) -> Result<Self> {
        let ncells = spatial.cells().len();
        if partitions.len() != ncells {
            return Err(Error::Mesh(format!("{} time partitions given for {ncells} cells", partitions.len())));
        }
        let final_time = partitions[0].final_time();
        let tol = 1e-12 * final_time;
        if partitions.iter().any(|p| (p.final_time() - final_time).abs() > tol) {
            return Err(Error::Mesh("cell time partitions end at different final times".into()));
        }

        // causal ordering: by start time, then by cell
        let mut keys: Vec<(f64, usize, usize)> = Vec::new();
        for (c, part) in partitions.iter().enumerate() {
            for (n, (t0, _)) in part.intervals().enumerate() {
                keys.push((t0, c, n));
            }
        }
        keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut cell_elements: Vec<Vec<usize>> = partitions.iter().map(|p| vec![usize::MAX; p.len()]).collect();
        let mut elements = Vec::with_capacity(keys.len());
        for (id, &(_, c, n)) in keys.iter().enumerate() {
            let cell = spatial.cell(c);
            let time = partitions[c].interval(n);
            let p = degree(c, n, time);
            if p == 0 {
                return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
            }
            let ht = time.1 - time.0;
            cell_elements[c][n] = id;
            elements.push(Element {
                cell: c,
                slab: n,
                time,
                degree: p,
                hx: cell.diameter,
                ht,
                h: (cell.diameter.powi(2) + ht * ht).sqrt(),
                centroid: cell.centroid,
                t_center: 0.5 * (time.0 + time.1),
                h_hat_t: ht,
                p_hat: p,
                lambda: 0.0,
            });
        }

        let mut mesh = Self {
            spatial,
            partitions,
            elements,
            cell_elements,
            facets: Vec::new(),
            element_facets: Vec::new(),
            groups: FacetGroups::default(),
            final_time,
        };
        mesh.classify_facets()?;
        mesh.compute_lambda();
        Ok(mesh)
    }

    /// Enumerates all facets and assigns each to exactly one group.
    fn classify_facets(&mut self) -> Result<()> {
        let mut facets = Vec::new();
        let tol = 1e-12 * self.final_time;

        for (c, elems) in self.cell_elements.iter().enumerate() {
            let measure = self.spatial.cell(c).measure;
            let space_like = |kind, owner, neighbor, time| Facet {
                kind,
                geometry: FacetGeometry::SpaceLike { cell: c, time },
                owner,
                neighbor,
                normal_x: [0.0; 2],
                normal_t: 1.0,
                measure,
            };
            facets.push(space_like(FacetKind::Initial, elems[0], None, 0.0));
            for w in elems.windows(2) {
                let t = self.elements[w[0]].time.1;
                facets.push(space_like(FacetKind::SpaceInterior, w[0], Some(w[1]), t));
            }
            let last = *elems.last().unwrap();
            facets.push(space_like(FacetKind::Final, last, None, self.final_time));
        }

        for (s, side) in self.spatial.sides().iter().enumerate() {
            let (c1, c2) = side.cells;
            match c2 {
                None => {
                    for &e in &self.cell_elements[c1] {
                        let el = &self.elements[e];
                        facets.push(Facet {
                            kind: FacetKind::Dirichlet,
                            geometry: FacetGeometry::TimeLike { side: s, interval: el.time },
                            owner: e,
                            neighbor: None,
                            normal_x: side.normal,
                            normal_t: 0.0,
                            measure: side.measure * el.ht,
                        });
                    }
                }
                Some(c2) => {
                    let mut nodes: Vec<f64> =
                        self.partitions[c1].nodes().iter().chain(self.partitions[c2].nodes()).copied().collect();
                    nodes.sort_by(f64::total_cmp);
                    nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);
                    for w in nodes.windows(2) {
                        let mid = 0.5 * (w[0] + w[1]);
                        let e1 = self.element_at(c1, mid)?;
                        let e2 = self.element_at(c2, mid)?;
                        let (owner, neighbor, normal) = if e1 < e2 {
                            (e1, e2, self.spatial.outward_normal(s, c1))
                        } else {
                            (e2, e1, self.spatial.outward_normal(s, c2))
                        };
                        facets.push(Facet {
                            kind: FacetKind::TimeInterior,
                            geometry: FacetGeometry::TimeLike { side: s, interval: (w[0], w[1]) },
                            owner,
                            neighbor: Some(neighbor),
                            normal_x: normal,
                            normal_t: 0.0,
                            measure: side.measure * (w[1] - w[0]),
                        });
                    }
                }
            }
        }

        let mut groups = FacetGroups::default();
        let mut element_facets = vec![Vec::new(); self.elements.len()];
        for (f, facet) in facets.iter().enumerate() {
            match facet.kind {
                FacetKind::Initial => groups.initial.push(f),
                FacetKind::Final => groups.final_.push(f),
                FacetKind::SpaceInterior => groups.space.push(f),
                FacetKind::Dirichlet => groups.dirichlet.push(f),
                FacetKind::TimeInterior => groups.time.push(f),
            }
            for e in facet.elements() {
                element_facets[e].push(f);
            }
        }
        self.facets = facets;
        self.element_facets = element_facets;
        self.groups = groups;
        Ok(())
    }

    fn element_at(&self, cell: usize, t: f64) -> Result<usize> {
        let nodes = self.partitions[cell].nodes();
        let n = nodes.partition_point(|&x| x <= t);
        if n == 0 || n >= nodes.len() {
            return Err(Error::Mesh(format!("time {t} outside the partition of cell {cell}")));
        }
        Ok(self.cell_elements[cell][n - 1])
    }

    /// `λ_K = ĥ_Kt / p̂_K²` over `K` and every element sharing a time-like facet with it.
    fn compute_lambda(&mut self) {
        for k in 0..self.elements.len() {
            let mut h_hat = self.elements[k].ht;
            let mut p_hat = self.elements[k].degree;
            for &f in &self.element_facets[k] {
                let facet = &self.facets[f];
                if facet.kind == FacetKind::TimeInterior {
                    for e in facet.elements() {
                        h_hat = h_hat.min(self.elements[e].ht);
                        p_hat = p_hat.max(self.elements[e].degree);
                    }
                }
            }
            let el = &mut self.elements[k];
            el.h_hat_t = h_hat;
            el.p_hat = p_hat;
            el.lambda = h_hat / (p_hat * p_hat) as f64;
        }
    }

    pub fn dim(&self) -> usize {
        self.spatial.dim()
    }

    pub fn spatial(&self) -> &SpatialMesh {
        &self.spatial
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &Element {
        &self.elements[k]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    pub fn element_facets(&self, k: usize) -> &[usize] {
        &self.element_facets[k]
    }

    pub fn groups(&self) -> &FacetGroups {
        &self.groups
    }

    pub fn cell_partition(&self, c: usize) -> &TimePartition {
        &self.partitions[c]
    }

    pub fn max_degree(&self) -> usize {
        self.elements.iter().map(|e| e.degree).max().unwrap_or(0)
    }

    /// Largest spatial element diameter.
    pub fn max_hx(&self) -> f64 {
        self.elements.iter().map(|e| e.hx).fold(0.0, f64::max)
    }

    /// Elements adjacent to `k` through interior time-like facets.
    pub fn time_neighbors(&self, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.element_facets[k]
            .iter()
            .map(|&f| &self.facets[f])
            .filter(|f| f.kind == FacetKind::TimeInterior)
            .flat_map(|f| f.elements())
            .filter(|&e| e != k)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Element groups per time slab, in time order. Each group is a
    /// contiguous range of element indices.
    ///
    /// Fails when the cells do not share one time partition, i.e. when
    /// hanging time-like facets cross slab boundaries.
    pub fn time_slabs(&self) -> Result<Vec<Range<usize>>> {
        let first = &self.partitions[0];
        let tol = 1e-12 * self.final_time;
        for (c, p) in self.partitions.iter().enumerate() {
            let same = p.len() == first.len() && p.nodes().iter().zip(first.nodes()).all(|(a, b)| (a - b).abs() <= tol);
            if !same {
                return Err(Error::NotSlabDecomposable(format!("cell {c} has a time partition different from cell 0")));
            }
        }
        let ncells = self.spatial.cells().len();
        Ok((0..first.len()).map(|n| n * ncells..(n + 1) * ncells).collect())
    }
}

/// Tensor mesh of a box: Cartesian intervals (1D) or triangulated squares
/// (2D) with `nx` cells per axis, extruded over `partition`.
pub fn build_tensor_mesh(
    domain: &BoxDomain,
    nx: usize,
    partition: &TimePartition,
    degrees: &DegreeRule,
) -> Result<SpaceTimeMesh> {
    if nx == 0 {
        return Err(Error::Mesh("at least one cell per axis is required".into()));
    }
    SpaceTimeMesh::extrude(domain.spatial_mesh(nx)?, partition, degrees)
}
