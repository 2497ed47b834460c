//! Conformal simplicial meshes (intervals and triangles) with P1/P2 Lagrange DOFs.

mod io;
pub mod reference;

use std::collections::HashMap;

use thiserror::Error;

pub use reference::{ReferenceElement, MAX_DOFS};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("element {element} is degenerate (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },
    #[error("face shared by {count} elements (first element {element})")]
    NonConformal { element: usize, count: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Side of the bounding box a boundary face lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
    Interior,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
            Side::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub element: usize,
    pub local_face: usize,
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub measure: f64,
    pub side: Side,
}

/// The element on the other side of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceLink {
    pub element: usize,
    pub face: usize,
    /// The neighbour runs the face parameter in the opposite direction.
    pub flipped: bool,
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub coords: [[f64; 2]; 3],
    pub measure: f64,
    pub diameter: f64,
    pub grad_bary: [[f64; 2]; 3],
    /// Scaled inward normals: `d |K| ∇λ_j`, face `j` opposite vertex `j`.
    pub scaled_normals: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn face_measure(&self, dim: usize, j: usize) -> f64 {
        if dim == 1 {
            1.0
        } else {
            norm(self.scaled_normals[j])
        }
    }

    pub fn face_diameter(&self, dim: usize, j: usize) -> f64 {
        if dim == 1 {
            self.diameter
        } else {
            norm(self.scaled_normals[j])
        }
    }

    /// Outward unit normal of face `j`.
    pub fn outward_normal(&self, j: usize) -> [f64; 2] {
        let n = self.scaled_normals[j];
        let l = norm(n);
        [-n[0] / l, -n[1] / l]
    }

    pub fn point(&self, bary: &[f64; 3]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (l, c) in bary.iter().zip(&self.coords) {
            x[0] += l * c[0];
            x[1] += l * c[1];
        }
        x
    }

    /// Physical gradients of the basis from barycentric derivatives.
    pub fn gradients(&self, dphi: &[[f64; 3]; MAX_DOFS], n: usize) -> [[f64; 2]; MAX_DOFS] {
        let mut g = [[0.0; 2]; MAX_DOFS];
        for s in 0..n {
            for j in 0..3 {
                g[s][0] += dphi[s][j] * self.grad_bary[j][0];
                g[s][1] += dphi[s][j] * self.grad_bary[j][1];
            }
        }
        g
    }
}

pub(crate) fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Geometry of a simplex given its vertex coordinates (1D uses the first two).
pub fn element_geometry(dim: usize, coords: [[f64; 2]; 3]) -> Result<ElementGeometry, MeshError> {
    if dim == 1 {
        let h = coords[1][0] - coords[0][0];
        let measure = h.abs();
        let scale = coords[0][0].abs().max(coords[1][0].abs()).max(1.0);
        if !(measure > 1e-14 * scale) {
            return Err(MeshError::DegenerateElement { element: usize::MAX, measure });
        }
        let grad_bary = [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]];
        let scaled_normals = [
            [measure * grad_bary[0][0], 0.0],
            [measure * grad_bary[1][0], 0.0],
            [0.0, 0.0],
        ];
        return Ok(ElementGeometry { coords, measure, diameter: measure, grad_bary, scaled_normals });
    }
    let [p0, p1, p2] = coords;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let measure = 0.5 * det.abs();
    let edge = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]).hypot(b[1] - a[1]);
    let diameter = edge(p0, p1).max(edge(p1, p2)).max(edge(p2, p0));
    if !(measure > 1e-14 * diameter * diameter) {
        return Err(MeshError::DegenerateElement { element: usize::MAX, measure });
    }
    let grad_bary = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    let mut scaled_normals = [[0.0; 2]; 3];
    for j in 0..3 {
        scaled_normals[j] = [2.0 * measure * grad_bary[j][0], 2.0 * measure * grad_bary[j][1]];
    }
    Ok(ElementGeometry { coords, measure, diameter, grad_bary, scaled_normals })
}

/// Scaled inward normals of a triangle (or interval) given its vertices.
pub fn scaled_inward_normals(dim: usize, coords: [[f64; 2]; 3]) -> Result<[[f64; 2]; 3], MeshError> {
    element_geometry(dim, coords).map(|g| g.scaled_normals)
}

/// Per-element DOF lists and DOF coordinates.
#[derive(Debug, Clone)]
pub struct DofMap {
    stride: usize,
    element_dofs: Vec<usize>,
    coords: Vec<[f64; 2]>,
}

impl DofMap {
    pub fn element(&self, e: usize) -> &[usize] {
        &self.element_dofs[e * self.stride..(e + 1) * self.stride]
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn local_count(&self) -> usize {
        self.stride
    }
}

/// Oriented graph on the DOFs of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGraph {
    pub nodes: usize,
    /// Direct edges `(tail, head)` in local DOF numbering.
    pub edges: Vec<(usize, usize)>,
}

impl ElementGraph {
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { nodes, edges }
    }

    /// The lattice used for flux recovery on a `dim`-simplex of given degree.
    pub fn lagrange(dim: usize, degree: usize) -> Result<Self, MeshError> {
        let edges = match (dim, degree) {
            (1, 1) => vec![(0, 1)],
            (1, 2) => vec![(0, 2), (2, 1)],
            (2, 1) => vec![(0, 1), (1, 2), (2, 0)],
            (2, 2) => vec![
                (0, 3),
                (0, 5),
                (3, 5),
                (4, 3),
                (3, 1),
                (1, 4),
                (4, 2),
                (5, 2),
                (5, 4),
            ],
            _ => {
                return Err(MeshError::Unsupported(format!(
                    "no element graph for dimension {dim}, degree {degree}"
                )))
            }
        };
        Ok(Self::new(reference::ndofs(dim, degree), edges))
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    degree: usize,
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    canonical: Vec<usize>,
    geometry: Vec<ElementGeometry>,
    neighbors: Vec<[Option<FaceLink>; 3]>,
    boundary_faces: Vec<BoundaryFace>,
    dofs: DofMap,
    reference: ReferenceElement,
}

impl Mesh {
    /// Build from raw vertices and elements. 1D elements use the first two indices.
    pub fn from_parts(
        dim: usize,
        degree: usize,
        vertices: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let canonical = (0..vertices.len()).collect();
        Self::with_identification(dim, degree, vertices, elements, canonical)
    }

    /// Like [`Mesh::from_parts`] with vertices identified through `canonical`
    /// (periodic meshes map each vertex to its representative).
    pub fn with_identification(
        dim: usize,
        degree: usize,
        vertices: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        canonical: Vec<usize>,
    ) -> Result<Self, MeshError> {
        if dim != 1 && dim != 2 {
            return Err(MeshError::Unsupported(format!("dimension {dim}")));
        }
        if degree != 1 && degree != 2 {
            return Err(MeshError::Unsupported(format!("polynomial degree {degree}")));
        }
        if canonical.len() != vertices.len() {
            return Err(MeshError::InvalidArgument("identification map length".into()));
        }
        let nv = dim + 1;
        for (e, el) in elements.iter().enumerate() {
            for &v in &el[..nv] {
                if v >= vertices.len() {
                    return Err(MeshError::InvalidArgument(format!(
                        "element {e} references missing vertex {v}"
                    )));
                }
            }
        }
        if canonical.iter().any(|&c| c >= vertices.len() || canonical[c] != c) {
            return Err(MeshError::InvalidArgument("identification map is not a projection".into()));
        }

        let mut geometry = Vec::with_capacity(elements.len());
        for (e, el) in elements.iter().enumerate() {
            let mut coords = [[0.0; 2]; 3];
            for i in 0..nv {
                coords[i] = vertices[el[i]];
            }
            let g = element_geometry(dim, coords).map_err(|err| match err {
                MeshError::DegenerateElement { measure, .. } => {
                    MeshError::DegenerateElement { element: e, measure }
                }
                other => other,
            })?;
            geometry.push(g);
        }

        let reference = ReferenceElement::new(dim, degree);

        // faces keyed by identified vertices
        let face_key = |el: &[usize; 3], j: usize| -> (usize, usize) {
            if dim == 1 {
                (canonical[el[1 - j]], usize::MAX)
            } else {
                let (a, b) = reference::face_vertices(j);
                let (ca, cb) = (canonical[el[a]], canonical[el[b]]);
                (ca.min(cb), ca.max(cb))
            }
        };
        let mut faces: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            for j in 0..nv {
                faces.entry(face_key(el, j)).or_default().push((e, j));
            }
        }
        let mut neighbors = vec![[None; 3]; elements.len()];
        let mut boundary = Vec::new();
        for list in faces.values() {
            match list.len() {
                1 => boundary.push(list[0]),
                2 => {
                    let (e0, j0) = list[0];
                    let (e1, j1) = list[1];
                    let flipped = if dim == 1 {
                        false
                    } else {
                        let (a0, _) = reference::face_vertices(j0);
                        let (a1, _) = reference::face_vertices(j1);
                        canonical[elements[e0][a0]] != canonical[elements[e1][a1]]
                    };
                    neighbors[e0][j0] = Some(FaceLink { element: e1, face: j1, flipped });
                    neighbors[e1][j1] = Some(FaceLink { element: e0, face: j0, flipped });
                }
                count => {
                    return Err(MeshError::NonConformal { element: list[0].0, count });
                }
            }
        }
        boundary.sort_unstable();

        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let boundary_faces = boundary
            .into_iter()
            .map(|(e, j)| {
                let g = &geometry[e];
                let normal = g.outward_normal(j);
                let measure = g.face_measure(dim, j);
                let mid = face_midpoint(dim, g, j);
                let tol = 1e-10 * (1.0 + (hi[0] - lo[0]).abs().max(hi[1] - lo[1]));
                let side = if (mid[0] - lo[0]).abs() < tol && normal[0] < -0.5 {
                    Side::Left
                } else if (mid[0] - hi[0]).abs() < tol && normal[0] > 0.5 {
                    Side::Right
                } else if (mid[1] - lo[1]).abs() < tol && normal[1] < -0.5 {
                    Side::Bottom
                } else if (mid[1] - hi[1]).abs() < tol && normal[1] > 0.5 {
                    Side::Top
                } else {
                    Side::Interior
                };
                BoundaryFace { element: e, local_face: j, normal, measure, side }
            })
            .collect();

        let dofs = build_dofs(dim, degree, &vertices, &elements, &canonical, &reference);

        Ok(Self {
            dim,
            degree,
            vertices,
            elements,
            canonical,
            geometry,
            neighbors,
            boundary_faces,
            dofs,
            reference,
        })
    }

    /// Uniform interval mesh of `n` cells on `[x0, x1]`.
    pub fn interval(n: usize, x0: f64, x1: f64, degree: usize, periodic: bool) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::InvalidArgument("cell count must be positive".into()));
        }
        if periodic && n < 3 {
            return Err(MeshError::InvalidArgument("periodic meshes need at least 3 cells".into()));
        }
        if !(x1 > x0) {
            return Err(MeshError::InvalidArgument("empty interval".into()));
        }
        let h = (x1 - x0) / n as f64;
        let vertices: Vec<[f64; 2]> =
            (0..=n).map(|i| [if i == n { x1 } else { x0 + i as f64 * h }, 0.0]).collect();
        let elements = (0..n).map(|i| [i, i + 1, 0]).collect();
        let mut canonical: Vec<usize> = (0..=n).collect();
        if periodic {
            canonical[n] = 0;
        }
        Self::with_identification(1, degree, vertices, elements, canonical)
    }

    /// Rectangle split into `nx * ny` quads, each cut into two triangles.
    pub fn structured(nx: usize, ny: usize, domain: Rect, degree: usize) -> Result<Self, MeshError> {
        Self::structured_periodic(nx, ny, domain, degree, [false, false])
    }

    pub fn structured_periodic(
        nx: usize,
        ny: usize,
        domain: Rect,
        degree: usize,
        periodic: [bool; 2],
    ) -> Result<Self, MeshError> {
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidArgument("cell counts must be positive".into()));
        }
        if (periodic[0] && nx < 3) || (periodic[1] && ny < 3) {
            return Err(MeshError::InvalidArgument(
                "periodic directions need at least 3 cells".into(),
            ));
        }
        if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
            return Err(MeshError::InvalidArgument("degenerate domain".into()));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny {
                domain.y1
            } else {
                domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny as f64
            };
            for i in 0..=nx {
                let x = if i == nx {
                    domain.x1
                } else {
                    domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx as f64
                };
                vertices.push([x, y]);
            }
        }
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        let mut canonical: Vec<usize> = (0..vertices.len()).collect();
        for j in 0..=ny {
            for i in 0..=nx {
                let ci = if periodic[0] && i == nx { 0 } else { i };
                let cj = if periodic[1] && j == ny { 0 } else { j };
                canonical[id(i, j)] = id(ci, cj);
            }
        }
        Self::with_identification(2, degree, vertices, elements, canonical)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn nelements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn element_scaled_normals(&self, e: usize) -> &[[f64; 2]] {
        &self.geometry[e].scaled_normals[..self.dim + 1]
    }

    pub fn neighbor(&self, e: usize, face: usize) -> Option<FaceLink> {
        self.neighbors[e][face]
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn ndofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn element_graph(&self, _e: usize) -> Result<ElementGraph, MeshError> {
        ElementGraph::lagrange(self.dim, self.degree)
    }

    /// Whether two local vertices of different elements are the same mesh vertex.
    pub fn same_vertex(&self, a: usize, b: usize) -> bool {
        self.canonical[a] == self.canonical[b]
    }

    pub fn total_measure(&self) -> f64 {
        self.geometry.iter().map(|g| g.measure).sum()
    }

    pub fn min_diameter(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(f64::INFINITY, f64::min)
    }
}

fn face_midpoint(dim: usize, g: &ElementGeometry, j: usize) -> [f64; 2] {
    if dim == 1 {
        g.coords[1 - j]
    } else {
        let (a, b) = reference::face_vertices(j);
        [0.5 * (g.coords[a][0] + g.coords[b][0]), 0.5 * (g.coords[a][1] + g.coords[b][1])]
    }
}

fn build_dofs(
    dim: usize,
    degree: usize,
    vertices: &[[f64; 2]],
    elements: &[[usize; 3]],
    canonical: &[usize],
    reference: &ReferenceElement,
) -> DofMap {
    let nv = dim + 1;
    let stride = reference.ndofs;
    let mut vertex_dof = vec![usize::MAX; vertices.len()];
    let mut coords = Vec::new();
    for el in elements {
        for &v in &el[..nv] {
            let c = canonical[v];
            if vertex_dof[c] == usize::MAX {
                vertex_dof[c] = coords.len();
                coords.push(vertices[c]);
            }
        }
    }
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut element_dofs = Vec::with_capacity(stride * elements.len());
    for el in elements {
        for &v in &el[..nv] {
            element_dofs.push(vertex_dof[canonical[v]]);
        }
        if degree == 2 {
            let pairs: &[(usize, usize)] = if dim == 1 { &[(0, 1)] } else { &[(0, 1), (1, 2), (2, 0)] };
            for &(a, b) in pairs {
                let (ca, cb) = (canonical[el[a]], canonical[el[b]]);
                let key = (ca.min(cb), ca.max(cb));
                let id = *midpoint.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[el[a]], vertices[el[b]]);
                    coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    coords.len() - 1
                });
                element_dofs.push(id);
            }
        }
    }
    DofMap { stride, element_dofs, coords }
}
