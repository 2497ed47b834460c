//! Lagrange bases and quadrature tables on the reference simplex.
//!
//! Everything is expressed in barycentric coordinates so the same tables
//! serve every physical element of a mesh.

/// Maximum number of local DOFs (P2 triangle).
pub const MAX_DOFS: usize = 6;

/// A volume quadrature node with its basis data.
#[derive(Debug, Clone)]
pub struct VolumePoint {
    pub bary: [f64; 3],
    /// Weight relative to the element measure (weights sum to 1).
    pub weight: f64,
    pub phi: [f64; MAX_DOFS],
    /// Derivatives of each basis function with respect to each barycentric coordinate.
    pub dphi: [[f64; 3]; MAX_DOFS],
}

/// A face quadrature node.
#[derive(Debug, Clone)]
pub struct FacePoint {
    /// Position along the face, 0 at the first face vertex and 1 at the second.
    pub t: f64,
    pub bary: [f64; 3],
    /// Weight relative to the face measure (weights sum to 1).
    pub weight: f64,
    pub phi: [f64; MAX_DOFS],
    pub dphi: [[f64; 3]; MAX_DOFS],
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub dim: usize,
    pub degree: usize,
    pub ndofs: usize,
    pub volume: Vec<VolumePoint>,
    /// One list of points per local face; face `j` is opposite vertex `j`.
    pub faces: Vec<Vec<FacePoint>>,
    /// Local DOFs whose basis functions do not vanish on each face.
    pub face_dofs: Vec<Vec<usize>>,
    /// Barycentric position of each local DOF.
    pub dof_bary: Vec<[f64; 3]>,
}

/// Local vertex pair spanning face `j` (2D), ordered as the face parameter runs.
pub fn face_vertices(j: usize) -> (usize, usize) {
    ((j + 1) % 3, (j + 2) % 3)
}

/// Local P2 midpoint DOF sitting on the edge between vertices `a` and `b`.
pub fn midpoint_dof(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 1) => 3,
        (1, 2) => 4,
        (0, 2) => 5,
        _ => unreachable!("not an edge"),
    }
}

pub fn ndofs(dim: usize, degree: usize) -> usize {
    match dim {
        1 => degree + 1,
        _ => (degree + 1) * (degree + 2) / 2,
    }
}

/// Basis values at a barycentric point.
pub fn basis(dim: usize, degree: usize, l: [f64; 3]) -> [f64; MAX_DOFS] {
    let mut phi = [0.0; MAX_DOFS];
    match (dim, degree) {
        (1, 1) => {
            phi[0] = l[0];
            phi[1] = l[1];
        }
        (1, _) => {
            phi[0] = l[0] * (2.0 * l[0] - 1.0);
            phi[1] = l[1] * (2.0 * l[1] - 1.0);
            phi[2] = 4.0 * l[0] * l[1];
        }
        (_, 1) => phi[..3].copy_from_slice(&l),
        _ => {
            for i in 0..3 {
                phi[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            phi[3] = 4.0 * l[0] * l[1];
            phi[4] = 4.0 * l[1] * l[2];
            phi[5] = 4.0 * l[2] * l[0];
        }
    }
    phi
}

/// Derivatives of the basis with respect to the barycentric coordinates.
pub fn basis_bary_derivatives(dim: usize, degree: usize, l: [f64; 3]) -> [[f64; 3]; MAX_DOFS] {
    let mut d = [[0.0; 3]; MAX_DOFS];
    match (dim, degree) {
        (1, 1) => {
            d[0][0] = 1.0;
            d[1][1] = 1.0;
        }
        (1, _) => {
            d[0][0] = 4.0 * l[0] - 1.0;
            d[1][1] = 4.0 * l[1] - 1.0;
            d[2][0] = 4.0 * l[1];
            d[2][1] = 4.0 * l[0];
        }
        (_, 1) => {
            for (i, row) in d.iter_mut().take(3).enumerate() {
                row[i] = 1.0;
            }
        }
        _ => {
            for (i, row) in d.iter_mut().take(3).enumerate() {
                row[i] = 4.0 * l[i] - 1.0;
            }
            d[3][0] = 4.0 * l[1];
            d[3][1] = 4.0 * l[0];
            d[4][1] = 4.0 * l[2];
            d[4][2] = 4.0 * l[1];
            d[5][2] = 4.0 * l[0];
            d[5][0] = 4.0 * l[2];
        }
    }
    d
}

/// Gauss-Legendre nodes on [0, 1] with weights summing to one.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    match n {
        1 => vec![(0.5, 1.0)],
        2 => {
            let h = 0.5 / 3f64.sqrt();
            vec![(0.5 - h, 0.5), (0.5 + h, 0.5)]
        }
        3 => {
            let h = 0.5 * (0.6f64).sqrt();
            vec![(0.5 - h, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + h, 5.0 / 18.0)]
        }
        _ => {
            let h1 = 0.5 * (3.0 / 7.0 - 2.0 / 7.0 * (1.2f64).sqrt()).sqrt();
            let h2 = 0.5 * (3.0 / 7.0 + 2.0 / 7.0 * (1.2f64).sqrt()).sqrt();
            let w1 = (18.0 + 30f64.sqrt()) / 72.0;
            let w2 = (18.0 - 30f64.sqrt()) / 72.0;
            vec![(0.5 - h2, w2), (0.5 - h1, w1), (0.5 + h1, w1), (0.5 + h2, w2)]
        }
    }
}

/// Symmetric triangle rule: degree 2 (3 points) or degree 4 (6 points).
pub fn triangle_rule(degree: usize) -> Vec<([f64; 3], f64)> {
    if degree <= 2 {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        return vec![([a, b, b], 1.0 / 3.0), ([b, a, b], 1.0 / 3.0), ([b, b, a], 1.0 / 3.0)];
    }
    let s10 = 10f64.sqrt();
    let r = (38.0 - 44.0 * (0.4f64).sqrt()).sqrt();
    let a1 = (8.0 - s10 + r) / 18.0;
    let a2 = (8.0 - s10 - r) / 18.0;
    let q = (213125.0 - 53320.0 * s10).sqrt();
    let w1 = (620.0 + q) / 3720.0;
    let w2 = (620.0 - q) / 3720.0;
    let mut out = Vec::with_capacity(6);
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        out.push(([b, a, a], w));
        out.push(([a, b, a], w));
        out.push(([a, a, b], w));
    }
    out
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize) -> Self {
        let n = ndofs(dim, degree);
        let volume_nodes: Vec<([f64; 3], f64)> = if dim == 1 {
            gauss_legendre(degree + 1)
                .into_iter()
                .map(|(t, w)| ([1.0 - t, t, 0.0], w))
                .collect()
        } else {
            triangle_rule(2 * degree)
        };
        let volume = volume_nodes
            .into_iter()
            .map(|(bary, weight)| VolumePoint {
                bary,
                weight,
                phi: basis(dim, degree, bary),
                dphi: basis_bary_derivatives(dim, degree, bary),
            })
            .collect();

        let mut faces = Vec::new();
        let mut face_dofs = Vec::new();
        if dim == 1 {
            // face j is the point at vertex 1 - j
            for j in 0..2 {
                let mut bary = [0.0; 3];
                bary[1 - j] = 1.0;
                faces.push(vec![FacePoint {
                    t: 0.0,
                    bary,
                    weight: 1.0,
                    phi: basis(dim, degree, bary),
                    dphi: basis_bary_derivatives(dim, degree, bary),
                }]);
                face_dofs.push(vec![1 - j]);
            }
        } else {
            let rule = gauss_legendre(degree + 1);
            for j in 0..3 {
                let (a, b) = face_vertices(j);
                let pts = rule
                    .iter()
                    .map(|&(t, weight)| {
                        let mut bary = [0.0; 3];
                        bary[a] = 1.0 - t;
                        bary[b] = t;
                        FacePoint {
                            t,
                            bary,
                            weight,
                            phi: basis(dim, degree, bary),
                            dphi: basis_bary_derivatives(dim, degree, bary),
                        }
                    })
                    .collect();
                faces.push(pts);
                let mut dofs = vec![a, b];
                if degree == 2 {
                    dofs.push(midpoint_dof(a, b));
                }
                face_dofs.push(dofs);
            }
        }

        let mut dof_bary = Vec::with_capacity(n);
        let nv = dim + 1;
        for i in 0..nv {
            let mut l = [0.0; 3];
            l[i] = 1.0;
            dof_bary.push(l);
        }
        if degree == 2 {
            if dim == 1 {
                dof_bary.push([0.5, 0.5, 0.0]);
            } else {
                dof_bary.push([0.5, 0.5, 0.0]);
                dof_bary.push([0.0, 0.5, 0.5]);
                dof_bary.push([0.5, 0.0, 0.5]);
            }
        }

        Self { dim, degree, ndofs: n, volume, faces, face_dofs, dof_bary }
    }

    pub fn nvertices(&self) -> usize {
        self.dim + 1
    }

    pub fn nfaces(&self) -> usize {
        self.dim + 1
    }
}
