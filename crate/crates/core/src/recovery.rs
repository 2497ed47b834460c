//! Finite-volume fluxes equivalent to a residual distribution scheme.
//!
//! On the DOF graph of an element, with oriented incidence matrix `A` and
//! Laplacian `L = AAᵀ`, the edge fluxes `f̂ = AᵀL⁻¹Ψ` solve `Af̂ = Ψ` with
//! `Ψ_σ = Φ_σ − f̂_σ^b`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::conslaw::{ConservationLaw, State};
use crate::mesh::reference::FacePoint;
use crate::mesh::{ElementGraph, Mesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("residuals are not compatible: component sums {defect:?}")]
    Incompatible { defect: Vec<f64> },
    #[error("expected {expected} nodal values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Relative tolerance on `Σ_σ Ψ_σ = 0`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IncidenceSystem {
    graph: ElementGraph,
    incidence: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    laplacian_pinv: DMatrix<f64>,
    recovery: DMatrix<f64>,
}

impl IncidenceSystem {
    pub fn build(graph: &ElementGraph) -> Result<Self, RecoveryError> {
        let n = graph.nodes;
        if n < 2 {
            return Err(RecoveryError::InvalidGraph("fewer than two nodes".into()));
        }
        for &(a, b) in &graph.edges {
            if a >= n || b >= n || a == b {
                return Err(RecoveryError::InvalidGraph(format!("bad edge ({a}, {b})")));
            }
        }
        if !graph.is_connected() {
            return Err(RecoveryError::InvalidGraph("graph is not connected".into()));
        }
        let mut incidence = DMatrix::zeros(n, graph.edges.len());
        for (k, &(a, b)) in graph.edges.iter().enumerate() {
            incidence[(a, k)] = 1.0;
            incidence[(b, k)] = -1.0;
        }
        let laplacian = &incidence * incidence.transpose();
        let lambda = laplacian.trace() / n as f64;
        let ones = DMatrix::from_element(n, n, 1.0 / n as f64);
        let shifted = &laplacian + &ones * lambda;
        let inv = shifted
            .try_inverse()
            .ok_or_else(|| RecoveryError::InvalidGraph("shifted Laplacian is singular".into()))?;
        let laplacian_pinv = inv - ones / lambda;
        let recovery = incidence.transpose() * &laplacian_pinv;
        Ok(Self { graph: graph.clone(), incidence, laplacian, laplacian_pinv, recovery })
    }

    pub fn graph(&self) -> &ElementGraph {
        &self.graph
    }

    /// Node × direct-edge matrix: +1 at the tail, −1 at the head.
    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Inverse of `L` on the complement of the constants.
    pub fn laplacian_pinv(&self) -> &DMatrix<f64> {
        &self.laplacian_pinv
    }

    /// `AᵀL⁻¹`, one row per direct edge.
    pub fn recovery_matrix(&self) -> &DMatrix<f64> {
        &self.recovery
    }

    fn check_len(&self, len: usize) -> Result<(), RecoveryError> {
        if len != self.graph.nodes {
            return Err(RecoveryError::SizeMismatch { expected: self.graph.nodes, got: len });
        }
        Ok(())
    }

    /// Edge fluxes `AᵀL⁻¹Ψ`, componentwise.
    pub fn recover_fluxes<const M: usize>(&self, psi: &[State<M>]) -> Result<Vec<State<M>>, RecoveryError> {
        self.check_len(psi.len())?;
        let defect = compatibility_defect(psi);
        let scale = psi.iter().map(|p| p.amax()).fold(0.0, f64::max);
        if defect.iter().any(|d| !(d.abs() <= COMPATIBILITY_TOL * (1.0 + scale))) {
            return Err(RecoveryError::Incompatible { defect });
        }
        Ok(self.apply(psi))
    }

    fn apply<const M: usize>(&self, psi: &[State<M>]) -> Vec<State<M>> {
        (0..self.graph.edges.len())
            .map(|k| {
                let mut f = State::<M>::zeros();
                for (s, p) in psi.iter().enumerate() {
                    f += p * self.recovery[(k, s)];
                }
                f
            })
            .collect()
    }

    /// Control-volume normals `AᵀL⁻¹N` from the boundary normal weights.
    pub fn recover_normals(&self, weights: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, RecoveryError> {
        let psi: Vec<State<2>> = weights.iter().map(|w| State::<2>::new(w[0], w[1])).collect();
        Ok(self.recover_fluxes(&psi)?.iter().map(|v| [v[0], v[1]]).collect())
    }

    /// Per-node sums `Σ_σ' ε_{σσ'} f̂_{σσ'}`, i.e. `Af̂`.
    pub fn balance<const M: usize>(&self, fluxes: &[State<M>]) -> Vec<State<M>> {
        let mut out = vec![State::<M>::zeros(); self.graph.nodes];
        for (&(a, b), f) in self.graph.edges.iter().zip(fluxes) {
            out[a] += f;
            out[b] -= f;
        }
        out
    }
}

fn compatibility_defect<const M: usize>(psi: &[State<M>]) -> Vec<f64> {
    let mut s = State::<M>::zeros();
    for p in psi {
        s += p;
    }
    s.iter().copied().collect()
}

/// `f̂_σ^b = ∮_{∂K} φ_σ f̂_n dγ` with `f̂_n` evaluated on the outward unit normal
/// by `interface_flux(face, point, normal)`.
pub fn boundary_dof_flux<const M: usize, F>(mesh: &Mesh, e: usize, mut interface_flux: F) -> Vec<State<M>>
where
    F: FnMut(usize, &FacePoint, [f64; 2]) -> State<M>,
{
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let dim = mesh.dim();
    let mut out = vec![State::<M>::zeros(); r.ndofs];
    for (j, pts) in r.faces.iter().enumerate() {
        let n = g.outward_normal(j);
        let fm = g.face_measure(dim, j);
        for p in pts {
            let f = interface_flux(j, p, n) * (p.weight * fm);
            for (s, o) in out.iter_mut().enumerate() {
                *o += f * p.phi[s];
            }
        }
    }
    out
}

/// Boundary fluxes with the interior trace: `f̂_n = f(u_h)·n`.
pub fn continuous_boundary_flux<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
) -> Vec<State<M>> {
    boundary_dof_flux(mesh, e, |_, p, n| {
        let mut u = State::<M>::zeros();
        for (k, v) in local.iter().enumerate() {
            u += v * p.phi[k];
        }
        law.normal_flux(&u, n)
    })
}

/// Normal weights `N_σ = ∮_{∂K} φ_σ n dγ` with the inward normal, so that for a
/// constant state `f̂_σ^b = −f(u)·N_σ` and recovered fluxes equal `f(u)·n_{σσ'}`.
pub fn boundary_normal_weights(mesh: &Mesh, e: usize) -> Vec<[f64; 2]> {
    let w = boundary_dof_flux::<2, _>(mesh, e, |_, _, n| State::<2>::new(-n[0], -n[1]));
    w.iter().map(|v| [v[0], v[1]]).collect()
}

/// Fluxes of one element on its direct edges plus its boundary data.
#[derive(Debug, Clone)]
pub struct FluxAssignment<const M: usize> {
    pub edges: Vec<(usize, usize)>,
    pub fluxes: Vec<State<M>>,
    pub normals: Option<Vec<[f64; 2]>>,
    pub boundary_flux: Vec<State<M>>,
    pub boundary_normals: Option<Vec<[f64; 2]>>,
}

impl<const M: usize> FluxAssignment<M> {
    /// Flux from `a` to `b`; reversed edges get the opposite sign.
    pub fn flux(&self, a: usize, b: usize) -> Option<State<M>> {
        self.edges.iter().zip(&self.fluxes).find_map(|(&(x, y), f)| {
            if (x, y) == (a, b) {
                Some(*f)
            } else if (x, y) == (b, a) {
                Some(-f)
            } else {
                None
            }
        })
    }
}

/// Recover the edge fluxes of element `e` from its split residuals `Φ_σ` and
/// boundary fluxes `f̂_σ^b`; normals are attached too.
pub fn recover_element<const M: usize>(
    mesh: &Mesh,
    e: usize,
    system: &IncidenceSystem,
    split: &[State<M>],
    boundary_flux: &[State<M>],
) -> Result<FluxAssignment<M>, RecoveryError> {
    system.check_len(split.len())?;
    system.check_len(boundary_flux.len())?;
    let psi: Vec<State<M>> = split.iter().zip(boundary_flux).map(|(p, b)| p - b).collect();
    let fluxes = system.recover_fluxes(&psi)?;
    let weights = boundary_normal_weights(mesh, e);
    let normals = system.recover_normals(&weights)?;
    Ok(FluxAssignment {
        edges: system.graph().edges.clone(),
        fluxes,
        normals: Some(normals),
        boundary_flux: boundary_flux.to_vec(),
        boundary_normals: Some(weights),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub balance_defect: f64,
    pub worst_node: usize,
    pub antisymmetry_defect: f64,
    pub compatibility_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `Af̂ = Ψ`, antisymmetry and `Σ Ψ = 0`.
pub fn certify<const M: usize>(system: &IncidenceSystem, fluxes: &[State<M>], psi: &[State<M>]) -> Certification {
    let bal = system.balance(fluxes);
    let (mut worst, mut worst_node) = (0.0, 0);
    for (s, (b, p)) in bal.iter().zip(psi).enumerate() {
        let d = (b - p).amax();
        if d > worst {
            worst = d;
            worst_node = s;
        }
    }
    let assignment = FluxAssignment {
        edges: system.graph().edges.clone(),
        fluxes: fluxes.to_vec(),
        normals: None,
        boundary_flux: Vec::new(),
        boundary_normals: None,
    };
    let mut anti: f64 = 0.0;
    for &(a, b) in &assignment.edges {
        if let (Some(f), Some(g)) = (assignment.flux(a, b), assignment.flux(b, a)) {
            anti = anti.max((f + g).amax());
        }
    }
    let compat = compatibility_defect(psi).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let scale = psi.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let tolerance = 1e-11 * (1.0 + scale);
    Certification {
        balance_defect: worst,
        worst_node,
        antisymmetry_defect: anti,
        compatibility_defect: compat,
        tolerance,
        passed: worst <= tolerance && anti == 0.0 && compat <= COMPATIBILITY_TOL * (1.0 + scale),
    }
}
