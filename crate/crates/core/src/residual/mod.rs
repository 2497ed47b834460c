//! Element residuals, their distribution to DOFs, boundary residuals and assembly.

mod boundary;
mod kernels;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::conslaw::{ConservationLaw, LawError, State};
use crate::mesh::Mesh;

pub use boundary::{boundary_residuals, BoundaryCondition, BoundaryFn, Dirichlet, Transmissive};
pub use kernels::{
    blend_limiter, element_residuals, galerkin_residuals, gather, jump_term, mass_residuals,
    rusanov_alpha, rusanov_coefficients, rusanov_residuals, stabilized_residuals, supg_term,
    supg_tau_h, total_residual, Limited, Stabilization, StabilizedResiduals,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error("element {element}: {source}")]
    Inadmissible { element: usize, source: LawError },
    #[error("invalid scheme parameter: {0}")]
    InvalidParameter(String),
    #[error("monotone residuals do not sum to the total (defect {defect:e})")]
    ConservationDefect { defect: f64 },
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("state vector has {got} entries, mesh has {expected} DOFs")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Galerkin,
    Rusanov,
    Supg,
    Jump,
    /// β-limited Rusanov without stabilization.
    Limited,
    LimitedSupg,
    LimitedJump,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::Galerkin,
        SchemeKind::Rusanov,
        SchemeKind::Supg,
        SchemeKind::Jump,
        SchemeKind::Limited,
        SchemeKind::LimitedSupg,
        SchemeKind::LimitedJump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Galerkin => "galerkin",
            SchemeKind::Rusanov => "rusanov",
            SchemeKind::Supg => "supg",
            SchemeKind::Jump => "jump",
            SchemeKind::Limited => "limited",
            SchemeKind::LimitedSupg => "limited_supg",
            SchemeKind::LimitedJump => "limited_jump",
        }
    }

    pub fn uses_supg(self) -> bool {
        matches!(self, SchemeKind::Supg | SchemeKind::LimitedSupg)
    }

    pub fn is_limited(self) -> bool {
        matches!(self, SchemeKind::Limited | SchemeKind::LimitedSupg | SchemeKind::LimitedJump)
    }
}

impl FromStr for SchemeKind {
    type Err = ResidualError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| ResidualError::UnknownScheme(s.to_string()))
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionScheme {
    pub kind: SchemeKind,
    /// Multiplies the default `h_K τ_K`.
    pub tau_scale: f64,
    pub theta_e: f64,
    pub gamma_jump: f64,
    /// Replaces the computed Rusanov coefficient when set.
    pub alpha: Option<f64>,
}

impl DistributionScheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self { kind, tau_scale: 1.0, theta_e: 0.01, gamma_jump: 0.1, alpha: None }
    }

    pub fn validate(&self) -> Result<(), ResidualError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ResidualError::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            SchemeKind::Supg | SchemeKind::LimitedSupg => positive("tau_scale", self.tau_scale)?,
            SchemeKind::Jump => positive("theta_e", self.theta_e)?,
            SchemeKind::LimitedJump => positive("gamma_jump", self.gamma_jump)?,
            _ => {}
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ResidualError::InvalidParameter(format!("alpha must be nonnegative, got {a}")));
            }
        }
        Ok(())
    }
}

/// Distributed residuals of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementResiduals<const M: usize> {
    pub element: usize,
    /// Global DOF ids, in local order.
    pub dofs: Vec<usize>,
    pub split: Vec<State<M>>,
    pub total: State<M>,
}

/// Distributed residuals of one boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceResiduals<const M: usize> {
    /// Index into [`Mesh::boundary_faces`].
    pub face: usize,
    pub dofs: Vec<usize>,
    pub split: Vec<State<M>>,
    pub total: State<M>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualSet<const M: usize> {
    pub elements: Vec<ElementResiduals<M>>,
    pub faces: Vec<FaceResiduals<M>>,
}

impl<const M: usize> ResidualSet<M> {
    /// Per-DOF sums in element order, then face order.
    pub fn assemble(&self, ndofs: usize) -> Vec<State<M>> {
        let mut r = vec![State::<M>::zeros(); ndofs];
        for el in &self.elements {
            for (&d, v) in el.dofs.iter().zip(&el.split) {
                r[d] += v;
            }
        }
        for f in &self.faces {
            for (&d, v) in f.dofs.iter().zip(&f.split) {
                r[d] += v;
            }
        }
        r
    }

    /// `Σ_K Φ^K + Σ_f Ψ^f`.
    pub fn total(&self) -> State<M> {
        let mut t = State::<M>::zeros();
        for el in &self.elements {
            t += el.total;
        }
        for f in &self.faces {
            t += f.total;
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct Assembly<const M: usize> {
    pub residual: Vec<State<M>>,
    pub set: ResidualSet<M>,
}

/// Steady residual `R_σ = Σ_K Φ_σ^K + Σ_f Ψ_σ^f`.
///
/// Elements are evaluated in parallel; the per-DOF reduction runs in fixed
/// element order so results are bitwise reproducible.
pub fn assemble<const M: usize, L, B>(
    mesh: &Mesh,
    u: &[State<M>],
    scheme: &DistributionScheme,
    law: &L,
    bc: &B,
    t: f64,
) -> Result<Assembly<M>, ResidualError>
where
    L: ConservationLaw<M> + ?Sized,
    B: BoundaryCondition<M> + ?Sized,
{
    scheme.validate()?;
    if u.len() != mesh.ndofs() {
        return Err(ResidualError::SizeMismatch { expected: mesh.ndofs(), got: u.len() });
    }
    let elements = (0..mesh.nelements())
        .into_par_iter()
        .map(|e| element_residuals(mesh, e, u, scheme, law))
        .collect::<Result<Vec<_>, _>>()?;
    let faces = (0..mesh.boundary_faces().len())
        .into_par_iter()
        .map(|f| boundary_residuals(mesh, f, u, law, bc, t))
        .collect::<Result<Vec<_>, _>>()?;
    let set = ResidualSet { elements, faces };
    Ok(Assembly { residual: set.assemble(mesh.ndofs()), set })
}
