use super::{FaceResiduals, ResidualError};
use crate::conslaw::{ConservationLaw, State};
use crate::mesh::{BoundaryFace, Mesh};

/// Exterior state seen by a boundary quadrature point.
pub trait BoundaryCondition<const M: usize>: Sync {
    fn exterior(&self, x: [f64; 2], t: f64, interior: &State<M>, face: &BoundaryFace) -> State<M>;
}

/// Exterior state equals the interior one: no boundary residual.
#[derive(Debug, Clone, Copy, Default)]
pub struct Transmissive;

impl<const M: usize> BoundaryCondition<M> for Transmissive {
    fn exterior(&self, _x: [f64; 2], _t: f64, interior: &State<M>, _face: &BoundaryFace) -> State<M> {
        *interior
    }
}

/// Constant exterior state.
#[derive(Debug, Clone, Copy)]
pub struct Dirichlet<const M: usize>(pub State<M>);

impl<const M: usize> BoundaryCondition<M> for Dirichlet<M> {
    fn exterior(&self, _x: [f64; 2], _t: f64, _interior: &State<M>, _face: &BoundaryFace) -> State<M> {
        self.0
    }
}

/// Exterior state from a closure of position and time.
pub struct BoundaryFn<F>(pub F);

impl<const M: usize, F> BoundaryCondition<M> for BoundaryFn<F>
where
    F: Fn([f64; 2], f64) -> State<M> + Sync,
{
    fn exterior(&self, x: [f64; 2], t: f64, _interior: &State<M>, _face: &BoundaryFace) -> State<M> {
        (self.0)(x, t)
    }
}

/// `Ψ_σ^f = ∫_f φ_σ (ℱ_n(u_h, u_b) − f(u_h)·n)` for the face-carrying DOFs.
pub fn boundary_residuals<const M: usize, L, B>(
    mesh: &Mesh,
    face: usize,
    u: &[State<M>],
    law: &L,
    bc: &B,
    t: f64,
) -> Result<FaceResiduals<M>, ResidualError>
where
    L: ConservationLaw<M> + ?Sized,
    B: BoundaryCondition<M> + ?Sized,
{
    let bf = &mesh.boundary_faces()[face];
    let r = mesh.reference();
    let g = mesh.geometry(bf.element);
    let dofs = mesh.dofs().element(bf.element);
    let local_dofs = &r.face_dofs[bf.local_face];
    let mut split = vec![State::<M>::zeros(); local_dofs.len()];
    let mut total = State::<M>::zeros();
    for p in &r.faces[bf.local_face] {
        let mut uq = State::<M>::zeros();
        for (k, &d) in dofs.iter().enumerate() {
            uq += u[d] * p.phi[k];
        }
        law.check_admissible(&uq)
            .map_err(|source| ResidualError::Inadmissible { element: bf.element, source })?;
        let ub = bc.exterior(g.point(&p.bary), t, &uq, bf);
        let diff = (law.upwind_flux(&uq, &ub, bf.normal) - law.normal_flux(&uq, bf.normal)) * (p.weight * bf.measure);
        total += diff;
        for (s, &k) in split.iter_mut().zip(local_dofs) {
            *s += diff * p.phi[k];
        }
    }
    Ok(FaceResiduals { face, dofs: local_dofs.iter().map(|&k| dofs[k]).collect(), split, total })
}
