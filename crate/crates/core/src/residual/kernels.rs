use nalgebra::DMatrix;

use super::{DistributionScheme, ElementResiduals, ResidualError, SchemeKind};
use crate::conslaw::{ConservationLaw, Flux, Jacobian, State};
use crate::mesh::reference::{basis_bary_derivatives, face_vertices, MAX_DOFS};
use crate::mesh::Mesh;

/// Local DOF states of element `e`.
pub fn gather<const M: usize>(mesh: &Mesh, e: usize, u: &[State<M>]) -> Vec<State<M>> {
    mesh.dofs().element(e).iter().map(|&d| u[d]).collect()
}

fn interp<const M: usize>(phi: &[f64; MAX_DOFS], local: &[State<M>]) -> State<M> {
    let mut v = State::<M>::zeros();
    for (p, u) in phi.iter().zip(local) {
        v += u * *p;
    }
    v
}

fn grad<const M: usize>(g: &[[f64; 2]; MAX_DOFS], local: &[State<M>]) -> [State<M>; 2] {
    let mut d = [State::<M>::zeros(); 2];
    for (gs, u) in g.iter().zip(local) {
        d[0] += u * gs[0];
        d[1] += u * gs[1];
    }
    d
}

fn flux_at<const M: usize, L: ConservationLaw<M> + ?Sized>(
    law: &L,
    e: usize,
    u: &State<M>,
) -> Result<Flux<M>, ResidualError> {
    law.check_admissible(u)
        .map_err(|source| ResidualError::Inadmissible { element: e, source })?;
    Ok(law.flux(u))
}

fn jacobians<const M: usize, L: ConservationLaw<M> + ?Sized>(
    law: &L,
    dim: usize,
    u: &State<M>,
) -> [Jacobian<M>; 2] {
    let jx = law.jacobian(u, [1.0, 0.0]);
    let jy = if dim == 2 { law.jacobian(u, [0.0, 1.0]) } else { Jacobian::<M>::zeros() };
    [jx, jy]
}

fn spectral_norm<const M: usize>(a: &Jacobian<M>) -> f64 {
    if M == 1 {
        return a[(0, 0)].abs();
    }
    DMatrix::from_column_slice(M, M, a.as_slice()).singular_values().max()
}

fn mean<const M: usize>(local: &[State<M>]) -> State<M> {
    let mut s = State::<M>::zeros();
    for u in local {
        s += u;
    }
    s / local.len() as f64
}

/// `Φ^K`, the face quadrature of the interpolated normal flux.
pub fn total_residual<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
) -> Result<State<M>, ResidualError> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let mut total = State::<M>::zeros();
    for (j, pts) in r.faces.iter().enumerate() {
        let n = [-g.scaled_normals[j][0], -g.scaled_normals[j][1]];
        for p in pts {
            let f = flux_at(law, e, &interp(&p.phi, local))?;
            total += (f[0] * n[0] + f[1] * n[1]) * p.weight;
        }
    }
    Ok(total)
}

/// `∮ φ_σ f·n − ∫ ∇φ_σ·f` for each local DOF.
pub fn galerkin_residuals<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
) -> Result<Vec<State<M>>, ResidualError> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let n = r.ndofs;
    let mut out = vec![State::<M>::zeros(); n];
    for (j, pts) in r.faces.iter().enumerate() {
        let nf = [-g.scaled_normals[j][0], -g.scaled_normals[j][1]];
        for p in pts {
            let f = flux_at(law, e, &interp(&p.phi, local))?;
            let fn_ = (f[0] * nf[0] + f[1] * nf[1]) * p.weight;
            for s in 0..n {
                out[s] += fn_ * p.phi[s];
            }
        }
    }
    for q in &r.volume {
        let f = flux_at(law, e, &interp(&q.phi, local))?;
        let grads = g.gradients(&q.dphi, n);
        let w = q.weight * g.measure;
        for s in 0..n {
            out[s] -= (f[0] * grads[s][0] + f[1] * grads[s][1]) * w;
        }
    }
    Ok(out)
}

/// Entries `k_{σσ'} = ∫_K φ_σ ∇_u f · ∇φ_σ'` as m×m blocks, row-major in (σ, σ').
fn advection_blocks<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
) -> Result<Vec<Jacobian<M>>, ResidualError> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let n = r.ndofs;
    let mut k = vec![Jacobian::<M>::zeros(); n * n];
    for q in &r.volume {
        let uq = interp(&q.phi, local);
        law.check_admissible(&uq)
            .map_err(|source| ResidualError::Inadmissible { element: e, source })?;
        let jac = jacobians(law, mesh.dim(), &uq);
        let grads = g.gradients(&q.dphi, n);
        let w = q.weight * g.measure;
        for s2 in 0..n {
            let a = jac[0] * grads[s2][0] + jac[1] * grads[s2][1];
            for s in 0..n {
                k[s * n + s2] += a * (w * q.phi[s]);
            }
        }
    }
    Ok(k)
}

/// `α = #K · max_{σ,σ'} ‖∫_K φ_σ ∇_u f · ∇φ_σ'‖`, spectral norm for systems.
pub fn rusanov_alpha<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
) -> Result<f64, ResidualError> {
    let k = advection_blocks(mesh, e, local, law)?;
    let max = k.iter().map(spectral_norm).fold(0.0, f64::max);
    Ok(mesh.reference().ndofs as f64 * max)
}

/// Galerkin split plus `α (u_σ − ū)`.
pub fn rusanov_residuals<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
    alpha: Option<f64>,
) -> Result<Vec<State<M>>, ResidualError> {
    let alpha = match alpha {
        Some(a) => a,
        None => rusanov_alpha(mesh, e, local, law)?,
    };
    let mut out = galerkin_residuals(mesh, e, local, law)?;
    let avg = mean(local);
    for (o, u) in out.iter_mut().zip(local) {
        *o += (u - avg) * alpha;
    }
    Ok(out)
}

/// Coefficients `c_{σσ'}` of a scalar linear law written as
/// `Φ_σ = Σ_σ' c_{σσ'} (u_σ − u_σ')`; the diagonal is left at zero.
pub fn rusanov_coefficients<L: ConservationLaw<1> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<1>],
    law: &L,
    alpha: f64,
) -> Result<Vec<Vec<f64>>, ResidualError> {
    let n = mesh.reference().ndofs;
    let k = advection_blocks(mesh, e, local, law)?;
    let mut c = vec![vec![0.0; n]; n];
    for s in 0..n {
        for s2 in 0..n {
            if s != s2 {
                c[s][s2] = alpha / n as f64 - k[s * n + s2][(0, 0)];
            }
        }
    }
    Ok(c)
}

/// Default `h_K τ_K = d|K| / Σ_j ρ(∇_u f(u)·n_j)`, times `tau_scale`, with the
/// sum taken at whichever of ū and the DOF states gives the largest value.
///
/// At ū alone the sum vanishes when the mean speed does, while the Jacobian
/// at the quadrature points does not.
pub fn supg_tau_h<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
    tau_scale: f64,
) -> f64 {
    let g = mesh.geometry(e);
    let avg = mean(local);
    let dim = mesh.dim();
    let speed = |u: &State<M>| -> f64 { (0..=dim).map(|j| law.spectral_radius(u, g.scaled_normals[j])).sum() };
    let denom = local.iter().map(speed).fold(speed(&avg), f64::max);
    // Subnormal speeds overflow the quotient; the term itself is negligible there.
    let th = tau_scale * dim as f64 * g.measure / denom;
    if denom > 0.0 && th.is_finite() {
        th
    } else {
        0.0
    }
}

/// `h τ ∫_K (∇_u f·∇φ_σ)(∇_u f·∇u_h)`.
pub fn supg_term<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    local: &[State<M>],
    law: &L,
    tau_h: f64,
) -> Result<Vec<State<M>>, ResidualError> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let n = r.ndofs;
    let mut out = vec![State::<M>::zeros(); n];
    for q in &r.volume {
        let uq = interp(&q.phi, local);
        law.check_admissible(&uq)
            .map_err(|source| ResidualError::Inadmissible { element: e, source })?;
        let jac = jacobians(law, mesh.dim(), &uq);
        let grads = g.gradients(&q.dphi, n);
        let du = grad(&grads, local);
        let res = (jac[0] * du[0] + jac[1] * du[1]) * (tau_h * q.weight * g.measure);
        for s in 0..n {
            out[s] += (jac[0] * grads[s][0] + jac[1] * grads[s][1]) * res;
        }
    }
    Ok(out)
}

/// Stabilization added to the Galerkin split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilization {
    /// Streamline upwind term with `h τ` scaled by the factor.
    Supg { tau_scale: f64 },
    /// Gradient jump penalty `θ h_e²` on each internal face.
    Jump { theta_e: f64 },
    /// Gradient jump penalty `Γ h_K²` on each internal face.
    ElementJump { gamma: f64 },
}

/// Gradient-jump penalty restricted to element `e`:
/// `c Σ_{internal faces} ∫_f [∇u_h]·∇φ_σ|_K`, with `c = θ h_e²` or `Γ h_K²`.
///
/// Summed over elements this is the usual face-based jump form, and it
/// vanishes when summed over the DOFs of `e`.
pub fn jump_term<const M: usize>(
    mesh: &Mesh,
    e: usize,
    u: &[State<M>],
    stabilization: Stabilization,
) -> Vec<State<M>> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let n = r.ndofs;
    let dim = mesh.dim();
    let local = gather(mesh, e, u);
    let mut out = vec![State::<M>::zeros(); n];
    for (j, pts) in r.faces.iter().enumerate() {
        let Some(link) = mesh.neighbor(e, j) else { continue };
        let coeff = match stabilization {
            Stabilization::Jump { theta_e } => theta_e * g.face_diameter(dim, j).powi(2),
            Stabilization::ElementJump { gamma } => gamma * g.diameter * g.diameter,
            Stabilization::Supg { .. } => return out,
        };
        let gn = mesh.geometry(link.element);
        let other = gather(mesh, link.element, u);
        let fm = g.face_measure(dim, j);
        for p in pts {
            let bary = if dim == 1 {
                let mut b = [0.0; 3];
                b[1 - link.face] = 1.0;
                b
            } else {
                let t = if link.flipped { 1.0 - p.t } else { p.t };
                let (a, b) = face_vertices(link.face);
                let mut l = [0.0; 3];
                l[a] = 1.0 - t;
                l[b] = t;
                l
            };
            let own = g.gradients(&p.dphi, n);
            let nb = gn.gradients(&basis_bary_derivatives(dim, mesh.degree(), bary), n);
            let du = grad(&own, &local);
            let dv = grad(&nb, &other);
            let jump = [du[0] - dv[0], du[1] - dv[1]];
            let w = coeff * fm * p.weight;
            for s in 0..n {
                out[s] += (jump[0] * own[s][0] + jump[1] * own[s][1]) * w;
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct StabilizedResiduals<const M: usize> {
    pub galerkin: Vec<State<M>>,
    pub stabilization: Vec<State<M>>,
    pub split: Vec<State<M>>,
    pub total: State<M>,
}

pub fn stabilized_residuals<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    u: &[State<M>],
    law: &L,
    stabilization: Stabilization,
) -> Result<StabilizedResiduals<M>, ResidualError> {
    let value = match stabilization {
        Stabilization::Supg { tau_scale } => ("tau_scale", tau_scale),
        Stabilization::Jump { theta_e } => ("theta_e", theta_e),
        Stabilization::ElementJump { gamma } => ("gamma_jump", gamma),
    };
    if !(value.1 > 0.0 && value.1.is_finite()) {
        return Err(ResidualError::InvalidParameter(format!("{} must be positive, got {}", value.0, value.1)));
    }
    let local = gather(mesh, e, u);
    let galerkin = galerkin_residuals(mesh, e, &local, law)?;
    let stab = match stabilization {
        Stabilization::Supg { tau_scale } => {
            let th = supg_tau_h(mesh, e, &local, law, tau_scale);
            supg_term(mesh, e, &local, law, th)?
        }
        _ => jump_term(mesh, e, u, stabilization),
    };
    let split = galerkin.iter().zip(&stab).map(|(a, b)| a + b).collect();
    let total = total_residual(mesh, e, &local, law)?;
    Ok(StabilizedResiduals { galerkin, stabilization: stab, split, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limited<const M: usize> {
    pub beta: Vec<State<M>>,
    pub residuals: Vec<State<M>>,
}

/// Componentwise β limiter: `β_σ = max(0, Φ_σ^L/Φ) / Σ max(0, Φ_σ'^L/Φ)`.
pub fn blend_limiter<const M: usize>(
    monotone: &[State<M>],
    total: &State<M>,
) -> Result<Limited<M>, ResidualError> {
    let n = monotone.len();
    if n == 0 {
        return Err(ResidualError::Internal("empty residual list".into()));
    }
    let mut beta = vec![State::<M>::zeros(); n];
    let mut residuals = vec![State::<M>::zeros(); n];
    for c in 0..M {
        let phi = total[c];
        let scale = monotone.iter().map(|r| r[c].abs()).fold(0.0, f64::max);
        let sum: f64 = monotone.iter().map(|r| r[c]).sum();
        let defect = (sum - phi).abs();
        if !(defect <= 1e-10 * (1.0 + scale.max(phi.abs()))) {
            return Err(ResidualError::ConservationDefect { defect });
        }
        if phi.abs() <= 1e-13 * (1.0 + scale) {
            for s in 0..n {
                beta[s][c] = 1.0 / n as f64;
                residuals[s][c] = phi / n as f64;
            }
            continue;
        }
        let pos: Vec<f64> = monotone.iter().map(|r| (r[c] / phi).max(0.0)).collect();
        let denom: f64 = pos.iter().sum();
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(ResidualError::Internal(format!(
                "β denominator {denom} for a nonzero total {phi}"
            )));
        }
        for s in 0..n {
            beta[s][c] = pos[s] / denom;
            residuals[s][c] = beta[s][c] * phi;
        }
    }
    Ok(Limited { beta, residuals })
}

/// Distributed residuals of element `e` for the chosen scheme.
pub fn element_residuals<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    u: &[State<M>],
    scheme: &DistributionScheme,
    law: &L,
) -> Result<ElementResiduals<M>, ResidualError> {
    let local = gather(mesh, e, u);
    let total = total_residual(mesh, e, &local, law)?;
    let mut split = match scheme.kind {
        SchemeKind::Galerkin | SchemeKind::Supg | SchemeKind::Jump => galerkin_residuals(mesh, e, &local, law)?,
        SchemeKind::Rusanov => rusanov_residuals(mesh, e, &local, law, scheme.alpha)?,
        SchemeKind::Limited | SchemeKind::LimitedSupg | SchemeKind::LimitedJump => {
            let mono = rusanov_residuals(mesh, e, &local, law, scheme.alpha)?;
            blend_limiter(&mono, &total)?.residuals
        }
    };
    let stab = match scheme.kind {
        SchemeKind::Supg | SchemeKind::LimitedSupg => {
            let th = supg_tau_h(mesh, e, &local, law, scheme.tau_scale);
            Some(supg_term(mesh, e, &local, law, th)?)
        }
        SchemeKind::Jump => Some(jump_term(mesh, e, u, Stabilization::Jump { theta_e: scheme.theta_e })),
        SchemeKind::LimitedJump => {
            Some(jump_term(mesh, e, u, Stabilization::ElementJump { gamma: scheme.gamma_jump }))
        }
        _ => None,
    };
    if let Some(stab) = stab {
        for (s, t) in split.iter_mut().zip(&stab) {
            *s += t;
        }
    }
    Ok(ElementResiduals { element: e, dofs: mesh.dofs().element(e).to_vec(), split, total })
}

/// Time-derivative pairing `∫_K w_σ δu_h` with `w_σ = φ_σ`, plus the
/// streamline test function `h τ ∇_u f·∇φ_σ` for SUPG schemes.
pub fn mass_residuals<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    e: usize,
    du: &[State<M>],
    local: &[State<M>],
    scheme: &DistributionScheme,
    law: &L,
) -> Result<Vec<State<M>>, ResidualError> {
    let r = mesh.reference();
    let g = mesh.geometry(e);
    let n = r.ndofs;
    let tau_h = if scheme.kind.uses_supg() {
        supg_tau_h(mesh, e, local, law, scheme.tau_scale)
    } else {
        0.0
    };
    let mut out = vec![State::<M>::zeros(); n];
    for q in &r.volume {
        let dq = interp(&q.phi, du) * (q.weight * g.measure);
        for s in 0..n {
            out[s] += dq * q.phi[s];
        }
        if tau_h > 0.0 {
            let uq = interp(&q.phi, local);
            law.check_admissible(&uq)
                .map_err(|source| ResidualError::Inadmissible { element: e, source })?;
            let jac = jacobians(law, mesh.dim(), &uq);
            let grads = g.gradients(&q.dphi, n);
            for s in 0..n {
                out[s] += (jac[0] * grads[s][0] + jac[1] * grads[s][1]) * dq * tau_h;
            }
        }
    }
    Ok(out)
}
