//! Deferred-correction time stepping with a lumped mass pairing.

use thiserror::Error;

use crate::conslaw::{ConservationLaw, State};
use crate::mesh::Mesh;
use crate::residual::{assemble, gather, mass_residuals, BoundaryCondition, DistributionScheme, ResidualError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step failed at t = {t}: {source}")]
    StepFailure { t: f64, source: ResidualError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass {
    /// `Σ_{K∋σ} C_K`.
    pub dof: Vec<f64>,
    /// `C_K = |K|/#K`.
    pub element: Vec<f64>,
}

pub fn lumped_mass(mesh: &Mesh) -> LumpedMass {
    let n = mesh.dofs().local_count() as f64;
    let element: Vec<f64> = (0..mesh.nelements()).map(|e| mesh.geometry(e).measure / n).collect();
    let mut dof = vec![0.0; mesh.ndofs()];
    for (e, c) in element.iter().enumerate() {
        for &d in mesh.dofs().element(e) {
            dof[d] += c;
        }
    }
    LumpedMass { dof, element }
}

/// `θ_{lj} = (1/Δt) ∫_{t_n}^{t_{n,l}} ℓ_j` for `p` equispaced sub-intervals;
/// row `l` holds the weights of sub-node `l` (row 0 is zero).
pub fn subinterval_weights(p: usize) -> Vec<Vec<f64>> {
    let nodes: Vec<f64> = (0..=p).map(|i| i as f64 / p as f64).collect();
    let mut theta = vec![vec![0.0; p + 1]; p + 1];
    for j in 0..=p {
        // monomial coefficients of the Lagrange polynomial ℓ_j
        let mut c = vec![1.0];
        let mut denom = 1.0;
        for (m, &s) in nodes.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut next = vec![0.0; c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * s;
            }
            c = next;
            denom *= nodes[j] - s;
        }
        for l in 1..=p {
            let t = nodes[l];
            theta[l][j] = c.iter().enumerate().map(|(k, a)| a * t.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>()
                / denom;
        }
    }
    theta
}

/// Weighted average `Σ_l w_l F_l` of fluxes at the sub-nodes.
pub fn time_flux_average<const M: usize>(weights: &[f64], fluxes: &[State<M>]) -> Result<State<M>, TimeError> {
    if weights.len() != fluxes.len() || weights.is_empty() {
        return Err(TimeError::InvalidArgument("one weight per sub-node required".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(TimeError::InvalidArgument(format!("weights sum to {sum}, not 1")));
    }
    let mut out = State::<M>::zeros();
    for (w, f) in weights.iter().zip(fluxes) {
        out += f * *w;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecConfig {
    pub subintervals: usize,
    pub iterations: usize,
    pub cfl: f64,
}

impl DecConfig {
    /// One iteration per sub-time node (`subintervals + 1`), CFL 0.3.
    /// `new(1)` is the two-node Crank–Nicolson form with two iterations.
    pub fn new(subintervals: usize) -> Self {
        Self { subintervals, iterations: subintervals + 1, cfl: 0.3 }
    }

    pub fn validate(&self) -> Result<(), TimeError> {
        if self.subintervals == 0 {
            return Err(TimeError::InvalidArgument("at least one sub-interval".into()));
        }
        if self.iterations == 0 {
            return Err(TimeError::InvalidArgument("at least one iteration".into()));
        }
        if !(self.cfl > 0.0) {
            return Err(TimeError::InvalidArgument("cfl must be positive".into()));
        }
        Ok(())
    }
}

/// Largest characteristic speed over the DOF states.
pub fn max_wave_speed<const M: usize, L: ConservationLaw<M> + ?Sized>(mesh: &Mesh, u: &[State<M>], law: &L) -> f64 {
    u.iter()
        .map(|v| {
            let sx = law.spectral_radius(v, [1.0, 0.0]);
            if mesh.dim() == 2 {
                sx.hypot(law.spectral_radius(v, [0.0, 1.0]))
            } else {
                sx
            }
        })
        .fold(0.0, f64::max)
}

/// `cfl · min h_K / max speed` (infinite when nothing moves).
pub fn stable_dt<const M: usize, L: ConservationLaw<M> + ?Sized>(mesh: &Mesh, u: &[State<M>], law: &L, cfl: f64) -> f64 {
    let s = max_wave_speed(mesh, u, law);
    if s > 0.0 {
        cfl * mesh.min_diameter() / s
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflWarning {
    pub dt: f64,
    pub dt_max: f64,
}

#[derive(Debug, Clone)]
pub struct DecStep<const M: usize> {
    pub state: Vec<State<M>>,
    pub cfl_warning: Option<CflWarning>,
}

/// Everything a step needs besides the state.
pub struct DecSolver<'a, const M: usize, L: ?Sized, B: ?Sized> {
    pub mesh: &'a Mesh,
    pub law: &'a L,
    pub scheme: DistributionScheme,
    pub bc: &'a B,
    pub mass: LumpedMass,
    pub config: DecConfig,
}

impl<'a, const M: usize, L, B> DecSolver<'a, M, L, B>
where
    L: ConservationLaw<M> + ?Sized,
    B: BoundaryCondition<M> + ?Sized,
{
    pub fn new(
        mesh: &'a Mesh,
        law: &'a L,
        scheme: DistributionScheme,
        bc: &'a B,
        config: DecConfig,
    ) -> Result<Self, TimeError> {
        config.validate()?;
        scheme
            .validate()
            .map_err(|source| TimeError::StepFailure { t: 0.0, source })?;
        Ok(Self { mesh, law, scheme, bc, mass: lumped_mass(mesh), config })
    }

    fn residual(&self, u: &[State<M>], t: f64) -> Result<Vec<State<M>>, TimeError> {
        assemble(self.mesh, u, &self.scheme, self.law, self.bc, t)
            .map(|a| a.residual)
            .map_err(|source| TimeError::StepFailure { t, source })
    }

    /// One step from `t_n` to `t_n + dt`.
    pub fn step(&self, u_n: &[State<M>], t_n: f64, dt: f64) -> Result<DecStep<M>, TimeError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TimeError::InvalidArgument(format!("time step {dt}")));
        }
        let mesh = self.mesh;
        let p = self.config.subintervals;
        let theta = subinterval_weights(p);
        let times: Vec<f64> = (0..=p).map(|l| t_n + dt * l as f64 / p as f64).collect();
        let dt_max = stable_dt(mesh, u_n, self.law, self.config.cfl);
        let cfl_warning = (dt > dt_max * (1.0 + 1e-12)).then_some(CflWarning { dt, dt_max });

        let r0 = self.residual(u_n, t_n)?;
        let mut stages: Vec<Vec<State<M>>> = vec![u_n.to_vec(); p + 1];
        for _ in 0..self.config.iterations {
            let mut res = vec![r0.clone()];
            for l in 1..=p {
                res.push(self.residual(&stages[l], times[l])?);
            }
            let mut next = stages.clone();
            for l in 1..=p {
                let mut update = vec![State::<M>::zeros(); mesh.ndofs()];
                for e in 0..mesh.nelements() {
                    let local = gather(mesh, e, &stages[l]);
                    let du: Vec<State<M>> = local.iter().zip(gather(mesh, e, u_n)).map(|(a, b)| a - b).collect();
                    let m = mass_residuals(mesh, e, &du, &local, &self.scheme, self.law)
                        .map_err(|source| TimeError::StepFailure { t: times[l], source })?;
                    for (&d, v) in mesh.dofs().element(e).iter().zip(&m) {
                        update[d] += v;
                    }
                }
                for (d, upd) in update.iter_mut().enumerate() {
                    for (j, r) in res.iter().enumerate() {
                        *upd += r[d] * (dt * theta[l][j]);
                    }
                    next[l][d] = stages[l][d] - *upd / self.mass.dof[d];
                }
            }
            stages = next;
        }
        Ok(DecStep { state: stages.pop().expect("at least one stage"), cfl_warning })
    }

    /// Integrates to `t_end`, using `dt` or the CFL time step when `None`.
    /// `observer` sees every accepted step.
    pub fn integrate<F>(
        &self,
        u0: &[State<M>],
        t0: f64,
        t_end: f64,
        dt: Option<f64>,
        mut observer: F,
    ) -> Result<Vec<State<M>>, TimeError>
    where
        F: FnMut(&StepRecord<M>, &[State<M>]),
    {
        let mut u = u0.to_vec();
        let mut t = t0;
        let mut step = 0;
        while t < t_end - 1e-14 * t_end.abs().max(1.0) {
            let mut h = match dt {
                Some(h) => h,
                None => stable_dt(self.mesh, &u, self.law, self.config.cfl),
            };
            if !h.is_finite() {
                h = t_end - t;
            }
            h = h.min(t_end - t);
            let out = self.step(&u, t, h)?;
            u = out.state;
            t += h;
            step += 1;
            let mut mass = State::<M>::zeros();
            for (m, v) in self.mass.dof.iter().zip(&u) {
                mass += v * *m;
            }
            observer(&StepRecord { step, t, dt: h, mass, cfl_warning: out.cfl_warning }, &u);
        }
        Ok(u)
    }
}

#[derive(Debug, Clone)]
pub struct StepRecord<const M: usize> {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// `Σ_σ m_σ u_σ`.
    pub mass: State<M>,
    pub cfl_warning: Option<CflWarning>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;
    use crate::conslaw::{Advection, Burgers};
    use crate::mesh::Rect;
    use crate::residual::{SchemeKind, Transmissive};
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_triangle_mass() {
        let m = Mesh::from_parts(2, 1, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let lm = lumped_mass(&m);
        assert_abs_diff_eq!(lm.element[0], 1.0 / 6.0, epsilon = 1e-16);
        for v in lm.dof {
            assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-16);
        }
    }

    #[test]
    fn interior_vertex_mass_and_total() {
        let m = Mesh::structured(4, 4, Rect { x0: 0.0, x1: 2.0, y0: 0.0, y1: 1.5 }, 1).unwrap();
        let lm = lumped_mass(&m);
        let centre = m.dofs().coords().iter().position(|x| x == &[1.0, 0.75]).unwrap();
        assert_abs_diff_eq!(lm.dof[centre], 6.0 * lm.element[0], epsilon = 1e-15);
        assert_abs_diff_eq!(lm.dof.iter().sum::<f64>(), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn weights() {
        let w1 = subinterval_weights(1);
        assert_eq!(w1[1], vec![0.5, 0.5]);
        let w2 = subinterval_weights(2);
        let expect1 = [5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0];
        let expect2 = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for j in 0..3 {
            assert_abs_diff_eq!(w2[1][j], expect1[j], epsilon = 1e-15);
            assert_abs_diff_eq!(w2[2][j], expect2[j], epsilon = 1e-15);
        }
    }

    #[test]
    fn flux_averages() {
        let f = [State::<1>::new(1.0), State::<1>::new(3.0)];
        assert_eq!(time_flux_average(&[0.5, 0.5], &f).unwrap()[0], 2.0);
        assert_eq!(time_flux_average(&[1.0, 0.0], &f).unwrap()[0], 1.0);
        let same = [State::<1>::new(0.4); 3];
        assert_abs_diff_eq!(time_flux_average(&[0.2, 0.3, 0.5], &same).unwrap()[0], 0.4, epsilon = 1e-16);
        assert!(time_flux_average(&[0.5, 0.6], &f).is_err());
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let m = Mesh::structured(3, 3, Rect::unit(), 2).unwrap();
        let law = Advection::new([1.0, 1.0]);
        let u = vec![State::<1>::new(1.5); m.ndofs()];
        let bc = crate::residual::Dirichlet(State::<1>::new(1.5));
        let solver = DecSolver::new(&m, &law, DistributionScheme::new(SchemeKind::Supg), &bc, DecConfig::new(2)).unwrap();
        let out = solver.step(&u, 0.0, 0.01).unwrap();
        assert_eq!(out.state, u);
    }

    #[test]
    fn one_iteration_is_forward_euler() {
        let m = Mesh::interval(20, 0.0, 1.0, 1, true).unwrap();
        let law = Burgers::default();
        let u: Vec<State<1>> = m.dofs().coords().iter().map(|x| State::<1>::new(1.0 + 0.5 * (6.0 * x[0]).sin())).collect();
        let scheme = DistributionScheme::new(SchemeKind::Rusanov);
        let cfg = DecConfig { subintervals: 1, iterations: 1, cfl: 0.3 };
        let solver = DecSolver::new(&m, &law, scheme, &Transmissive, cfg).unwrap();
        let dt = 0.01;
        let out = solver.step(&u, 0.0, dt).unwrap();
        let r = assemble(&m, &u, &scheme, &law, &Transmissive, 0.0).unwrap().residual;
        let lm = lumped_mass(&m);
        for d in 0..m.ndofs() {
            let euler = u[d][0] - dt * r[d][0] / lm.dof[d];
            assert_abs_diff_eq!(out.state[d][0], euler, epsilon = 1e-14);
        }
    }

    #[test]
    fn periodic_mass_is_conserved() {
        let m = Mesh::interval(40, 0.0, 1.0, 1, true).unwrap();
        let law = Burgers::default();
        let u0: Vec<State<1>> = m.dofs().coords().iter().map(|x| State::<1>::new(1.0 + (TAU * x[0]).sin())).collect();
        let solver = DecSolver::new(&m, &law, DistributionScheme::new(SchemeKind::Rusanov), &Transmissive, DecConfig::new(1)).unwrap();
        let mut masses = Vec::new();
        solver.integrate(&u0, 0.0, 0.2, None, |rec, _| masses.push(rec.mass[0])).unwrap();
        for w in masses.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-11);
        }
    }

    #[test]
    fn cfl_violation_is_reported_not_fatal() {
        let m = Mesh::interval(10, 0.0, 1.0, 1, true).unwrap();
        let law = Advection::new([1.0, 0.0]);
        let u = vec![State::<1>::new(1.0); m.ndofs()];
        let solver = DecSolver::new(&m, &law, DistributionScheme::new(SchemeKind::Rusanov), &Transmissive, DecConfig::new(1)).unwrap();
        let out = solver.step(&u, 0.0, 1.0).unwrap();
        assert!(out.cfl_warning.is_some());
    }
}
