use nalgebra::{Matrix4, Vector4};

use super::{ConservationLaw, EntropyPair, Flux, Jacobian, LawError, State, ADMISSIBILITY_TOL};

/// Primitive view of a perfect-gas state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub density: f64,
    pub velocity: [f64; 2],
    pub pressure: f64,
}

impl EulerState {
    pub fn new(density: f64, velocity: [f64; 2], pressure: f64) -> Self {
        Self { density, velocity, pressure }
    }

    pub fn check(&self) -> Result<(), LawError> {
        if !(self.density >= ADMISSIBILITY_TOL) {
            return Err(LawError::Inadmissible(format!("density {}", self.density)));
        }
        if !(self.pressure >= ADMISSIBILITY_TOL) {
            return Err(LawError::Inadmissible(format!("pressure {}", self.pressure)));
        }
        if !(self.velocity[0].is_finite() && self.velocity[1].is_finite()) {
            return Err(LawError::Inadmissible("non-finite velocity".into()));
        }
        Ok(())
    }

    /// Conserved variables `(ρ, ρv, E)` to primitive `(ρ, v, p)`.
    pub fn from_conserved(w: &State<4>, gamma: f64) -> Result<Self, LawError> {
        let rho = w[0];
        if !(rho >= ADMISSIBILITY_TOL) {
            return Err(LawError::Inadmissible(format!("density {rho}")));
        }
        let v = [w[1] / rho, w[2] / rho];
        let p = (gamma - 1.0) * (w[3] - 0.5 * rho * (v[0] * v[0] + v[1] * v[1]));
        let s = Self::new(rho, v, p);
        s.check()?;
        Ok(s)
    }

    pub fn conserved(&self, gamma: f64) -> State<4> {
        let r = self.density;
        Vector4::new(r, r * self.velocity[0], r * self.velocity[1], self.total_energy(gamma))
    }

    pub fn speed_squared(&self) -> f64 {
        self.velocity[0] * self.velocity[0] + self.velocity[1] * self.velocity[1]
    }

    /// Internal energy per unit volume, `p/(γ−1)`.
    pub fn internal_energy(&self, gamma: f64) -> f64 {
        self.pressure / (gamma - 1.0)
    }

    pub fn total_energy(&self, gamma: f64) -> f64 {
        self.internal_energy(gamma) + 0.5 * self.density * self.speed_squared()
    }

    pub fn enthalpy(&self, gamma: f64) -> f64 {
        (self.total_energy(gamma) + self.pressure) / self.density
    }

    pub fn sound_speed(&self, gamma: f64) -> Result<f64, LawError> {
        self.check()?;
        Ok((gamma * self.pressure / self.density).sqrt())
    }
}

pub fn sound_speed(state: &EulerState, gamma: f64) -> Result<f64, LawError> {
    state.sound_speed(gamma)
}

fn flux_unchecked(w: &State<4>, gamma: f64) -> Flux<4> {
    let rho = w[0];
    let (vx, vy) = (w[1] / rho, w[2] / rho);
    let p = (gamma - 1.0) * (w[3] - 0.5 * (w[1] * vx + w[2] * vy));
    let h = w[3] + p;
    [
        Vector4::new(w[1], w[1] * vx + p, w[2] * vx, h * vx),
        Vector4::new(w[2], w[1] * vy, w[2] * vy + p, h * vy),
    ]
}

/// Euler flux of a conserved state.
pub fn euler_flux(w: &State<4>, gamma: f64) -> Result<Flux<4>, LawError> {
    EulerState::from_conserved(w, gamma)?;
    Ok(flux_unchecked(w, gamma))
}

/// Perfect-gas Euler equations in two space dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Euler {
    pub gamma: f64,
}

impl Default for Euler {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl Euler {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    fn primitive(&self, w: &State<4>) -> EulerState {
        let rho = w[0];
        let v = [w[1] / rho, w[2] / rho];
        let p = (self.gamma - 1.0) * (w[3] - 0.5 * rho * (v[0] * v[0] + v[1] * v[1]));
        EulerState::new(rho, v, p)
    }

    /// Right eigenvectors and eigenvalues of the Jacobian along the unit normal `n`.
    fn eigensystem(&self, w: &State<4>, n: [f64; 2]) -> (Matrix4<f64>, [f64; 4]) {
        let s = self.primitive(w);
        let c = (self.gamma * s.pressure / s.density).sqrt();
        let h = s.enthalpy(self.gamma);
        let [vx, vy] = s.velocity;
        let un = vx * n[0] + vy * n[1];
        let ut = -vx * n[1] + vy * n[0];
        let r = Matrix4::new(
            1.0,
            1.0,
            0.0,
            1.0,
            vx - c * n[0],
            vx,
            -n[1],
            vx + c * n[0],
            vy - c * n[1],
            vy,
            n[0],
            vy + c * n[1],
            h - c * un,
            0.5 * s.speed_squared(),
            ut,
            h + c * un,
        );
        (r, [un - c, un, un, un + c])
    }
}

impl ConservationLaw<4> for Euler {
    fn name(&self) -> String {
        format!("euler({})", self.gamma)
    }

    fn check_admissible(&self, u: &State<4>) -> Result<(), LawError> {
        EulerState::from_conserved(u, self.gamma).map(|_| ())
    }

    fn flux(&self, u: &State<4>) -> Flux<4> {
        flux_unchecked(u, self.gamma)
    }

    fn jacobian(&self, w: &State<4>, n: [f64; 2]) -> Jacobian<4> {
        let s = self.primitive(w);
        let k = self.gamma - 1.0;
        let [vx, vy] = s.velocity;
        let un = vx * n[0] + vy * n[1];
        let q2 = 0.5 * s.speed_squared();
        let h = s.enthalpy(self.gamma);
        Matrix4::new(
            0.0,
            n[0],
            n[1],
            0.0,
            k * q2 * n[0] - vx * un,
            un + vx * n[0] - k * vx * n[0],
            vx * n[1] - k * vy * n[0],
            k * n[0],
            k * q2 * n[1] - vy * un,
            vy * n[0] - k * vx * n[1],
            un + vy * n[1] - k * vy * n[1],
            k * n[1],
            un * (k * q2 - h),
            h * n[0] - k * vx * un,
            h * n[1] - k * vy * un,
            self.gamma * un,
        )
    }

    fn spectral_radius(&self, w: &State<4>, n: [f64; 2]) -> f64 {
        let s = self.primitive(w);
        let c = (self.gamma * s.pressure / s.density).sqrt();
        (s.velocity[0] * n[0] + s.velocity[1] * n[1]).abs() + c * n[0].hypot(n[1])
    }

    fn upwind_flux(&self, u: &State<4>, ub: &State<4>, n: [f64; 2]) -> State<4> {
        let len = n[0].hypot(n[1]);
        let unit = [n[0] / len, n[1] / len];
        let (r, lambda) = self.eigensystem(u, unit);
        let l = r.try_inverse().expect("Euler eigenvectors are independent for c > 0");
        let coeff = l * (ub - u);
        let mut correction = Vector4::zeros();
        for k in 0..4 {
            if lambda[k] < 0.0 {
                correction += r.column(k) * (lambda[k] * coeff[k]);
            }
        }
        self.normal_flux(u, n) + correction * len
    }

    fn entropy(&self) -> Option<&dyn EntropyPair<4>> {
        Some(self)
    }
}

/// Mathematical entropy `U = −ρ s/(γ−1)` with `s = ln p − γ ln ρ`.
impl EntropyPair<4> for Euler {
    fn entropy(&self, w: &State<4>) -> f64 {
        let s = self.primitive(w);
        let phys = s.pressure.ln() - self.gamma * s.density.ln();
        -s.density * phys / (self.gamma - 1.0)
    }

    fn variables(&self, w: &State<4>) -> State<4> {
        let s = self.primitive(w);
        let k = self.gamma - 1.0;
        let phys = s.pressure.ln() - self.gamma * s.density.ln();
        let b = s.density / s.pressure;
        Vector4::new(
            (self.gamma - phys) / k - 0.5 * b * s.speed_squared(),
            b * s.velocity[0],
            b * s.velocity[1],
            -b,
        )
    }

    fn flux(&self, w: &State<4>) -> [f64; 2] {
        let e = EntropyPair::entropy(self, w);
        [e * w[1] / w[0], e * w[2] / w[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rest_state_flux() {
        let w = EulerState::new(1.0, [0.0, 0.0], 1.0).conserved(1.4);
        assert_relative_eq!(w[3], 2.5);
        let f = euler_flux(&w, 1.4).unwrap();
        assert_eq!(f[0], Vector4::new(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn flux_rows_by_substitution() {
        let s = EulerState::new(1.3, [0.4, -0.2], 0.9);
        let g = 1.4;
        let f = euler_flux(&s.conserved(g), g).unwrap();
        assert_relative_eq!(f[0][1], 1.3 * 0.16 + 0.9, max_relative = 1e-14);
        assert_relative_eq!(f[1][2], 1.3 * 0.04 + 0.9, max_relative = 1e-14);
        let e = 0.9 / 0.4 + 0.5 * 1.3 * 0.2;
        assert_relative_eq!(f[0][3], 0.4 * (e + 0.9), max_relative = 1e-14);
    }

    #[test]
    fn conserved_to_primitive() {
        let s = EulerState::from_conserved(&Vector4::new(1.0, 0.0, 0.0, 2.5), 1.4).unwrap();
        assert_eq!(s.density, 1.0);
        assert_eq!(s.velocity, [0.0, 0.0]);
        assert_relative_eq!(s.pressure, 1.0, max_relative = 1e-15);
        assert!(EulerState::from_conserved(&Vector4::new(0.0, 0.0, 0.0, 1.0), 1.4).is_err());
        assert!(EulerState::from_conserved(&Vector4::new(1.0, 3.0, 0.0, 1.0), 1.4).is_err());
    }

    #[test]
    fn sound_speeds() {
        let a = sound_speed(&EulerState::new(1.0, [0.0, 0.0], 1.0), 1.4).unwrap();
        assert_relative_eq!(a, 1.183215956619923, max_relative = 1e-14);
        let b = sound_speed(&EulerState::new(1.4, [0.0, 0.0], 1.0), 1.4).unwrap();
        assert_relative_eq!(b, 1.0, max_relative = 1e-15);
        assert!(sound_speed(&EulerState::new(1.0, [0.0, 0.0], -1.0), 1.4).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let law = Euler::default();
        let w = EulerState::new(0.8, [0.3, -0.6], 1.7).conserved(1.4);
        let n = [0.6, -1.1];
        let a = law.jacobian(&w, n);
        let h = 1e-6;
        for j in 0..4 {
            let mut wp = w;
            let mut wm = w;
            wp[j] += h;
            wm[j] -= h;
            let d = (law.normal_flux(&wp, n) - law.normal_flux(&wm, n)) / (2.0 * h);
            for i in 0..4 {
                assert!((a[(i, j)] - d[i]).abs() < 1e-7, "({i},{j}) {} vs {}", a[(i, j)], d[i]);
            }
        }
    }

    #[test]
    fn eigensystem_diagonalizes() {
        let law = Euler::default();
        let w = EulerState::new(1.1, [0.5, 0.2], 0.7).conserved(1.4);
        let n = [0.8, 0.6];
        let (r, lambda) = law.eigensystem(&w, n);
        let a = law.jacobian(&w, n);
        for k in 0..4 {
            let lhs = a * r.column(k);
            let rhs = r.column(k) * lambda[k];
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn upwind_is_consistent_and_one_sided() {
        let law = Euler::default();
        let w = EulerState::new(1.0, [0.2, 0.0], 1.0).conserved(1.4);
        let n = [1.0, 0.0];
        assert!((law.upwind_flux(&w, &w, n) - law.normal_flux(&w, n)).norm() < 1e-14);
        // supersonic outflow ignores the exterior state
        let fast = EulerState::new(1.0, [3.0, 0.0], 1.0).conserved(1.4);
        let other = EulerState::new(0.2, [0.0, 1.0], 0.3).conserved(1.4);
        assert!((law.upwind_flux(&fast, &other, n) - law.normal_flux(&fast, n)).norm() < 1e-13);
    }
}
