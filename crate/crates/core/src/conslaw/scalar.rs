use nalgebra::{SMatrix, SVector};

use super::{ConservationLaw, EntropyPair, Flux, Jacobian, State};

pub fn burgers_flux(u: f64) -> f64 {
    0.5 * u * u
}

/// Square-entropy quantities for Burgers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersEntropy {
    pub entropy: f64,
    pub variable: f64,
    /// Tadmor potential `v f − g`.
    pub potential: f64,
    pub flux: f64,
}

pub fn entropy_pair_burgers(u: f64) -> BurgersEntropy {
    BurgersEntropy {
        entropy: 0.5 * u * u,
        variable: u,
        potential: u * u * u / 6.0,
        flux: u * u * u / 3.0,
    }
}

fn dot(a: [f64; 2], n: [f64; 2]) -> f64 {
    a[0] * n[0] + a[1] * n[1]
}

fn scalar_upwind<L: ConservationLaw<1>>(law: &L, u: &State<1>, ub: &State<1>, n: [f64; 2]) -> State<1> {
    if law.jacobian(u, n)[0] < 0.0 {
        law.normal_flux(ub, n)
    } else {
        law.normal_flux(u, n)
    }
}

/// Scalar square entropy `u²/2` paired with a flux `g(u) = dir · G(u)`.
struct SquareEntropy {
    direction: [f64; 2],
    g: fn(f64) -> f64,
}

impl EntropyPair<1> for SquareEntropy {
    fn entropy(&self, u: &State<1>) -> f64 {
        0.5 * u[0] * u[0]
    }

    fn variables(&self, u: &State<1>) -> State<1> {
        *u
    }

    fn flux(&self, u: &State<1>) -> [f64; 2] {
        let g = (self.g)(u[0]);
        [self.direction[0] * g, self.direction[1] * g]
    }
}

/// Linear advection `f(u) = a u`.
pub struct Advection {
    pub velocity: [f64; 2],
    entropy: SquareEntropy,
}

impl Advection {
    pub fn new(velocity: [f64; 2]) -> Self {
        Self { velocity, entropy: SquareEntropy { direction: velocity, g: |u| 0.5 * u * u } }
    }
}

impl ConservationLaw<1> for Advection {
    fn name(&self) -> String {
        format!("advection({}, {})", self.velocity[0], self.velocity[1])
    }

    fn flux(&self, u: &State<1>) -> Flux<1> {
        [SVector::from([self.velocity[0] * u[0]]), SVector::from([self.velocity[1] * u[0]])]
    }

    fn jacobian(&self, _u: &State<1>, n: [f64; 2]) -> Jacobian<1> {
        SMatrix::from([[dot(self.velocity, n)]])
    }

    fn spectral_radius(&self, _u: &State<1>, n: [f64; 2]) -> f64 {
        dot(self.velocity, n).abs()
    }

    fn upwind_flux(&self, u: &State<1>, ub: &State<1>, n: [f64; 2]) -> State<1> {
        scalar_upwind(self, u, ub, n)
    }

    fn entropy(&self) -> Option<&dyn EntropyPair<1>> {
        Some(&self.entropy)
    }
}

/// Burgers flux `dir · u²/2`.
pub struct Burgers {
    pub direction: [f64; 2],
    entropy: SquareEntropy,
}

impl Burgers {
    pub fn new(direction: [f64; 2]) -> Self {
        Self { direction, entropy: SquareEntropy { direction, g: |u| u * u * u / 3.0 } }
    }
}

impl Default for Burgers {
    fn default() -> Self {
        Self::new([1.0, 0.0])
    }
}

impl ConservationLaw<1> for Burgers {
    fn name(&self) -> String {
        "burgers".into()
    }

    fn flux(&self, u: &State<1>) -> Flux<1> {
        let f = burgers_flux(u[0]);
        [SVector::from([self.direction[0] * f]), SVector::from([self.direction[1] * f])]
    }

    fn jacobian(&self, u: &State<1>, n: [f64; 2]) -> Jacobian<1> {
        SMatrix::from([[u[0] * dot(self.direction, n)]])
    }

    fn spectral_radius(&self, u: &State<1>, n: [f64; 2]) -> f64 {
        (u[0] * dot(self.direction, n)).abs()
    }

    fn upwind_flux(&self, u: &State<1>, ub: &State<1>, n: [f64; 2]) -> State<1> {
        scalar_upwind(self, u, ub, n)
    }

    fn entropy(&self) -> Option<&dyn EntropyPair<1>> {
        Some(&self.entropy)
    }
}

/// The transported variable `v` with `u = v³` written in conservation form:
/// flux `dir · v⁴/4`.
pub struct Cubic {
    pub direction: [f64; 2],
    entropy: SquareEntropy,
}

impl Cubic {
    pub fn new(direction: [f64; 2]) -> Self {
        Self { direction, entropy: SquareEntropy { direction, g: |v| v.powi(5) / 5.0 } }
    }
}

impl Default for Cubic {
    fn default() -> Self {
        Self::new([1.0, 0.0])
    }
}

impl ConservationLaw<1> for Cubic {
    fn name(&self) -> String {
        "cubic".into()
    }

    fn flux(&self, u: &State<1>) -> Flux<1> {
        let f = 0.25 * u[0].powi(4);
        [SVector::from([self.direction[0] * f]), SVector::from([self.direction[1] * f])]
    }

    fn jacobian(&self, u: &State<1>, n: [f64; 2]) -> Jacobian<1> {
        SMatrix::from([[u[0].powi(3) * dot(self.direction, n)]])
    }

    fn spectral_radius(&self, u: &State<1>, n: [f64; 2]) -> f64 {
        (u[0].powi(3) * dot(self.direction, n)).abs()
    }

    fn upwind_flux(&self, u: &State<1>, ub: &State<1>, n: [f64; 2]) -> State<1> {
        scalar_upwind(self, u, ub, n)
    }

    fn entropy(&self) -> Option<&dyn EntropyPair<1>> {
        Some(&self.entropy)
    }
}
