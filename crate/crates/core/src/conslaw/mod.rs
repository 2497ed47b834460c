//! Conservation laws: fluxes, Jacobians, upwind boundary fluxes and entropy pairs.

mod euler;
mod scalar;

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

pub use euler::{euler_flux, sound_speed, Euler, EulerState};
pub use scalar::{burgers_flux, entropy_pair_burgers, Advection, Burgers, BurgersEntropy, Cubic};

pub type State<const M: usize> = SVector<f64, M>;
pub type Jacobian<const M: usize> = SMatrix<f64, M, M>;
/// Flux tensor, one m-vector per space direction.
pub type Flux<const M: usize> = [State<M>; 2];

/// Densities and pressures below this are inadmissible.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("degenerate jump: left and right states coincide (characteristic speed {speed})")]
    DegenerateJump { speed: f64 },
    #[error("unknown conservation law `{0}`")]
    UnknownLaw(String),
}

pub trait ConservationLaw<const M: usize>: Send + Sync {
    fn name(&self) -> String;

    fn check_admissible(&self, _u: &State<M>) -> Result<(), LawError> {
        Ok(())
    }

    fn flux(&self, u: &State<M>) -> Flux<M>;

    fn normal_flux(&self, u: &State<M>, n: [f64; 2]) -> State<M> {
        let f = self.flux(u);
        f[0] * n[0] + f[1] * n[1]
    }

    /// `∇_u f · n`.
    fn jacobian(&self, u: &State<M>, n: [f64; 2]) -> Jacobian<M>;

    /// Largest eigenvalue modulus of `∇_u f · n`.
    fn spectral_radius(&self, u: &State<M>, n: [f64; 2]) -> f64;

    /// Upwind normal flux across a boundary with interior state `u` and exterior `ub`.
    fn upwind_flux(&self, u: &State<M>, ub: &State<M>, n: [f64; 2]) -> State<M>;

    fn entropy(&self) -> Option<&dyn EntropyPair<M>> {
        None
    }
}

/// Convex entropy `E`, entropy flux `g` and entropy variables `v = ∇_u E`.
pub trait EntropyPair<const M: usize>: Send + Sync {
    fn entropy(&self, u: &State<M>) -> f64;
    fn variables(&self, u: &State<M>) -> State<M>;
    fn flux(&self, u: &State<M>) -> [f64; 2];

    /// Tadmor potential `θ = v·f − g`.
    fn potential(&self, u: &State<M>, f: &Flux<M>) -> [f64; 2] {
        let v = self.variables(u);
        let g = self.flux(u);
        [v.dot(&f[0]) - g[0], v.dot(&f[1]) - g[1]]
    }
}

/// Rankine-Hugoniot speed along x for a scalar law. Coinciding states are
/// reported as [`LawError::DegenerateJump`] carrying the characteristic speed.
pub fn rh_shock_speed<L: ConservationLaw<1> + ?Sized>(ul: f64, ur: f64, law: &L) -> Result<f64, LawError> {
    let n = [1.0, 0.0];
    let (a, b) = (State::<1>::new(ul), State::<1>::new(ur));
    if (ur - ul).abs() <= 1e-14 * (1.0 + ul.abs().max(ur.abs())) {
        return Err(LawError::DegenerateJump { speed: law.jacobian(&a, n)[0] });
    }
    Ok((law.normal_flux(&b, n)[0] - law.normal_flux(&a, n)[0]) / (ur - ul))
}

/// Law selection by name: `burgers`, `cubic`, `advection(a)`, `advection(ax, ay)`, `euler(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawSpec {
    Burgers,
    Cubic,
    Advection([f64; 2]),
    Euler(f64),
}

impl LawSpec {
    pub fn components(&self) -> usize {
        match self {
            LawSpec::Euler(_) => 4,
            _ => 1,
        }
    }
}

impl FromStr for LawSpec {
    type Err = LawError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || LawError::UnknownLaw(s.to_string());
        let (head, args) = match s.find('(') {
            Some(i) => {
                let rest = s[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = rest
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?;
                (s[..i].trim(), args)
            }
            None => (s, Vec::new()),
        };
        match (head, args.as_slice()) {
            ("burgers", []) => Ok(LawSpec::Burgers),
            ("cubic", []) => Ok(LawSpec::Cubic),
            ("advection", []) => Ok(LawSpec::Advection([1.0, 0.0])),
            ("advection", [a]) => Ok(LawSpec::Advection([*a, 0.0])),
            ("advection", [a, b]) => Ok(LawSpec::Advection([*a, *b])),
            ("euler", []) => Ok(LawSpec::Euler(1.4)),
            ("euler", [g]) if *g > 1.0 => Ok(LawSpec::Euler(*g)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawSpec::Burgers => write!(f, "burgers"),
            LawSpec::Cubic => write!(f, "cubic"),
            LawSpec::Advection(a) => write!(f, "advection({}, {})", a[0], a[1]),
            LawSpec::Euler(g) => write!(f, "euler({g})"),
        }
    }
}
