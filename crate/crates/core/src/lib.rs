//! Residual distribution schemes for hyperbolic conservation laws.

pub mod conslaw;
pub mod constraints;
pub mod diagnostics;
pub mod fv1d;
pub mod mesh;
pub mod recovery;
pub mod residual;
pub mod time;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
