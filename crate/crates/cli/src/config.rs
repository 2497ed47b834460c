use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Residual distribution with deferred-correction time stepping.
    Rd,
    /// Upwind finite-volume Burgers lab.
    Burgers1d,
    /// Corrected primitive-variable Euler on a 1D grid.
    EulerPrimitive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub law: LawSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub corrections: CorrectionSection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawSection {
    /// `burgers`, `cubic`, `advection(a[, b])` or `euler(gamma)`.
    pub name: String,
}

impl Default for LawSection {
    fn default() -> Self {
        Self { name: "burgers".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Structured,
    Interval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub periodic: bool,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { kind: MeshKind::Structured, nx: 16, ny: 16, degree: 1, periodic: false, x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Constant,
    Sine,
    Bump,
    Riemann,
    Cosine,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub profile: Profile,
    /// Scalar base value, or primitive state `(ρ, u[, v], p)` for Euler.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub split: f64,
    pub amplitude: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { profile: Profile::Bump, left: vec![1.0], right: vec![0.0], split: 0.5, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// Residual family for `rd`, `cons`/`noncons` for `burgers1d`.
    pub kind: String,
    pub tau_scale: f64,
    pub theta_e: f64,
    pub gamma_jump: f64,
    pub alpha: Option<f64>,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self { kind: "rusanov".into(), tau_scale: 1.0, theta_e: 0.01, gamma_jump: 0.1, alpha: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub cfl: f64,
    /// Sub-time nodes per step including both ends.
    pub subnodes: usize,
    pub dec_iterations: Option<usize>,
    /// Snapshot every this many steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_end: 0.1, dt: None, cfl: 0.3, subnodes: 2, dec_iterations: None, snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionSection {
    pub correct_conservation: bool,
    pub correct_entropy: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub conservation_tol: f64,
    /// Maximum-principle audit of scalar runs, skipped when unset.
    pub max_principle_tol: Option<f64>,
    /// Entropy-inequality audit of the final state, skipped when unset.
    pub entropy_tol: Option<f64>,
    /// Balance defects of the corrected Euler scheme.
    pub defect_tol: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self { conservation_tol: 1e-12, max_principle_tol: None, entropy_tol: None, defect_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Config with every default filled in, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse("[problem]\nkind = \"rd\"\n").unwrap();
        assert_eq!(c.problem.seed, 0);
        assert_eq!(c.scheme.kind, "rusanov");
        assert_eq!(c.time.subnodes, 2);
        let again = RunConfig::parse(&c.echo()).unwrap();
        assert_eq!(again.echo(), c.echo());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[problem]\nkind = \"rd\"\nspeed = 3\n").is_err());
        assert!(RunConfig::parse("[problem]\nkind = \"rd\"\n[mesh]\nnz = 3\n").is_err());
        assert!(RunConfig::parse("[problem]\nkind = \"lbm\"\n").is_err());
    }
}
