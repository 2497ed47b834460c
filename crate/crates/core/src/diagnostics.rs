//! Audits: conservation, Lipschitz bound, maximum principle, entropy
//! inequality, and convergence-order fits.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conslaw::{ConservationLaw, State};
use crate::mesh::Mesh;
use crate::residual::{element_residuals, DistributionScheme, ResidualError, ResidualSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("law has no entropy pair")]
    NoEntropy,
    #[error(transparent)]
    Residual(#[from] ResidualError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub name: String,
    /// Nonnegative.
    pub defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Element, face, DOF or step index of the largest defect.
    pub worst: Option<usize>,
    /// Number of entries exceeding the tolerance.
    pub violations: usize,
    /// Audit-specific estimate (e.g. the Lipschitz constant).
    pub estimate: Option<f64>,
}

impl AuditReport {
    pub fn new(name: &str, defect: f64, tolerance: f64, worst: Option<usize>, violations: usize) -> Self {
        Self {
            name: name.to_string(),
            defect,
            tolerance,
            passed: defect <= tolerance,
            worst,
            violations,
            estimate: None,
        }
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "audit={}\ndefect={:.16e}\ntolerance={:.16e}\npassed={}\nviolations={}\n",
            self.name, self.defect, self.tolerance, self.passed, self.violations
        );
        if let Some(w) = self.worst {
            s.push_str(&format!("worst={w}\n"));
        }
        if let Some(e) = self.estimate {
            s.push_str(&format!("estimate={e:.16e}\n"));
        }
        s
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: defect {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.defect,
            self.tolerance
        )
    }
}

fn max_abs<const M: usize>(v: &State<M>) -> f64 {
    v.amax()
}

/// Largest scaled split defect `|Σ_σ Φ_σ − Φ| / (1 + |Φ|)` over elements and
/// boundary faces. The worst index counts elements first, then faces.
pub fn conservation_audit<const M: usize>(set: &ResidualSet<M>, tolerance: f64) -> AuditReport {
    let mut worst = None;
    let mut defect: f64 = 0.0;
    let mut violations = 0;
    let entries = set
        .elements
        .iter()
        .map(|e| (&e.split, &e.total))
        .chain(set.faces.iter().map(|f| (&f.split, &f.total)));
    for (i, (split, total)) in entries.enumerate() {
        let mut s = State::<M>::zeros();
        for v in split {
            s += v;
        }
        let d = max_abs(&(s - total)) / (1.0 + max_abs(total));
        if d > tolerance {
            violations += 1;
        }
        if d > defect {
            defect = d;
            worst = Some(i);
        }
    }
    AuditReport::new("conservation", defect, tolerance, worst, violations)
}

/// Largest difference between `residual` and a re-summation of `set` in
/// assembly order (element order, then faces). Zero bitwise when consistent.
pub fn resummation_audit<const M: usize>(set: &ResidualSet<M>, residual: &[State<M>]) -> AuditReport {
    let again = set.assemble(residual.len());
    let mut defect: f64 = 0.0;
    let mut worst = None;
    for (d, (a, b)) in again.iter().zip(residual).enumerate() {
        let x = max_abs(&(a - b));
        if x > defect {
            defect = x;
            worst = Some(d);
        }
    }
    let violations = usize::from(defect > 0.0);
    AuditReport::new("resummation", defect, 0.0, worst, violations)
}

/// Uniform samples in `[−bound, bound]` per component.
pub fn uniform_sampler<const M: usize>(bound: f64) -> impl FnMut(&mut ChaCha8Rng) -> State<M> {
    move |rng| State::<M>::from_fn(|_, _| rng.gen_range(-bound..=bound))
}

/// Estimates `C` in `|Φ_σ| ≤ C Σ|u_σ − u_σ'|` on element `e` of `mesh`.
///
/// States are `base + t δ` with `base`, `δ` drawn by `sample` and
/// `t ∈ {1, 1e-2, 1e-4}`. The defect is the growth of the largest ratio from
/// the coarsest to the finest scale; a bounded constant keeps it near 1.
pub fn lipschitz_audit<const M: usize, L, S>(
    mesh: &Mesh,
    e: usize,
    scheme: &DistributionScheme,
    law: &L,
    mut sample: S,
    samples: usize,
    seed: u64,
) -> Result<AuditReport, DiagnosticsError>
where
    L: ConservationLaw<M> + ?Sized,
    S: FnMut(&mut ChaCha8Rng) -> State<M>,
{
    if e >= mesh.nelements() {
        return Err(DiagnosticsError::InvalidArgument(format!("element {e} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dofs = mesh.dofs().element(e).to_vec();
    let n = dofs.len();
    let scales = [1.0, 1e-2, 1e-4];
    let mut best = [0.0f64; 3];
    let mut u = vec![State::<M>::zeros(); mesh.ndofs()];
    for _ in 0..samples {
        let base: Vec<State<M>> = (0..n).map(|_| sample(&mut rng)).collect();
        let centre = base[0];
        for (si, &t) in scales.iter().enumerate() {
            for (k, &d) in dofs.iter().enumerate() {
                u[d] = centre + (base[k] - centre) * t;
            }
            let mut diff = 0.0;
            for a in 0..n {
                for b in 0..n {
                    diff += (u[dofs[a]] - u[dofs[b]]).amax();
                }
            }
            if diff == 0.0 {
                continue;
            }
            let r = element_residuals(mesh, e, &u, scheme, law)?;
            let m = r.split.iter().map(|v| v.amax()).fold(0.0, f64::max);
            best[si] = best[si].max(m / diff);
        }
    }
    let growth = if best[0] > 0.0 { best[2] / best[0] } else { 0.0 };
    let mut report = AuditReport::new("lipschitz", growth, 10.0, None, usize::from(growth > 10.0));
    report.estimate = Some(best.iter().copied().fold(0.0, f64::max));
    Ok(report)
}

/// `max_n (max uⁿ − max u⁰)₊ + (min u⁰ − min uⁿ)₊` over a scalar history.
pub fn maximum_principle_audit(history: &[Vec<f64>], tolerance: f64) -> AuditReport {
    let bounds = |u: &[f64]| u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let Some(first) = history.first() else {
        return AuditReport::new("maximum_principle", 0.0, tolerance, None, 0);
    };
    let (lo, hi) = bounds(first);
    let mut defect: f64 = 0.0;
    let mut worst = None;
    let mut violations = 0;
    for (n, u) in history.iter().enumerate().skip(1) {
        let (a, b) = bounds(u);
        let d = (b - hi).max(0.0) + (lo - a).max(0.0);
        if d > tolerance {
            violations += 1;
        }
        if d > defect {
            defect = d;
            worst = Some(n);
        }
    }
    AuditReport::new("maximum_principle", defect, tolerance, worst, violations)
}

/// `(∮_{∂K} g(u_h)·n − Σ_σ v(u_σ)·Φ_σ)₊` per element, scaled by `1 + |∮g·n|`.
pub fn entropy_inequality_audit<const M: usize, L: ConservationLaw<M> + ?Sized>(
    mesh: &Mesh,
    u: &[State<M>],
    set: &ResidualSet<M>,
    law: &L,
    tolerance: f64,
) -> Result<AuditReport, DiagnosticsError> {
    let pair = law.entropy().ok_or(DiagnosticsError::NoEntropy)?;
    let r = mesh.reference();
    let mut defect: f64 = 0.0;
    let mut worst = None;
    let mut violations = 0;
    for el in &set.elements {
        let e = el.element;
        let g = mesh.geometry(e);
        let dofs = mesh.dofs().element(e);
        let mut flux = 0.0;
        for (j, face) in r.faces.iter().enumerate() {
            let n = g.outward_normal(j);
            let len = g.face_measure(mesh.dim(), j);
            for p in face {
                let mut uq = State::<M>::zeros();
                for (k, &d) in dofs.iter().enumerate() {
                    uq += u[d] * p.phi[k];
                }
                let gq = pair.flux(&uq);
                flux += p.weight * len * (gq[0] * n[0] + gq[1] * n[1]);
            }
        }
        let produced: f64 = el.dofs.iter().zip(&el.split).map(|(&d, phi)| pair.variables(&u[d]).dot(phi)).sum();
        let d = (flux - produced).max(0.0) / (1.0 + flux.abs());
        if d > tolerance {
            violations += 1;
        }
        if d > defect {
            defect = d;
            worst = Some(e);
        }
    }
    Ok(AuditReport::new("entropy_inequality", defect, tolerance, worst, violations))
}

/// Least-squares slope of `log e` against `log h`.
pub fn convergence_order(errors: &[f64], h: &[f64]) -> Result<f64, DiagnosticsError> {
    if errors.len() != h.len() || errors.len() < 2 {
        return Err(DiagnosticsError::InvalidArgument("need two or more (h, error) pairs".into()));
    }
    if errors.iter().chain(h).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(DiagnosticsError::InvalidArgument("errors and mesh sizes must be positive".into()));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticsError::InvalidArgument("mesh sizes must differ".into()));
    }
    Ok(x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum::<f64>() / sxx)
}
