//! First-order upwind Burgers schemes on a uniform 1D grid: conservative and
//! non-conservative updates, total variation, cell entropy fluxes and shock
//! tracking.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Fv1dError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no discontinuity detected")]
    NoDiscontinuity,
    #[error("unknown scheme `{0}` (expected cons or noncons)")]
    UnknownScheme(String),
}

/// Uniform nodes `x_j = x0 + j Δx`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub x0: f64,
    pub dx: f64,
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(n: usize, x0: f64, x1: f64, periodic: bool) -> Result<Self, Fv1dError> {
        if n < 2 || !(x1 > x0) {
            return Err(Fv1dError::InvalidArgument(format!("grid of {n} cells on [{x0}, {x1}]")));
        }
        Ok(Self { n, x0, dx: (x1 - x0) / n as f64, periodic })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Upwind neighbour value; the left end copies itself unless periodic.
    fn left(&self, u: &[f64], j: usize) -> f64 {
        if j > 0 {
            u[j - 1]
        } else if self.periodic {
            u[self.n - 1]
        } else {
            u[0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FvScheme {
    Conservative,
    NonConservative,
}

impl FvScheme {
    pub fn name(self) -> &'static str {
        match self {
            FvScheme::Conservative => "cons",
            FvScheme::NonConservative => "noncons",
        }
    }

    pub fn step(self, grid: &Grid1D, u: &[f64], lambda: f64) -> Vec<f64> {
        match self {
            FvScheme::Conservative => step_conservative(grid, u, lambda),
            FvScheme::NonConservative => step_nonconservative(grid, u, lambda),
        }
    }
}

impl FromStr for FvScheme {
    type Err = Fv1dError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cons" | "conservative" => Ok(FvScheme::Conservative),
            "noncons" | "nonconservative" => Ok(FvScheme::NonConservative),
            other => Err(Fv1dError::UnknownScheme(other.to_string())),
        }
    }
}

impl fmt::Display for FvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `u_j − λ u_j (u_j − u_{j−1})`.
pub fn step_nonconservative(grid: &Grid1D, u: &[f64], lambda: f64) -> Vec<f64> {
    (0..grid.n).map(|j| u[j] - lambda * u[j] * (u[j] - grid.left(u, j))).collect()
}

/// `u_j − λ (f(u_j) − f(u_{j−1}))` with `f(u) = u²/2`.
pub fn step_conservative(grid: &Grid1D, u: &[f64], lambda: f64) -> Vec<f64> {
    (0..grid.n)
        .map(|j| {
            let l = grid.left(u, j);
            u[j] - lambda * 0.5 * (u[j] * u[j] - l * l)
        })
        .collect()
}

/// `λ max|u|`; values above 1 break the positivity argument.
pub fn cfl_number(u: &[f64], lambda: f64) -> f64 {
    lambda * u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn total_variation(u: &[f64], periodic: bool) -> f64 {
    let mut tv: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if periodic && u.len() > 1 {
        tv += (u[0] - u[u.len() - 1]).abs();
    }
    tv
}

/// Entropy flux `v̄ f(u_l) − θ̄` for the square entropy, `θ(u) = u³/6`.
pub fn tadmor_cell_entropy(ul: f64, ur: f64) -> f64 {
    let theta = |u: f64| u * u * u / 6.0;
    0.5 * (ul + ur) * 0.5 * ul * ul - 0.5 * (theta(ul) + theta(ur))
}

/// `E_i^{n+1} − E_i^n + λ(ĝ_{i+1/2} − ĝ_{i−1/2})` per cell, for the
/// conservative scheme on a periodic grid.
pub fn cell_entropy_production(grid: &Grid1D, u: &[f64], u_next: &[f64], lambda: f64) -> Vec<f64> {
    let n = grid.n;
    let right = |j: usize| if j + 1 < n { u[j + 1] } else if grid.periodic { u[0] } else { u[j] };
    let flux: Vec<f64> = (0..n).map(|j| tadmor_cell_entropy(u[j], right(j))).collect();
    (0..n)
        .map(|j| {
            let left = if j > 0 {
                flux[j - 1]
            } else if grid.periodic {
                flux[n - 1]
            } else {
                tadmor_cell_entropy(u[0], u[0])
            };
            0.5 * u_next[j] * u_next[j] - 0.5 * u[j] * u[j] + lambda * (flux[j] - left)
        })
        .collect()
}

/// Mid-level crossing of the first 3-cell jump exceeding half the range.
pub fn locate_shock(x: &[f64], u: &[f64]) -> Result<f64, Fv1dError> {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if !(range > 0.0) || u.len() < 4 {
        return Err(Fv1dError::NoDiscontinuity);
    }
    let level = 0.5 * (hi + lo);
    let j = (0..u.len() - 3)
        .find(|&j| (u[j + 3] - u[j]).abs() > 0.5 * range)
        .ok_or(Fv1dError::NoDiscontinuity)?;
    for k in j..j + 3 {
        let (a, b) = (u[k] - level, u[k + 1] - level);
        if a == 0.0 {
            return Ok(x[k]);
        }
        if a * b < 0.0 || b == 0.0 {
            return Ok(x[k] + a / (a - b) * (x[k + 1] - x[k]));
        }
    }
    Err(Fv1dError::NoDiscontinuity)
}

/// Least-squares slope of shock position against time.
pub fn measure_shock_speed(x: &[f64], snapshots: &[(f64, Vec<f64>)]) -> Result<f64, Fv1dError> {
    if snapshots.len() < 2 {
        return Err(Fv1dError::InvalidArgument("at least two snapshots".into()));
    }
    let pts = snapshots
        .iter()
        .map(|(t, u)| locate_shock(x, u).map(|p| (*t, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let pm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Fv1dError::InvalidArgument("snapshots at a single time".into()));
    }
    Ok(pts.iter().map(|p| (p.0 - tm) * (p.1 - pm)).sum::<f64>() / stt)
}

#[derive(Debug, Clone)]
pub struct FvRun {
    /// `(t, u)` every `every` steps, plus the final state.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub steps: usize,
    pub max_cfl: f64,
    /// Steps taken with `λ max|u| > 1`.
    pub cfl_warnings: usize,
}

impl FvRun {
    pub fn last(&self) -> &[f64] {
        &self.snapshots.last().expect("runs keep the initial snapshot").1
    }
}

/// Runs with `λ = cfl / max|u₀|` until `t_end` (last step shortened).
pub fn run(
    grid: &Grid1D,
    scheme: FvScheme,
    u0: &[f64],
    t_end: f64,
    cfl: f64,
    every: usize,
) -> Result<FvRun, Fv1dError> {
    if u0.len() != grid.n {
        return Err(Fv1dError::InvalidArgument(format!("{} values for {} nodes", u0.len(), grid.n)));
    }
    if !(cfl > 0.0) || !(t_end >= 0.0) {
        return Err(Fv1dError::InvalidArgument("cfl and t_end must be positive".into()));
    }
    let a = u0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let dt = cfl * grid.dx / a;
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut out = FvRun { snapshots: vec![(0.0, u.clone())], steps: 0, max_cfl: 0.0, cfl_warnings: 0 };
    while t < t_end - 1e-12 * t_end.max(1.0) {
        let h = dt.min(t_end - t);
        let lambda = h / grid.dx;
        let c = cfl_number(&u, lambda);
        out.max_cfl = out.max_cfl.max(c);
        if c > 1.0 {
            out.cfl_warnings += 1;
        }
        u = scheme.step(grid, &u, lambda);
        t += h;
        out.steps += 1;
        if every > 0 && out.steps.is_multiple_of(every) {
            out.snapshots.push((t, u.clone()));
        }
    }
    if out.snapshots.last().map(|s| s.0) != Some(t) {
        out.snapshots.push((t, u));
    }
    Ok(out)
}

/// `1 + cos(2π(x + 1/2))`.
pub fn cosine_profile(x: f64) -> f64 {
    1.0 + (2.0 * std::f64::consts::PI * (x + 0.5)).cos()
}

#[derive(Debug, Clone)]
pub struct CosineExperiment {
    pub x: Vec<f64>,
    pub t_end: f64,
    pub conservative: Vec<f64>,
    pub nonconservative: Vec<f64>,
    /// `Δx Σ |u_cons − u_noncons|`.
    pub scheme_difference: f64,
    /// `Δx Σ |u_cons(Δx) − u_cons(Δx/2)|` at the shared nodes.
    pub self_convergence: f64,
}

/// Both schemes from the cosine profile on a periodic unit grid, run to
/// `t_end` (0.5 past shock formation when `None`).
pub fn cosine_experiment(n: usize, t_end: Option<f64>, cfl: f64) -> Result<CosineExperiment, Fv1dError> {
    let t_end = t_end.unwrap_or(1.0 / (2.0 * std::f64::consts::PI) + 0.5);
    let grid = Grid1D::new(n, 0.0, 1.0, true)?;
    let fine = Grid1D::new(2 * n, 0.0, 1.0, true)?;
    let u0: Vec<f64> = grid.nodes().into_iter().map(cosine_profile).collect();
    let u0f: Vec<f64> = fine.nodes().into_iter().map(cosine_profile).collect();
    let cons = run(&grid, FvScheme::Conservative, &u0, t_end, cfl, 0)?;
    let nonc = run(&grid, FvScheme::NonConservative, &u0, t_end, cfl, 0)?;
    let consf = run(&fine, FvScheme::Conservative, &u0f, t_end, cfl, 0)?;
    let (c, nc, cf) = (cons.last(), nonc.last(), consf.last());
    let scheme_difference = grid.dx * c.iter().zip(nc).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let self_convergence = grid.dx * (0..n).map(|j| (c[j] - cf[2 * j]).abs()).sum::<f64>();
    Ok(CosineExperiment {
        x: grid.nodes(),
        t_end,
        conservative: c.to_vec(),
        nonconservative: nc.to_vec(),
        scheme_difference,
        self_convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid1D::new(10, 0.0, 1.0, true).unwrap();
        let u = vec![0.7; 10];
        assert_eq!(step_conservative(&g, &u, 0.5), u);
        assert_eq!(step_nonconservative(&g, &u, 0.5), u);
    }

    #[test]
    fn nonconservative_front_does_not_move() {
        let g = Grid1D::new(6, 0.0, 1.0, false).unwrap();
        let u = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let nc = step_nonconservative(&g, &u, 0.5);
        assert_eq!(nc[2], 0.0);
        let c = step_conservative(&g, &u, 0.5);
        assert_abs_diff_eq!(c[2], 0.25, epsilon = 1e-16);
    }

    #[test]
    fn total_variation_cases() {
        assert_eq!(total_variation(&[0.0, 1.0, 0.0], true), 2.0);
        assert_eq!(total_variation(&[0.0, 0.5, 2.0, 3.0], false), 3.0);
        let u = [0.3, -1.0, 2.0, 0.0];
        let s: Vec<f64> = u.iter().map(|v| v + 5.0).collect();
        assert_abs_diff_eq!(total_variation(&u, true), total_variation(&s, true), epsilon = 1e-14);
    }

    #[test]
    fn entropy_flux_consistency() {
        assert_abs_diff_eq!(tadmor_cell_entropy(1.0, 1.0), 1.0 / 3.0, epsilon = 1e-16);
        assert_eq!(tadmor_cell_entropy(0.0, 0.0), 0.0);
        for u in [0.2, 1.7, 3.0] {
            assert_abs_diff_eq!(tadmor_cell_entropy(u, u), u * u * u / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn conservative_mass_is_constant() {
        let g = Grid1D::new(50, 0.0, 1.0, true).unwrap();
        let u0: Vec<f64> = g.nodes().into_iter().map(cosine_profile).collect();
        let r = run(&g, FvScheme::Conservative, &u0, 0.4, 0.9, 1).unwrap();
        let m0: f64 = u0.iter().sum();
        for (_, u) in &r.snapshots {
            assert!((u.iter().sum::<f64>() - m0).abs() < 1e-12);
        }
        assert_eq!(r.cfl_warnings, 0);
    }

    #[test]
    fn synthetic_traveling_shock() {
        let g = Grid1D::new(200, 0.0, 2.0, false).unwrap();
        let x = g.nodes();
        let snaps: Vec<(f64, Vec<f64>)> = (0..5)
            .map(|k| {
                let t = 0.2 * k as f64;
                let s = 0.5 + 0.5 * t;
                (t, x.iter().map(|&xi| if xi < s { 1.0 } else { 0.0 }).collect())
            })
            .collect();
        let speed = measure_shock_speed(&x, &snaps).unwrap();
        assert!((speed - 0.5).abs() < 1e-3, "{speed}");
    }

    #[test]
    fn flat_data_has_no_shock() {
        assert_eq!(locate_shock(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4]), Err(Fv1dError::NoDiscontinuity));
    }

    #[test]
    fn scheme_names() {
        assert_eq!("cons".parse::<FvScheme>().unwrap(), FvScheme::Conservative);
        assert_eq!("noncons".parse::<FvScheme>().unwrap(), FvScheme::NonConservative);
        assert!("lw".parse::<FvScheme>().is_err());
    }

    #[test]
    fn cosine_experiment_separates_schemes() {
        let e = cosine_experiment(200, None, 0.9).unwrap();
        assert!(e.scheme_difference > 10.0 * e.self_convergence, "{} vs {}", e.scheme_difference, e.self_convergence);
    }
}
