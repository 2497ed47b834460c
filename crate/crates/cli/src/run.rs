use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdlab::conslaw::{Advection, Burgers, ConservationLaw, Cubic, Euler, EulerState, LawSpec, State};
use rdlab::constraints::{riemann_initial, CorrectionOptions, PrimitiveEulerSolver};
use rdlab::diagnostics::{
    conservation_audit, entropy_inequality_audit, lipschitz_audit, maximum_principle_audit, resummation_audit,
    uniform_sampler, AuditReport,
};
use rdlab::fv1d::{self, FvScheme, Grid1D};
use rdlab::mesh::{ElementGraph, Mesh, Rect};
use rdlab::recovery::{boundary_normal_weights, certify, continuous_boundary_flux, IncidenceSystem};
use rdlab::residual::{assemble, gather, DistributionScheme, SchemeKind, Transmissive};
use rdlab::time::{DecConfig, DecSolver};

use crate::config::{MeshKind, Profile, RunConfig};
use crate::output::{num, row, Outputs};
use crate::CliError;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn single(name: &str, defect: f64, tolerance: f64) -> AuditReport {
    AuditReport::new(name, defect, tolerance, None, usize::from(defect > tolerance))
}

fn audit_text(reports: &[AuditReport]) -> String {
    reports.iter().map(|r| r.to_key_values()).collect::<Vec<_>>().join("\n")
}

/// Runs a configuration; returns whether every audit passed.
pub fn run_config(cfg: &RunConfig, out_dir: &Path, command: &str) -> Result<bool, CliError> {
    use crate::config::ProblemKind;
    let mut out = Outputs::create(out_dir)?;
    let reports = match cfg.problem.kind {
        ProblemKind::Rd => run_rd(cfg, &mut out)?,
        ProblemKind::Burgers1d => run_burgers1d(cfg, &mut out)?,
        ProblemKind::EulerPrimitive => run_euler_primitive(cfg, &mut out)?,
    };
    for r in &reports {
        eprintln!("{r}");
    }
    let passed = reports.iter().all(|r| r.passed);
    out.write("audit.txt", &audit_text(&reports))?;
    out.finish(command, cfg.problem.seed, passed, &cfg.echo())?;
    Ok(passed)
}

pub fn build_mesh(cfg: &RunConfig) -> Result<Mesh, CliError> {
    let m = &cfg.mesh;
    match m.kind {
        MeshKind::Interval => Mesh::interval(m.nx, m.x0, m.x1, m.degree, m.periodic),
        MeshKind::Structured => {
            let rect = Rect { x0: m.x0, x1: m.x1, y0: m.y0, y1: m.y1 };
            if m.periodic {
                Mesh::structured_periodic(m.nx, m.ny, rect, m.degree, [true, true])
            } else {
                Mesh::structured(m.nx, m.ny, rect, m.degree)
            }
        }
    }
    .map_err(config_err)
}

fn scalar_value(cfg: &RunConfig, x: [f64; 2], dim: usize, rng: &mut ChaCha8Rng) -> Result<f64, CliError> {
    let ini = &cfg.initial;
    let base = *ini.left.first().ok_or_else(|| config_err("initial.left needs a value"))?;
    let m = &cfg.mesh;
    Ok(match ini.profile {
        Profile::Constant => base,
        Profile::Sine => {
            let sx = (2.0 * PI * x[0]).sin();
            base + ini.amplitude * if dim == 2 { sx * (2.0 * PI * x[1]).sin() } else { sx }
        }
        Profile::Bump => {
            let cx = 0.5 * (m.x0 + m.x1);
            let cy = 0.5 * (m.y0 + m.y1);
            let r = if dim == 2 { (x[0] - cx).hypot(x[1] - cy) } else { (x[0] - cx).abs() } / 0.25;
            base + if r < 1.0 { ini.amplitude * (0.5 * PI * r).cos().powi(2) } else { 0.0 }
        }
        Profile::Riemann => {
            if x[0] <= ini.split {
                base
            } else {
                *ini.right.first().ok_or_else(|| config_err("initial.right needs a value"))?
            }
        }
        Profile::Cosine => fv1d::cosine_profile(x[0]),
        Profile::Random => base + ini.amplitude * rng.gen::<f64>(),
    })
}

fn scalar_initial(cfg: &RunConfig, mesh: &Mesh) -> Result<Vec<State<1>>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.problem.seed);
    mesh.dofs()
        .coords()
        .iter()
        .map(|&x| scalar_value(cfg, x, mesh.dim(), &mut rng).map(State::<1>::new))
        .collect()
}

fn euler_state(v: &[f64], what: &str) -> Result<EulerState, CliError> {
    let s = match v {
        [r, u, p] => EulerState::new(*r, [*u, 0.0], *p),
        [r, u, w, p] => EulerState::new(*r, [*u, *w], *p),
        _ => return Err(config_err(format!("initial.{what} must be (rho, u, p) or (rho, u, v, p)"))),
    };
    s.check().map_err(config_err)?;
    Ok(s)
}

fn euler_initial(cfg: &RunConfig, mesh: &Mesh, gamma: f64) -> Result<Vec<State<4>>, CliError> {
    let left = euler_state(&cfg.initial.left, "left")?;
    let right = match cfg.initial.profile {
        Profile::Constant => left,
        Profile::Riemann => euler_state(&cfg.initial.right, "right")?,
        p => return Err(config_err(format!("profile {p:?} is not available for Euler"))),
    };
    Ok(mesh
        .dofs()
        .coords()
        .iter()
        .map(|x| if x[0] <= cfg.initial.split { left } else { right }.conserved(gamma))
        .collect())
}

pub fn scheme(cfg: &RunConfig) -> Result<DistributionScheme, CliError> {
    let kind: SchemeKind = cfg.scheme.kind.parse().map_err(config_err)?;
    let s = DistributionScheme {
        kind,
        tau_scale: cfg.scheme.tau_scale,
        theta_e: cfg.scheme.theta_e,
        gamma_jump: cfg.scheme.gamma_jump,
        alpha: cfg.scheme.alpha,
    };
    s.validate().map_err(config_err)?;
    Ok(s)
}

fn law_spec(cfg: &RunConfig) -> Result<LawSpec, CliError> {
    cfg.law.name.parse().map_err(config_err)
}

fn run_rd(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<AuditReport>, CliError> {
    let mesh = build_mesh(cfg)?;
    let scheme = scheme(cfg)?;
    match law_spec(cfg)? {
        LawSpec::Burgers => rd_generic(cfg, out, &mesh, scheme, &Burgers::default(), scalar_initial(cfg, &mesh)?),
        LawSpec::Cubic => rd_generic(cfg, out, &mesh, scheme, &Cubic::default(), scalar_initial(cfg, &mesh)?),
        LawSpec::Advection(a) => rd_generic(cfg, out, &mesh, scheme, &Advection::new(a), scalar_initial(cfg, &mesh)?),
        LawSpec::Euler(g) => rd_generic(cfg, out, &mesh, scheme, &Euler::new(g), euler_initial(cfg, &mesh, g)?),
    }
}

fn snapshot_csv<const M: usize>(mesh: &Mesh, u: &[State<M>]) -> String {
    let mut s = String::from("dof,x,y");
    for c in 0..M {
        s.push_str(&format!(",u{c}"));
    }
    s.push('\n');
    for (d, (x, v)) in mesh.dofs().coords().iter().zip(u).enumerate() {
        s.push_str(&format!("{d},{},{}\n", row([x[0], x[1]]), row(v.iter().copied())));
    }
    s
}

/// `Ψ_σ = Φ_σ − f̂_σ^b` per element, at element-local DOF positions.
fn residual_dump<const M: usize, L: ConservationLaw<M>>(
    mesh: &Mesh,
    u: &[State<M>],
    set: &rdlab::residual::ResidualSet<M>,
    law: &L,
) -> String {
    let mut s = format!("# dim={} degree={}\nelement,local,x,y", mesh.dim(), mesh.degree());
    for c in 0..M {
        s.push_str(&format!(",psi{c}"));
    }
    s.push('\n');
    let r = mesh.reference();
    for el in &set.elements {
        let e = el.element;
        let local = gather(mesh, e, u);
        let fb = continuous_boundary_flux(mesh, e, &local, law);
        let g = mesh.geometry(e);
        for (k, (phi, b)) in el.split.iter().zip(&fb).enumerate() {
            let x = g.point(&r.dof_bary[k]);
            s.push_str(&format!("{e},{k},{},{}\n", row([x[0], x[1]]), row((phi - b).iter().copied())));
        }
    }
    s
}

fn rd_generic<const M: usize, L: ConservationLaw<M>>(
    cfg: &RunConfig,
    out: &mut Outputs,
    mesh: &Mesh,
    scheme: DistributionScheme,
    law: &L,
    u0: Vec<State<M>>,
) -> Result<Vec<AuditReport>, CliError> {
    let t = &cfg.time;
    if t.subnodes < 2 {
        return Err(config_err("time.subnodes must be at least 2"));
    }
    let dec = DecConfig { subintervals: t.subnodes - 1, iterations: t.dec_iterations.unwrap_or(t.subnodes), cfl: t.cfl };
    let bc = Transmissive;
    let solver = DecSolver::new(mesh, law, scheme, &bc, dec).map_err(config_err)?;
    out.write("snapshot_00000.csv", &snapshot_csv(mesh, &u0))?;

    let bounds = |u: &[State<M>]| {
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v[0]), b.max(v[0])));
        vec![lo, hi]
    };
    let mut history = vec![bounds(&u0)];
    let mut log = String::from("step,t,dt");
    for c in 0..M {
        log.push_str(&format!(",mass{c}"));
    }
    log.push_str(",residual_norm,cfl_warning\n");
    let mut snaps = Vec::new();
    let mut warnings = 0;
    let mut failure = None;
    let u = solver
        .integrate(&u0, 0.0, t.t_end, t.dt, |rec, u| {
            history.push(bounds(u));
            let norm = match assemble(mesh, u, &scheme, law, &bc, rec.t) {
                Ok(a) => a.residual.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt(),
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    f64::NAN
                }
            };
            if rec.cfl_warning.is_some() {
                warnings += 1;
            }
            log.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rec.step,
                num(rec.t),
                num(rec.dt),
                row(rec.mass.iter().copied()),
                num(norm),
                u8::from(rec.cfl_warning.is_some())
            ));
            if t.snapshot_every > 0 && rec.step % t.snapshot_every == 0 {
                snaps.push((rec.step, u.to_vec()));
            }
        })
        .map_err(runtime)?;
    if let Some(f) = failure {
        return Err(runtime(f));
    }
    if warnings > 0 {
        eprintln!("warning: {warnings} steps exceeded the CFL bound");
    }
    let last_step = log.lines().count() - 1;
    if snaps.last().map(|s| s.0) != Some(last_step) {
        snaps.push((last_step, u.clone()));
    }
    for (step, s) in &snaps {
        out.write(&format!("snapshot_{step:05}.csv"), &snapshot_csv(mesh, s))?;
    }
    out.write("steps.csv", &log)?;

    let a = assemble(mesh, &u, &scheme, law, &bc, t.t_end).map_err(runtime)?;
    out.write("residual_dump.csv", &residual_dump(mesh, &u, &a.set, law))?;
    let mut reports = vec![conservation_audit(&a.set, cfg.audit.conservation_tol), resummation_audit(&a.set, &a.residual)];
    if let (Some(tol), 1) = (cfg.audit.max_principle_tol, M) {
        reports.push(maximum_principle_audit(&history, tol));
    }
    if let Some(tol) = cfg.audit.entropy_tol {
        reports.push(entropy_inequality_audit(mesh, &u, &a.set, law, tol).map_err(runtime)?);
    }
    Ok(reports)
}

fn run_burgers1d(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<AuditReport>, CliError> {
    let scheme: FvScheme = cfg.scheme.kind.parse().map_err(config_err)?;
    let m = &cfg.mesh;
    let grid = Grid1D::new(m.nx, m.x0, m.x1, m.periodic).map_err(config_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.problem.seed);
    let u0 = grid
        .nodes()
        .into_iter()
        .map(|x| scalar_value(cfg, [x, 0.0], 1, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let res = fv1d::run(&grid, scheme, &u0, cfg.time.t_end, cfg.time.cfl, cfg.time.snapshot_every).map_err(runtime)?;
    if res.cfl_warnings > 0 {
        eprintln!("warning: {} steps with lambda*max|u| > 1 (max {})", res.cfl_warnings, res.max_cfl);
    }
    let x = grid.nodes();
    let mut series = String::from("t,mass,total_variation\n");
    for (k, (t, u)) in res.snapshots.iter().enumerate() {
        let mut s = String::from("dof,x,y,u\n");
        for (i, (xi, ui)) in x.iter().zip(u).enumerate() {
            s.push_str(&format!("{i},{}\n", row([*xi, 0.0, *ui])));
        }
        out.write(&format!("snapshot_{k:05}.csv"), &s)?;
        series.push_str(&format!("{}\n", row([*t, grid.dx * u.iter().sum::<f64>(), fv1d::total_variation(u, grid.periodic)])));
    }
    out.write("series.csv", &series)?;

    let mut reports = Vec::new();
    let tv0 = fv1d::total_variation(&u0, grid.periodic);
    let tv_growth = res
        .snapshots
        .windows(2)
        .map(|w| fv1d::total_variation(&w[1].1, grid.periodic) - fv1d::total_variation(&w[0].1, grid.periodic))
        .fold(0.0f64, f64::max);
    reports.push(single("total_variation", tv_growth, 1e-12 * (1.0 + tv0)));
    if grid.periodic && scheme == FvScheme::Conservative {
        let m0: f64 = u0.iter().sum();
        let drift = res.snapshots.iter().map(|(_, u)| (u.iter().sum::<f64>() - m0).abs()).fold(0.0, f64::max);
        reports.push(single("mass", drift, cfg.audit.conservation_tol * (1.0 + m0.abs())));
    }
    if let Some(tol) = cfg.audit.max_principle_tol {
        let hist: Vec<Vec<f64>> = res.snapshots.iter().map(|s| s.1.clone()).collect();
        reports.push(maximum_principle_audit(&hist, tol));
    }
    Ok(reports)
}

fn run_euler_primitive(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<AuditReport>, CliError> {
    let gamma = match law_spec(cfg)? {
        LawSpec::Euler(g) => g,
        other => return Err(config_err(format!("euler_primitive needs an euler law, got {other}"))),
    };
    let options = CorrectionOptions {
        conservation: cfg.corrections.correct_conservation,
        entropy: cfg.corrections.correct_entropy,
    };
    let m = &cfg.mesh;
    let mut solver = PrimitiveEulerSolver::uniform(m.nx, m.x0, m.x1, gamma, options).map_err(config_err)?;
    solver.cfl = cfg.time.cfl;
    let left = euler_state(&cfg.initial.left, "left")?;
    let right = match cfg.initial.profile {
        Profile::Constant => left,
        Profile::Riemann => euler_state(&cfg.initial.right, "right")?,
        p => return Err(config_err(format!("profile {p:?} is not available for Euler"))),
    };
    let w0 = riemann_initial(&solver.x, cfg.initial.split, left, right);
    let (w, report) = solver.run(&w0, cfg.time.t_end).map_err(runtime)?;
    for (name, states) in [("snapshot_00000.csv", &w0), ("snapshot_final.csv", &w)] {
        let mut s = String::from("dof,x,y,rho,u,p\n");
        for (i, (x, st)) in solver.x.iter().zip(states.iter()).enumerate() {
            s.push_str(&format!("{i},{}\n", row([*x, 0.0, st.density, st.velocity[0], st.pressure])));
        }
        out.write(name, &s)?;
    }
    let mut d = String::from(
        "element,before_mass,before_momentum,before_energy,before_entropy,after_mass,after_momentum,after_energy,after_entropy,r_u,r_e,r_p0,r_p1\n",
    );
    for (k, e) in report.elements.iter().enumerate() {
        let vals = e
            .before
            .iter()
            .chain(&e.after)
            .copied()
            .chain([e.velocity_correction, e.energy_correction])
            .chain(e.pressure_correction);
        d.push_str(&format!("{k},{}\n", row(vals)));
    }
    out.write("defects.csv", &d)?;
    println!("balance_defect_before={}", num(report.max_before()));
    println!("balance_defect_after={}", num(report.max_after()));
    let mut reports = Vec::new();
    if options.conservation || options.entropy {
        reports.push(single("balance_defect", report.max_after(), cfg.audit.defect_tol));
    }
    if options.entropy {
        reports.push(single("entropy_balance_defect", report.max_entropy_after(), cfg.audit.defect_tol));
    }
    Ok(reports)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))
}

struct DumpRow {
    element: usize,
    x: [f64; 2],
    psi: Vec<f64>,
}

fn parse_dump(text: &str) -> Result<(usize, usize, Vec<DumpRow>), CliError> {
    let mut dim = None;
    let mut degree = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            for kv in c.split_whitespace() {
                match kv.split_once('=') {
                    Some(("dim", v)) => dim = v.parse().ok(),
                    Some(("degree", v)) => degree = v.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with("element") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 5 {
            return Err(config_err(format!("dump line {}: too few columns", i + 1)));
        }
        let bad = |_| config_err(format!("dump line {}: not a number", i + 1));
        let nums = f[2..].iter().map(|v| v.trim().parse::<f64>().map_err(bad)).collect::<Result<Vec<_>, _>>()?;
        rows.push(DumpRow {
            element: f[0].trim().parse().map_err(|_| config_err(format!("dump line {}: bad element id", i + 1)))?,
            x: [nums[0], nums[1]],
            psi: nums[2..].to_vec(),
        });
    }
    let dim = dim.ok_or_else(|| config_err("dump header lacks dim="))?;
    let degree = degree.ok_or_else(|| config_err("dump header lacks degree="))?;
    Ok((dim, degree, rows))
}

fn recover_one<const M: usize>(
    system: &IncidenceSystem,
    mesh: &Mesh,
    rows: &[&DumpRow],
) -> Result<(Vec<State<M>>, Vec<[f64; 2]>, rdlab::recovery::Certification), CliError> {
    let psi: Vec<State<M>> = rows.iter().map(|r| State::<M>::from_iterator(r.psi.iter().copied())).collect();
    let fluxes = system.recover_fluxes(&psi).map_err(runtime)?;
    let normals = system.recover_normals(&boundary_normal_weights(mesh, 0)).map_err(runtime)?;
    let cert = certify(system, &fluxes, &psi);
    Ok((fluxes, normals, cert))
}

/// Edge fluxes and certification for every element of a residual dump.
pub fn recover(dump: &Path, out_dir: &Path, seed: u64) -> Result<bool, CliError> {
    let (dim, degree, rows) = parse_dump(&read(dump)?)?;
    let graph = ElementGraph::lagrange(dim, degree).map_err(config_err)?;
    let system = IncidenceSystem::build(&graph).map_err(runtime)?;
    let n = graph.nodes;
    let m = rows.first().map(|r| r.psi.len()).unwrap_or(1);
    let mut out = Outputs::create(out_dir)?;
    let mut edges = String::from("element,a,b");
    for c in 0..m {
        edges.push_str(&format!(",flux{c}"));
    }
    edges.push_str(",nx,ny\n");
    let mut certs = String::from("element,balance_defect,antisymmetry_defect,compatibility_defect,tolerance,passed\n");
    let mut all = true;
    let mut i = 0;
    while i < rows.len() {
        let e = rows[i].element;
        let group: Vec<&DumpRow> = rows[i..].iter().take_while(|r| r.element == e).collect();
        if group.len() != n || group.iter().any(|r| r.psi.len() != m) {
            return Err(config_err(format!("element {e}: expected {n} rows with {m} components")));
        }
        let verts: Vec<[f64; 2]> = group.iter().take(dim + 1).map(|r| r.x).collect();
        let ids = if dim == 1 { [0, 1, 0] } else { [0, 1, 2] };
        let mesh = Mesh::from_parts(dim, degree, verts, vec![ids]).map_err(runtime)?;
        macro_rules! dispatch {
            ($($k:literal),*) => {
                match m {
                    $($k => {
                        let (f, nrm, c) = recover_one::<$k>(&system, &mesh, &group)?;
                        (f.iter().map(|v| v.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(), nrm, c)
                    })*
                    _ => return Err(config_err(format!("{m} components are not supported"))),
                }
            };
        }
        let (fluxes, normals, cert) = dispatch!(1, 2, 3, 4);
        for (((a, b), f), nrm) in graph.edges.iter().zip(&fluxes).zip(&normals) {
            edges.push_str(&format!("{e},{a},{b},{},{}\n", row(f.iter().copied()), row(*nrm)));
        }
        certs.push_str(&format!(
            "{e},{},{},{},{},{}\n",
            num(cert.balance_defect),
            num(cert.antisymmetry_defect),
            num(cert.compatibility_defect),
            num(cert.tolerance),
            cert.passed
        ));
        all &= cert.passed;
        i += group.len();
    }
    out.write("edge_fluxes.csv", &edges)?;
    out.write("certification.csv", &certs)?;
    eprintln!("{} recovery certification", if all { "PASS" } else { "FAIL" });
    out.finish("recover", seed, all, "")?;
    Ok(all)
}

fn parse_state<const M: usize>(text: &str, ndofs: usize) -> Result<Vec<State<M>>, CliError> {
    let mut u = vec![None; ndofs];
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 + M {
            return Err(config_err(format!("state line {}: expected {} columns", i + 1, 3 + M)));
        }
        let d: usize = f[0].trim().parse().map_err(|_| config_err(format!("state line {}: bad dof id", i + 1)))?;
        if d >= ndofs {
            return Err(config_err(format!("state line {}: dof {d} out of range", i + 1)));
        }
        let vals = f[3..]
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|_| config_err(format!("state line {}: not a number", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        u[d] = Some(State::<M>::from_iterator(vals));
    }
    u.into_iter()
        .enumerate()
        .map(|(d, v)| v.ok_or_else(|| config_err(format!("state has no value for dof {d}"))))
        .collect()
}

fn audit_generic<const M: usize, L: ConservationLaw<M>>(
    cfg: &RunConfig,
    mesh: &Mesh,
    law: &L,
    text: &str,
    seed: u64,
    lipschitz: bool,
) -> Result<Vec<AuditReport>, CliError> {
    let u = parse_state::<M>(text, mesh.ndofs())?;
    let scheme = scheme(cfg)?;
    let a = assemble(mesh, &u, &scheme, law, &Transmissive, 0.0).map_err(runtime)?;
    let mut reports = vec![conservation_audit(&a.set, cfg.audit.conservation_tol), resummation_audit(&a.set, &a.residual)];
    if lipschitz && mesh.nelements() > 0 {
        let bound = u.iter().map(|v| v.amax()).fold(0.0, f64::max) + 1.0;
        reports.push(lipschitz_audit(mesh, 0, &scheme, law, uniform_sampler(bound), 2000, seed).map_err(runtime)?);
    }
    if law.entropy().is_some() {
        let tol = cfg.audit.entropy_tol.unwrap_or(1e-12);
        reports.push(entropy_inequality_audit(mesh, &u, &a.set, law, tol).map_err(runtime)?);
    }
    Ok(reports)
}

/// Audits a stored state against the mesh, law and scheme of `config`.
pub fn audit(state: &Path, config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<bool, CliError> {
    let cfg = RunConfig::parse(&read(config)?).map_err(config_err)?;
    let seed = seed.unwrap_or(cfg.problem.seed);
    let mesh = build_mesh(&cfg)?;
    let text = read(state)?;
    let reports = match law_spec(&cfg)? {
        LawSpec::Burgers => audit_generic::<1, _>(&cfg, &mesh, &Burgers::default(), &text, seed, true)?,
        LawSpec::Cubic => audit_generic::<1, _>(&cfg, &mesh, &Cubic::default(), &text, seed, true)?,
        LawSpec::Advection(v) => audit_generic::<1, _>(&cfg, &mesh, &Advection::new(v), &text, seed, true)?,
        LawSpec::Euler(g) => audit_generic::<4, _>(&cfg, &mesh, &Euler::new(g), &text, seed, false)?,
    };
    let text = audit_text(&reports);
    print!("{text}");
    let passed = reports.iter().all(|r| r.passed);
    let mut out = Outputs::create(out_dir)?;
    out.write("audit.txt", &text)?;
    out.finish("audit", seed, passed, &cfg.echo())?;
    Ok(passed)
}
