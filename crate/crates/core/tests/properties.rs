use proptest::prelude::*;

use rdlab::conslaw::{Advection, Burgers, EulerState, State};
use rdlab::constraints::{conserved_increment_matrix, primitive_increment};
use rdlab::fv1d::{step_conservative, total_variation, Grid1D};
use rdlab::mesh::{ElementGraph, Mesh, Rect};
use rdlab::recovery::{certify, IncidenceSystem};
use rdlab::residual::{blend_limiter, element_residuals, DistributionScheme, SchemeKind, Transmissive};
use rdlab::time::{lumped_mass, subinterval_weights, DecConfig, DecSolver};

const UNIT: Rect = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };

fn scalar(v: &[f64]) -> Vec<State<1>> {
    v.iter().map(|&x| State::<1>::new(x)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn upwind_burgers_keeps_range_and_variation(
        u in prop::collection::vec(0.0f64..2.0, 8..40),
        courant in 0.05f64..1.0,
    ) {
        let grid = Grid1D::new(u.len(), 0.0, 1.0, true).unwrap();
        let umax = u.iter().copied().fold(0.0, f64::max).max(1e-3);
        let lambda = courant / umax;
        let next = step_conservative(&grid, &u, lambda);
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        for v in &next {
            prop_assert!(*v >= lo - 1e-12 && *v <= umax + 1e-12);
        }
        prop_assert!(total_variation(&next, true) <= total_variation(&u, true) + 1e-12);
        // periodic flux form: the sum is untouched
        let (a, b): (f64, f64) = (u.iter().sum(), next.iter().sum());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn element_splits_sum_to_the_total(
        values in prop::collection::vec(-2.0f64..2.0, 16),
        degree in 1usize..=2,
        kind in prop::sample::select(SchemeKind::ALL.to_vec()),
    ) {
        let mesh = Mesh::structured(2, 2, UNIT, degree).unwrap();
        let u: Vec<State<1>> = (0..mesh.ndofs()).map(|d| State::<1>::new(values[d % values.len()])).collect();
        let scheme = DistributionScheme::new(kind);
        for e in 0..mesh.nelements() {
            let r = element_residuals(&mesh, e, &u, &scheme, &Burgers::default()).unwrap();
            let sum: f64 = r.split.iter().map(|v| v[0]).sum();
            let scale = 1.0 + r.split.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
            prop_assert!((sum - r.total[0]).abs() <= 1e-12 * scale, "{kind:?}: {sum} vs {}", r.total[0]);
        }
    }

    #[test]
    fn increment_matrix_maps_primitive_to_conserved(
        rho in (0.1f64..3.0, 0.1f64..3.0),
        ux in (-2.0f64..2.0, -2.0f64..2.0),
        uy in (-2.0f64..2.0, -2.0f64..2.0),
        p in (0.1f64..3.0, 0.1f64..3.0),
    ) {
        let gamma = 1.4;
        let a = EulerState::new(rho.0, [ux.0, uy.0], p.0);
        let b = EulerState::new(rho.1, [ux.1, uy.1], p.1);
        let lhs = conserved_increment_matrix(&a, &b) * primitive_increment(&a, &b, gamma);
        let rhs = b.conserved(gamma) - a.conserved(gamma);
        for k in 0..4 {
            prop_assert!((lhs[k] - rhs[k]).abs() <= 1e-12 * (1.0 + rhs.amax()));
        }
    }

    #[test]
    fn recovered_fluxes_balance_zero_sum_residuals(
        raw in prop::collection::vec(-5.0f64..5.0, 6),
        degree in 1usize..=2,
    ) {
        let graph = ElementGraph::lagrange(2, degree).unwrap();
        let sys = IncidenceSystem::build(&graph).unwrap();
        let n = graph.nodes;
        let mean = raw[..n].iter().sum::<f64>() / n as f64;
        let psi = scalar(&raw[..n].iter().map(|v| v - mean).collect::<Vec<_>>());
        let fluxes = sys.recover_fluxes(&psi).unwrap();
        let cert = certify(&sys, &fluxes, &psi);
        prop_assert!(cert.passed, "{cert:?}");
        prop_assert!(cert.balance_defect <= 1e-12);
    }

    #[test]
    fn beta_weights_are_a_scale_invariant_partition(
        monotone in prop::collection::vec(-3.0f64..3.0, 3),
        scale in 0.01f64..100.0,
    ) {
        let m = scalar(&monotone);
        let total = State::<1>::new(monotone.iter().sum());
        prop_assume!(total[0].abs() > 1e-6);
        let l = blend_limiter(&m, &total).unwrap();
        let sum: f64 = l.beta.iter().map(|b| b[0]).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(l.beta.iter().all(|b| b[0] >= 0.0));
        // distributed residuals share the sign of the total
        prop_assert!(l.residuals.iter().all(|r| r[0] * total[0] >= 0.0));
        let scaled: Vec<State<1>> = m.iter().map(|v| v * scale).collect();
        let ls = blend_limiter(&scaled, &(total * scale)).unwrap();
        for (a, b) in l.beta.iter().zip(&ls.beta) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn sub_interval_weights_integrate_polynomials(p in 1usize..=5, degree in 0u32..=4) {
        // exact for degree ≤ p on equispaced nodes
        prop_assume!(degree as usize <= p);
        let theta = subinterval_weights(p);
        for (l, row) in theta.iter().enumerate() {
            let t = l as f64 / p as f64;
            let quad: f64 = row.iter().enumerate().map(|(j, w)| w * (j as f64 / p as f64).powi(degree as i32)).sum();
            let exact = t.powi(degree as i32 + 1) / (degree as f64 + 1.0);
            prop_assert!((quad - exact).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constant_states_are_fixed_points_of_the_time_stepper(
        value in -2.0f64..2.0,
        subintervals in 1usize..=3,
        kind in prop::sample::select(SchemeKind::ALL.to_vec()),
    ) {
        let mesh = Mesh::structured_periodic(4, 4, UNIT, 1, [true, true]).unwrap();
        let law = Advection::new([1.0, 0.5]);
        let solver = DecSolver::new(&mesh, &law, DistributionScheme::new(kind), &Transmissive, DecConfig::new(subintervals)).unwrap();
        let u = vec![State::<1>::new(value); mesh.ndofs()];
        let next = solver.step(&u, 0.0, 0.01).unwrap().state;
        for v in &next {
            prop_assert!((v[0] - value).abs() <= 1e-13);
        }
    }

    #[test]
    fn lumped_mass_covers_the_domain(nx in 1usize..6, ny in 1usize..6, degree in 1usize..=2) {
        let mesh = Mesh::structured(nx, ny, UNIT, degree).unwrap();
        let m = lumped_mass(&mesh);
        prop_assert!((m.dof.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(m.dof.iter().all(|&v| v > 0.0));
    }
}
