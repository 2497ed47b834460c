//! Exact P2 recovery coefficients, derived by hand from `AᵀL⁺` on the
//! quadratic triangle lattice and frozen as rationals.

use approx::assert_abs_diff_eq;
use rdlab::conslaw::{Advection, ConservationLaw, State};
use rdlab::mesh::{ElementGraph, Mesh};
use rdlab::recovery::{boundary_normal_weights, IncidenceSystem};

/// `(tail, head, coefficients on Ψ_0..Ψ_5)`.
const ROWS: [(usize, usize, [f64; 6]); 9] = [
    (0, 3, [5. / 12., -5. / 36., -1. / 36., -7. / 36., -1. / 12., 1. / 36.]),
    (0, 5, [5. / 12., -1. / 36., -5. / 36., 1. / 36., -1. / 12., -7. / 36.]),
    (3, 5, [0., 1. / 9., -1. / 9., 2. / 9., 0., -2. / 9.]),
    (4, 3, [-1. / 9., 0., 1. / 9., -2. / 9., 2. / 9., 0.]),
    (3, 1, [5. / 36., -5. / 12., 1. / 36., 7. / 36., -1. / 36., 1. / 12.]),
    (1, 4, [-1. / 36., 5. / 12., -5. / 36., 1. / 36., -7. / 36., -1. / 12.]),
    (4, 2, [1. / 36., 5. / 36., -5. / 12., 1. / 12., 7. / 36., -1. / 36.]),
    (5, 2, [5. / 36., 1. / 36., -5. / 12., 1. / 12., -1. / 36., 7. / 36.]),
    (5, 4, [1. / 9., -1. / 9., 0., 0., -2. / 9., 2. / 9.]),
];

fn system() -> (ElementGraph, IncidenceSystem) {
    let g = ElementGraph::lagrange(2, 2).unwrap();
    let s = IncidenceSystem::build(&g).unwrap();
    (g, s)
}

#[test]
fn p2_recovery_rows_are_exact() {
    let (g, sys) = system();
    let rec = sys.recovery_matrix();
    for (a, b, row) in ROWS {
        let k = g.edges.iter().position(|&e| e == (a, b) || e == (b, a)).unwrap();
        let sign = if g.edges[k] == (a, b) { 1.0 } else { -1.0 };
        for s in 0..6 {
            assert_abs_diff_eq!(sign * rec[(k, s)], row[s], epsilon = 1e-13);
        }
    }
}

#[test]
fn p2_rows_balance_every_node() {
    // Σ_edges ±row = unit vector minus the mean, for each node
    let (g, _) = system();
    for node in 0..6 {
        let mut acc = [0.0; 6];
        for (a, b, row) in ROWS {
            let k = g.edges.iter().position(|&e| e == (a, b) || e == (b, a)).unwrap();
            let (t, h) = g.edges[k];
            let sign = if (t, h) == (a, b) { 1.0 } else { -1.0 };
            let eps = if t == node { 1.0 } else if h == node { -1.0 } else { 0.0 };
            for s in 0..6 {
                acc[s] += eps * sign * row[s];
            }
        }
        for s in 0..6 {
            let expect = if s == node { 5.0 / 6.0 } else { -1.0 / 6.0 };
            assert_abs_diff_eq!(acc[s], expect, epsilon = 1e-14);
        }
    }
}

#[test]
fn p2_boundary_weights_integrate_the_trace_basis() {
    let p = [[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]];
    let mesh = Mesh::from_parts(2, 2, p.to_vec(), vec![[0, 1, 2]]).unwrap();
    let inward: Vec<[f64; 2]> = (0..3)
        .map(|l| {
            let (a, b) = (p[(l + 1) % 3], p[(l + 2) % 3]);
            [-(b[1] - a[1]), b[0] - a[0]]
        })
        .collect();
    // vertex trace basis integrates to 1/6 of the edge, midpoint basis to 2/3
    let expect = [
        [-inward[0][0] / 6.0, -inward[0][1] / 6.0],
        [-inward[1][0] / 6.0, -inward[1][1] / 6.0],
        [-inward[2][0] / 6.0, -inward[2][1] / 6.0],
        [2.0 * inward[2][0] / 3.0, 2.0 * inward[2][1] / 3.0],
        [2.0 * inward[0][0] / 3.0, 2.0 * inward[0][1] / 3.0],
        [2.0 * inward[1][0] / 3.0, 2.0 * inward[1][1] / 3.0],
    ];
    for (w, e) in boundary_normal_weights(&mesh, 0).iter().zip(&expect) {
        assert_abs_diff_eq!(w[0], e[0], epsilon = 1e-13);
        assert_abs_diff_eq!(w[1], e[1], epsilon = 1e-13);
    }
}

#[test]
fn constant_state_fluxes_follow_recovered_normals() {
    let p = [[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]];
    let mesh = Mesh::from_parts(2, 2, p.to_vec(), vec![[0, 1, 2]]).unwrap();
    let (_, sys) = system();
    let law = Advection::new([0.7, -1.3]);
    let u = State::<1>::new(2.5);
    let weights = boundary_normal_weights(&mesh, 0);
    let normals = sys.recover_normals(&weights).unwrap();
    // constant state: Φ_σ = 0, so Ψ_σ = −f(u)·N_σ
    let psi: Vec<State<1>> = weights.iter().map(|w| -law.normal_flux(&u, *w)).collect();
    let fluxes = sys.recover_fluxes(&psi).unwrap();
    for (fl, n) in fluxes.iter().zip(&normals) {
        assert_abs_diff_eq!(fl[0], -law.normal_flux(&u, *n)[0], epsilon = 1e-12);
    }
}
