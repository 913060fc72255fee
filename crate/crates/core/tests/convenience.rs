mod common;

use common::*;
use netdyn::convenience::{find_fixpoint, find_valid_ic};
use netdyn::solver::integrate_dp5;
use netdyn::{network_dynamics, Coupling, DynamicalSystem, EdgeModel, EdgeWindows, SolverConfig, VertexModel};

#[test]
fn ring_fixpoint_has_tiny_residual_and_is_stable() {
    let nf = kuramoto(&ring(10), Coupling::Antisymmetric);
    let mut p = params(&ramp(10), 5.0);
    let x = find_fixpoint(&nf, &p, &[0.0; 10]).unwrap();
    let mut du = vec![0.0; 10];
    nf.rhs(&mut du, &x, &p, 0.0);
    assert!(du.iter().all(|d| d.abs() <= 1e-10), "{du:?}");

    let sol = integrate_dp5(&nf, &x, (0.0, 1.0), &mut p, &SolverConfig::with_tolerances(1e-10, 1e-12), None).unwrap();
    for u in sol.states() {
        assert!(max_abs_diff(u, &x) <= 1e-6);
    }
}

#[test]
fn fixpoint_on_random_small_world() {
    let g = netdyn::graphs::watts_strogatz(30, 4, 0.2, 6).unwrap();
    let nf = kuramoto(&g, Coupling::Fiducial);
    let mut omega = uniform(30, -0.5, 0.5, 2);
    let mean = omega.iter().sum::<f64>() / 30.0;
    omega.iter_mut().for_each(|w| *w -= mean);
    let p = params(&omega, 5.0);
    let x = find_fixpoint(&nf, &p, &[0.0; 30]).unwrap();
    let mut du = vec![0.0; 30];
    nf.rhs(&mut du, &x, &p, 0.0);
    assert!(du.iter().all(|d| d.abs() <= 1e-10));
}

#[test]
fn valid_ic_only_moves_algebraic_rows() {
    let g = ring(8);
    let mut vertices = vec![VertexModel::ode(kuramoto_vertex, 1, None).unwrap(); 8];
    // static vertex pinned to its parameter plus the mean incoming coupling
    vertices[5] = VertexModel::static_vertex(
        |v: &mut [f64], edges: EdgeWindows<'_>, c: &f64, _t: f64| {
            v[0] = *c + 0.1 * edges.iter().map(|e| e[0]).sum::<f64>();
        },
        1,
        None,
    )
    .unwrap();
    let e = EdgeModel::static_edge(kuramoto_edge, 1, Coupling::Fiducial).unwrap();
    let nf = network_dynamics(vertices, e, &g).unwrap();
    let p = params(&ramp(8), 2.0);
    let guess = uniform(8, -1.0, 1.0, 3);
    let x = find_valid_ic(&nf, &p, &guess).unwrap();
    for i in (0..8).filter(|&i| i != 5) {
        assert_eq!(x[i], guess[i]);
    }
    let mut du = vec![0.0; 8];
    nf.rhs(&mut du, &x, &p, 0.0);
    assert!(du[5].abs() <= 1e-10);
    assert!((x[5] - guess[5]).abs() > 1e-3);
}
