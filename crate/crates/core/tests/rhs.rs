mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use common::*;
use nalgebra::DVector;
use netdyn::{
    graphs, network_dynamics, Coupling, DynamicalSystem, EdgeModel, EdgeWindows, Graph, ParamPart, ParameterBundle,
    VertexModel,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembled_matches_adjacency_oracle(
        n in 1usize..=50,
        q in 0.0f64..0.5,
        seed in any::<u64>(),
        sigma in -10.0f64..10.0,
        coupling in prop::sample::select(vec![Coupling::Fiducial, Coupling::Antisymmetric, Coupling::Undirected]),
    ) {
        let g = random_graph(n, q, seed);
        let omega = uniform(n, -3.0, 3.0, seed ^ 1);
        let u = uniform(n, -10.0, 10.0, seed ^ 2);
        let nf = kuramoto(&g, coupling);
        let mut du = vec![0.0; n];
        nf.evaluate_rhs(&mut du, &u, &params(&omega, sigma), 0.0);
        let oracle = adjacency_oracle(&g, &omega, sigma, &u);
        prop_assert!(max_abs_diff(&du, &oracle) <= 1e-12);
    }

    #[test]
    fn incidence_identity_holds(n in 3usize..40, half in 1usize..3, p in 0.0f64..1.0, seed in any::<u64>()) {
        prop_assume!(n > 2 * half);
        let g = graphs::watts_strogatz(n, 2 * half, p, seed).unwrap();
        let b = graphs::oriented_incidence(&g).unwrap();
        prop_assert_eq!(&b * b.transpose(), graphs::laplacian(&g).unwrap());
        for col in b.column_iter() {
            prop_assert_eq!(col.sum(), 0);
        }
    }
}

#[test]
fn ring_matches_dense_incidence_formula() {
    let n = 10;
    let g = ring(n);
    let omega = ramp(n);
    let x0 = ramp(n);
    let nf = kuramoto(&g, Coupling::Fiducial);
    let mut du = vec![0.0; n];
    nf.evaluate_rhs(&mut du, &x0, &params(&omega, 5.0), 0.0);

    let b = graphs::oriented_incidence(&g).unwrap().map(|x| x as f64);
    let theta = DVector::from_vec(x0.clone());
    let s = (b.transpose() * theta).map(f64::sin);
    let expected = DVector::from_vec(omega) - 5.0 * (b * s);
    assert!(max_abs_diff(&du, expected.as_slice()) <= 1e-12);
}

fn counting_network(g: &Graph, coupling: Coupling, calls: Arc<AtomicUsize>) -> netdyn::NetworkFunction<f64> {
    let v = VertexModel::ode(kuramoto_vertex, 1, None).unwrap();
    let e = EdgeModel::static_edge(
        move |e: &mut [f64], vs: &[f64], vd: &[f64], s: &f64, t: f64| {
            calls.fetch_add(1, Ordering::Relaxed);
            kuramoto_edge(e, vs, vd, s, t)
        },
        1,
        coupling,
    )
    .unwrap();
    network_dynamics(v, e, g).unwrap()
}

#[test]
fn antisymmetric_halves_calls_and_keeps_bits() {
    let g = graphs::watts_strogatz(60, 4, 0.3, 9).unwrap();
    let m = g.n_edges();
    let omega = uniform(60, -1.0, 1.0, 1);
    let u = uniform(60, -3.0, 3.0, 2);
    let p = params(&omega, 2.5);

    let mut outputs = Vec::new();
    for (coupling, per_eval) in [(Coupling::Fiducial, 2 * m), (Coupling::Antisymmetric, m)] {
        let calls = Arc::new(AtomicUsize::new(0));
        let nf = counting_network(&g, coupling, calls.clone());
        let mut du = vec![0.0; 60];
        nf.evaluate_rhs(&mut du, &u, &p, 0.0);
        assert_eq!(calls.load(Ordering::Relaxed), per_eval);
        outputs.push(du);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn parallel_matches_sequential_bitwise() {
    let g = graphs::watts_strogatz(200, 6, 0.25, 5).unwrap();
    let omega = uniform(200, -1.0, 1.0, 3);
    let u = uniform(200, -3.0, 3.0, 4);
    let p = params(&omega, 1.5);
    for coupling in [Coupling::Fiducial, Coupling::Antisymmetric, Coupling::Symmetric] {
        let seq = kuramoto(&g, coupling);
        let par = kuramoto(&g, coupling).with_parallel(true);
        let (mut a, mut b) = (vec![0.0; 200], vec![0.0; 200]);
        seq.evaluate_rhs(&mut a, &u, &p, 0.3);
        par.evaluate_rhs(&mut b, &u, &p, 0.3);
        assert_eq!(a, b, "{coupling:?}");
    }
}

#[test]
fn repeated_evaluation_is_deterministic() {
    let g = graphs::watts_strogatz(50, 4, 0.2, 1).unwrap();
    let nf = kuramoto(&g, Coupling::Fiducial);
    let omega = uniform(50, -1.0, 1.0, 7);
    let u = uniform(50, -3.0, 3.0, 8);
    let p = params(&omega, 5.0);
    let mut first = vec![0.0; 50];
    nf.evaluate_rhs(&mut first, &u, &p, 0.0);
    for _ in 0..5 {
        let mut again = vec![f64::NAN; 50];
        nf.evaluate_rhs(&mut again, &u, &p, 0.0);
        assert_eq!(first, again);
    }
}

#[test]
fn per_edge_parameters_scale_single_edges() {
    // cutting one edge of a 3-path leaves the other coupling intact
    let g = Graph::undirected(3, vec![(0, 1), (1, 2)]).unwrap();
    let nf = kuramoto(&g, Coupling::Antisymmetric);
    let omega = [0.1, 0.2, 0.3];
    let u = [0.0, 1.0, -0.5];
    let p = ParameterBundle::split(ParamPart::PerComponent(omega.to_vec()), ParamPart::PerComponent(vec![2.0, 0.0]));
    let mut du = [0.0; 3];
    nf.rhs(&mut du, &u, &p, 0.0);
    let expected = [0.1 + 2.0 * (1.0f64).sin(), 0.2 + 2.0 * (-1.0f64).sin(), 0.3];
    assert!(max_abs_diff(&du, &expected) < 1e-15);
}

#[test]
fn directed_edges_feed_destinations_only() {
    let g = Graph::directed(3, vec![(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
    let nf = kuramoto(&g, Coupling::Directed);
    let omega = [0.0; 3];
    let u = [0.3, -0.7, 1.1];
    let mut du = [0.0; 3];
    nf.rhs(&mut du, &u, &params(&omega, 1.0), 0.0);
    assert!(max_abs_diff(&du, &adjacency_oracle(&g, &omega, 1.0, &u)) < 1e-15);
}

#[test]
fn static_vertex_residual_is_exactly_zero_on_target() {
    let g = ring(6);
    let mut vertices = vec![VertexModel::ode(kuramoto_vertex, 1, None).unwrap(); 6];
    vertices[2] = VertexModel::static_vertex(
        |v: &mut [f64], edges: EdgeWindows<'_>, c: &f64, _t: f64| v[0] = c + 0.0 * edges.len() as f64,
        1,
        None,
    )
    .unwrap();
    let e = EdgeModel::static_edge(kuramoto_edge, 1, Coupling::Fiducial).unwrap();
    let nf = network_dynamics(vertices, e, &g).unwrap();
    let omega = uniform(6, -1.0, 1.0, 2);
    let mut u = uniform(6, -1.0, 1.0, 3);
    u[2] = omega[2];
    let mut du = vec![1.0; 6];
    nf.rhs(&mut du, &u, &params(&omega, 3.0), 0.0);
    assert_eq!(du[2], 0.0);
    assert_eq!(nf.mass_diagonal(), &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
}
