#![allow(dead_code)]

use netdyn::{
    coupling_sum, graphs, network_dynamics, Coupling, DynamicalSystem, EdgeModel, EdgeWindows, Graph,
    NetworkFunction, ParamPart, ParameterBundle, VertexModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn kuramoto_vertex(dv: &mut [f64], _v: &[f64], edges: EdgeWindows<'_>, w: &f64, _t: f64) {
    dv[0] = *w;
    coupling_sum(dv, edges);
}

pub fn kuramoto_edge(e: &mut [f64], vs: &[f64], vd: &[f64], s: &f64, _t: f64) {
    e[0] = s * (vs[0] - vd[0]).sin();
}

pub fn kuramoto(g: &Graph, coupling: Coupling) -> NetworkFunction<f64> {
    let v = VertexModel::ode(kuramoto_vertex, 1, Some(vec!["θ".into()])).unwrap();
    let e = EdgeModel::static_edge(kuramoto_edge, 1, coupling).unwrap();
    network_dynamics(v, e, g).unwrap()
}

pub fn params(omega: &[f64], sigma: f64) -> ParameterBundle<f64> {
    ParameterBundle::split(ParamPart::PerComponent(omega.to_vec()), ParamPart::Uniform(sigma))
}

/// `(i - (N + 1) / 2) / N`, used for both frequencies and initial phases.
pub fn ramp(n: usize) -> Vec<f64> {
    let mean = (n as f64 + 1.0) / 2.0;
    (1..=n).map(|i| (i as f64 - mean) / n as f64).collect()
}

pub fn ring(n: usize) -> Graph {
    graphs::watts_strogatz(n, 2, 0.0, 0).unwrap()
}

/// Erdős–Rényi style graph with edge probability `q`.
pub fn random_graph(n: usize, q: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < q {
                // random stored orientation
                edges.push(if rng.random::<bool>() { (i, j) } else { (j, i) });
            }
        }
    }
    Graph::undirected(n, edges).unwrap()
}

pub fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `du_i = ω_i + σ Σ_j A_ji sin(u_j - u_i)` from the dense adjacency matrix.
pub fn adjacency_oracle(g: &Graph, omega: &[f64], sigma: f64, u: &[f64]) -> Vec<f64> {
    let a = graphs::adjacency(g);
    let n = g.n_vertices();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                if a[(j, i)] != 0 {
                    s += (u[j] - u[i]).sin();
                }
            }
            omega[i] + sigma * s
        })
        .collect()
}

/// Classic fixed-step RK4 over `[t0, t1]` with `n_steps` steps.
pub fn rk4<S: DynamicalSystem<P>, P>(sys: &S, p: &P, u0: &[f64], t0: f64, t1: f64, n_steps: usize) -> Vec<f64> {
    let d = u0.len();
    let h = (t1 - t0) / n_steps as f64;
    let mut u = u0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut y) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for s in 0..n_steps {
        let t = t0 + s as f64 * h;
        sys.rhs(&mut k1, &u, p, t);
        for i in 0..d {
            y[i] = u[i] + 0.5 * h * k1[i];
        }
        sys.rhs(&mut k2, &y, p, t + 0.5 * h);
        for i in 0..d {
            y[i] = u[i] + 0.5 * h * k2[i];
        }
        sys.rhs(&mut k3, &y, p, t + 0.5 * h);
        for i in 0..d {
            y[i] = u[i] + h * k3[i];
        }
        sys.rhs(&mut k4, &y, p, t + h);
        for i in 0..d {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    u
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
