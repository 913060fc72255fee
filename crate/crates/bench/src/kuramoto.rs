//! Kuramoto networks assembled from components.

use std::f64::consts::PI;

use netdyn::{
    coupling_sum, network_dynamics, Coupling, EdgeModel, EdgeWindows, Error, Graph, NetworkFunction, ParamPart,
    ParameterBundle, Result, VertexModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Node and edge models to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    /// Vertex replaced by a second-order (inertia) oscillator.
    pub inertia_at: Option<usize>,
    /// Vertex replaced by a static node pinned to its parameter.
    pub static_at: Option<usize>,
    /// Edges read the destination phase one lag in the past.
    pub delayed: bool,
    pub coupling: Coupling,
}

impl Default for Variant {
    fn default() -> Self {
        Self {
            inertia_at: None,
            static_at: None,
            delayed: false,
            coupling: Coupling::Antisymmetric,
        }
    }
}

impl Variant {
    pub fn first_order() -> Self {
        Self::default()
    }

    /// Inertia and static vertices mixed into the ring, with fiducial
    /// (call-twice) edges.
    pub fn heterogeneous(inertia_at: usize, static_at: usize) -> Self {
        Self {
            inertia_at: Some(inertia_at),
            static_at: Some(static_at),
            delayed: false,
            coupling: Coupling::Fiducial,
        }
    }

    pub fn with_delay(mut self) -> Self {
        self.delayed = true;
        self.coupling = Coupling::Fiducial;
        self
    }
}

/// How frequencies and initial phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitData {
    /// `ω_i = x0_i = (i - (N + 1) / 2) / N` for `i = 1..=N`.
    Deterministic,
    /// `N` frequencies then `N` phases, uniform on `[-π, π]`.
    Seeded(u64),
}

pub struct KuramotoNetwork {
    pub nf: NetworkFunction<f64>,
    /// One intrinsic frequency per vertex (the static vertex's target).
    pub omega: Vec<f64>,
    /// Flat initial state; the inertia vertex gets frequency 3 after its phase.
    pub x0: Vec<f64>,
}

impl KuramotoNetwork {
    pub fn params(&self, sigma: f64) -> ParameterBundle<f64> {
        ParameterBundle::split(ParamPart::PerComponent(self.omega.clone()), ParamPart::Uniform(sigma))
    }

    /// Per-edge coupling strengths, so individual edges can be cut.
    pub fn params_per_edge(&self, sigma: f64) -> ParameterBundle<f64> {
        let m = self.nf.graph_struct().n_edges();
        ParameterBundle::split(ParamPart::PerComponent(self.omega.clone()), ParamPart::PerComponent(vec![sigma; m]))
    }

    /// State indices of every phase variable.
    pub fn phase_indices(&self) -> Vec<usize> {
        self.nf.idx_containing("θ")
    }
}

pub fn kuramoto_vertex(dv: &mut [f64], _v: &[f64], edges: EdgeWindows<'_>, omega: &f64, _t: f64) {
    dv[0] = *omega;
    coupling_sum(dv, edges);
}

pub fn inertia_vertex(dv: &mut [f64], v: &[f64], edges: EdgeWindows<'_>, p: &f64, _t: f64) {
    dv[0] = v[1];
    dv[1] = p - v[1];
    for e in edges {
        dv[1] += e[0];
    }
}

pub fn static_vertex(theta: &mut [f64], _edges: EdgeWindows<'_>, c: &f64, _t: f64) {
    theta.fill(*c);
}

pub fn kuramoto_edge(e: &mut [f64], vs: &[f64], vd: &[f64], sigma: &f64, _t: f64) {
    e[0] = sigma * (vs[0] - vd[0]).sin();
}

pub fn delay_edge(e: &mut [f64], vs: &[f64], _vd: &[f64], _hs: &[f64], hd: &[f64], sigma: &f64, _t: f64) {
    e[0] = sigma * (vs[0] - hd[0]).sin();
}

pub fn first_order_model() -> VertexModel<f64> {
    VertexModel::ode(kuramoto_vertex, 1, Some(vec!["θ".into()])).expect("valid model")
}

pub fn edge_model(variant: &Variant) -> EdgeModel<f64> {
    if variant.delayed {
        EdgeModel::static_delay_edge(delay_edge, 1, variant.coupling)
    } else {
        EdgeModel::static_edge(kuramoto_edge, 1, variant.coupling)
    }
    .expect("valid model")
}

pub fn initial_data(n: usize, init: InitData) -> (Vec<f64>, Vec<f64>) {
    match init {
        InitData::Deterministic => {
            let mean = (n as f64 + 1.0) / 2.0;
            let v: Vec<f64> = (1..=n).map(|i| (i as f64 - mean) / n as f64).collect();
            (v.clone(), v)
        }
        InitData::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omega = (0..n).map(|_| rng.random_range(-PI..=PI)).collect();
            let x0 = (0..n).map(|_| rng.random_range(-PI..=PI)).collect();
            (omega, x0)
        }
    }
}

/// Assembles a Kuramoto network with optional inertia/static vertices.
pub fn build_kuramoto(n: usize, graph: &Graph, variant: Variant, init: InitData) -> Result<KuramotoNetwork> {
    if graph.n_vertices() != n {
        return Err(Error::LengthMismatch {
            what: "graph vertices",
            expected: n,
            got: graph.n_vertices(),
        });
    }
    for idx in [variant.inertia_at, variant.static_at].into_iter().flatten() {
        if idx >= n {
            return Err(Error::IndexOutOfRange {
                what: "vertex variant",
                index: idx,
                len: n,
            });
        }
    }
    if variant.inertia_at.is_some() && variant.inertia_at == variant.static_at {
        return Err(Error::InvalidParameter("inertia and static vertex must differ".into()));
    }

    let mut vertices = vec![first_order_model(); n];
    if let Some(i) = variant.inertia_at {
        vertices[i] = VertexModel::ode(inertia_vertex, 2, Some(vec!["θ".into(), "ω".into()]))?;
    }
    if let Some(i) = variant.static_at {
        vertices[i] = VertexModel::static_vertex(static_vertex, 1, Some(vec!["θ".into()]))?;
    }
    let nf = network_dynamics(vertices, edge_model(&variant), graph)?;

    let (omega, mut x0) = initial_data(n, init);
    if let Some(i) = variant.inertia_at {
        x0.insert(i + 1, 3.0);
    }
    Ok(KuramotoNetwork { nf, omega, x0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use netdyn::{graphs, DynamicalSystem};

    #[test]
    fn deterministic_frequencies() {
        let (omega, x0) = initial_data(10, InitData::Deterministic);
        let expected = [-0.45, -0.35, -0.25, -0.15, -0.05, 0.05, 0.15, 0.25, 0.35, 0.45];
        for (w, e) in omega.iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
        assert_eq!(omega, x0);
    }

    #[test]
    fn seeded_data_is_reproducible_and_bounded() {
        let a = initial_data(50, InitData::Seeded(3));
        assert_eq!(a, initial_data(50, InitData::Seeded(3)));
        assert_ne!(a, initial_data(50, InitData::Seeded(4)));
        assert!(a.0.iter().chain(&a.1).all(|x| x.abs() <= PI));
    }

    #[test]
    fn inertia_adds_a_state() {
        let g = graphs::watts_strogatz(10, 2, 0.0, 0).unwrap();
        let net = build_kuramoto(10, &g, Variant::heterogeneous(0, 4), InitData::Deterministic).unwrap();
        assert_eq!(net.nf.dim(), 11);
        assert_eq!(net.x0.len(), 11);
        assert_eq!(net.x0[1], 3.0);
        assert_eq!(net.phase_indices().len(), 10);
        assert_eq!(net.nf.mass_diagonal()[5], 0.0);
    }

    #[test]
    fn invalid_indices() {
        let g = graphs::watts_strogatz(10, 2, 0.0, 0).unwrap();
        let v = Variant {
            inertia_at: Some(10),
            ..Variant::default()
        };
        assert!(build_kuramoto(10, &g, v, InitData::Deterministic).is_err());
        assert!(build_kuramoto(10, &g, Variant::heterogeneous(2, 2), InitData::Deterministic).is_err());
        assert!(build_kuramoto(9, &g, Variant::default(), InitData::Deterministic).is_err());
    }

    #[test]
    fn isolated_vertex_runs_at_its_frequency() {
        let g = Graph::undirected(1, vec![]).unwrap();
        let net = build_kuramoto(1, &g, Variant::default(), InitData::Seeded(1)).unwrap();
        let p = net.params(5.0);
        let mut du = [0.0];
        for theta in [-2.0, 0.0, 1.3] {
            net.nf.rhs(&mut du, &[theta], &p, 0.0);
            assert_eq!(du[0], net.omega[0]);
        }
    }
}
