//! Composable dynamical systems on complex networks.
//!
//! A network model is assembled from per-vertex and per-edge component
//! functions plus a [`Graph`]. [`network_dynamics`] precomputes the flat
//! buffer layout once and returns a [`NetworkFunction`] whose right-hand side
//! runs two loops: first over all edges (filling the edge cache), then over
//! all vertices (reading their incoming edge windows).
//!
//! The [`solver`] module integrates any [`DynamicalSystem`]:
//!
//! - [`solver::integrate_dp5`]: adaptive Dormand–Prince 5(4) with dense output
//! - [`solver::integrate_mass_matrix`]: implicit Euler for `M u' = f(u)` with
//!   a diagonal 0/1 mass matrix (static vertices become algebraic rows)
//! - [`solver::integrate_dde`]: method of steps for one constant lag
//!
//! All three accept vector continuous [`solver::EventSpec`] callbacks.
//!
//! ```
//! use netdyn::{graphs, network_dynamics, EdgeModel, EdgeWindows, VertexModel};
//! use netdyn::{Coupling, ParameterBundle, ParamPart, DynamicalSystem};
//!
//! let g = graphs::watts_strogatz(10, 2, 0.0, 0).unwrap();
//! let vertex = VertexModel::ode(
//!     |dv: &mut [f64], _v: &[f64], edges: EdgeWindows<'_>, w: &f64, _t: f64| {
//!         dv[0] = *w;
//!         netdyn::coupling_sum(dv, edges);
//!     },
//!     1,
//!     Some(vec!["θ".into()]),
//! )
//! .unwrap();
//! let edge = EdgeModel::static_edge(
//!     |e: &mut [f64], vs: &[f64], vd: &[f64], s: &f64, _t: f64| e[0] = s * (vs[0] - vd[0]).sin(),
//!     1,
//!     Coupling::Antisymmetric,
//! )
//! .unwrap();
//! let nf = network_dynamics(vertex, edge, &g).unwrap();
//! let p = ParameterBundle::split(ParamPart::Uniform(0.0), ParamPart::Uniform(5.0));
//! let mut du = vec![0.0; nf.dim()];
//! nf.rhs(&mut du, &vec![0.3; 10], &p, 0.0);
//! assert!(du.iter().all(|d| d.abs() < 1e-15));
//! ```

pub mod components;
pub mod convenience;
mod error;
pub mod graphs;
mod linalg;
pub mod netcore;
pub mod solver;

pub use components::{Coupling, EdgeKind, EdgeModel, VertexKind, VertexModel};
pub use error::{Error, Result};
pub use graphs::Graph;
pub use netcore::{
    coupling_sum, network_dynamics, EdgeWindows, GraphDataBuffer, GraphStruct, NetworkFunction,
    ParamPart, ParamSide, ParameterBundle,
};
pub use solver::{DynamicalSystem, Solution, SolverConfig};
