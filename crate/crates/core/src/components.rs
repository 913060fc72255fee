//! Vertex and edge component models.
//!
//! A model pairs a user callable with the information the assembly needs:
//! what kind of equation it represents, its dimension, symbol names and (for
//! edges) how the coupling behaves under orientation reversal. Callables write
//! their output in place and return nothing.
//!
//! Calling conventions (all windows are slices into preallocated buffers):
//!
//! | kind          | arguments                                         |
//! |---------------|---------------------------------------------------|
//! | ODE vertex    | `(dv, v, incoming_edges, p, t)`                   |
//! | static vertex | `(v_target, incoming_edges, p, t)`                |
//! | static edge   | `(e, v_src, v_dst, p, t)`                         |
//! | delay edge    | `(e, v_src, v_dst, h_v_src, h_v_dst, p, t)`       |
//! | ODE edge      | `(de, e, v_src, v_dst, p, t)`                     |

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::netcore::EdgeWindows;

pub type OdeVertexFn<P> = dyn Fn(&mut [f64], &[f64], EdgeWindows<'_>, &P, f64) + Send + Sync;
pub type StaticVertexFn<P> = dyn Fn(&mut [f64], EdgeWindows<'_>, &P, f64) + Send + Sync;
pub type StaticEdgeFn<P> = dyn Fn(&mut [f64], &[f64], &[f64], &P, f64) + Send + Sync;
pub type DelayEdgeFn<P> =
    dyn Fn(&mut [f64], &[f64], &[f64], &[f64], &[f64], &P, f64) + Send + Sync;
pub type OdeEdgeFn<P> = dyn Fn(&mut [f64], &[f64], &[f64], &[f64], &P, f64) + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Ode,
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Static,
    StaticDelay,
    Ode,
}

/// How an edge function relates its two orientations.
///
/// On undirected graphs `Fiducial` and `Undirected` call the function once per
/// orientation, `Symmetric` and `Antisymmetric` call it once and copy (or
/// negate) the result for the fiducial source. `Directed` calls it once and
/// only the destination sees the value. On directed graphs every edge is
/// called once in its natural orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    Directed,
    Undirected,
    Symmetric,
    Antisymmetric,
    #[default]
    Fiducial,
}

pub(crate) enum VertexFn<P> {
    Ode(Arc<OdeVertexFn<P>>),
    Static(Arc<StaticVertexFn<P>>),
}

pub(crate) enum EdgeFn<P> {
    Static(Arc<StaticEdgeFn<P>>),
    StaticDelay(Arc<DelayEdgeFn<P>>),
    Ode(Arc<OdeEdgeFn<P>>),
}

pub struct VertexModel<P = f64> {
    dim: usize,
    symbols: Vec<String>,
    pub(crate) func: VertexFn<P>,
}

pub struct EdgeModel<P = f64> {
    dim: usize,
    coupling: Coupling,
    symbols: Vec<String>,
    pub(crate) func: EdgeFn<P>,
}

impl<P> VertexFn<P> {
    pub(crate) fn same_callable(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Ode(a), Self::Ode(b)) => Arc::ptr_eq(a, b),
            (Self::Static(a), Self::Static(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl<P> EdgeFn<P> {
    pub(crate) fn same_callable(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Static(a), Self::Static(b)) => Arc::ptr_eq(a, b),
            (Self::StaticDelay(a), Self::StaticDelay(b)) => Arc::ptr_eq(a, b),
            (Self::Ode(a), Self::Ode(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl<P> Clone for VertexFn<P> {
    fn clone(&self) -> Self {
        match self {
            Self::Ode(f) => Self::Ode(Arc::clone(f)),
            Self::Static(f) => Self::Static(Arc::clone(f)),
        }
    }
}

impl<P> Clone for EdgeFn<P> {
    fn clone(&self) -> Self {
        match self {
            Self::Static(f) => Self::Static(Arc::clone(f)),
            Self::StaticDelay(f) => Self::StaticDelay(Arc::clone(f)),
            Self::Ode(f) => Self::Ode(Arc::clone(f)),
        }
    }
}

impl<P> Clone for VertexModel<P> {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            symbols: self.symbols.clone(),
            func: self.func.clone(),
        }
    }
}

impl<P> Clone for EdgeModel<P> {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            coupling: self.coupling,
            symbols: self.symbols.clone(),
            func: self.func.clone(),
        }
    }
}

fn checked_symbols(dim: usize, symbols: Option<Vec<String>>, prefix: &str) -> Result<Vec<String>> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "component dimension must be at least 1".into(),
        ));
    }
    match symbols {
        None => Ok((1..=dim).map(|i| format!("{prefix}_{i}")).collect()),
        Some(s) if s.len() == dim => Ok(s),
        Some(s) => Err(Error::LengthMismatch {
            what: "symbols",
            expected: dim,
            got: s.len(),
        }),
    }
}

impl<P> VertexModel<P> {
    /// Vertex whose states evolve as `dv = f(v, edges, p, t)`.
    pub fn ode<F>(f: F, dim: usize, symbols: Option<Vec<String>>) -> Result<Self>
    where
        F: Fn(&mut [f64], &[f64], EdgeWindows<'_>, &P, f64) + Send + Sync + 'static,
    {
        Ok(Self {
            symbols: checked_symbols(dim, symbols, "v")?,
            dim,
            func: VertexFn::Ode(Arc::new(f)),
        })
    }

    /// Vertex whose states are fixed by an algebraic relation: the callable
    /// writes the value the state must equal. In the assembled system this
    /// becomes the residual `target - v` with a zero mass-matrix row.
    pub fn static_vertex<F>(f: F, dim: usize, symbols: Option<Vec<String>>) -> Result<Self>
    where
        F: Fn(&mut [f64], EdgeWindows<'_>, &P, f64) + Send + Sync + 'static,
    {
        Ok(Self {
            symbols: checked_symbols(dim, symbols, "v")?,
            dim,
            func: VertexFn::Static(Arc::new(f)),
        })
    }

    pub fn kind(&self) -> VertexKind {
        match self.func {
            VertexFn::Ode(_) => VertexKind::Ode,
            VertexFn::Static(_) => VertexKind::Static,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Uniform vertex signature used by the assembly loop. Static vertices
    /// write `target - v` into `dv`.
    #[inline]
    pub(crate) fn call(&self, dv: &mut [f64], v: &[f64], edges: EdgeWindows<'_>, p: &P, t: f64) {
        match &self.func {
            VertexFn::Ode(f) => f(dv, v, edges, p, t),
            VertexFn::Static(f) => {
                f(dv, edges, p, t);
                for (r, x) in dv.iter_mut().zip(v) {
                    *r -= x;
                }
            }
        }
    }
}

impl<P> EdgeModel<P> {
    /// Edge whose values are an algebraic function of its endpoint states.
    pub fn static_edge<F>(f: F, dim: usize, coupling: Coupling) -> Result<Self>
    where
        F: Fn(&mut [f64], &[f64], &[f64], &P, f64) + Send + Sync + 'static,
    {
        Ok(Self {
            symbols: checked_symbols(dim, None, "e")?,
            dim,
            coupling,
            func: EdgeFn::Static(Arc::new(f)),
        })
    }

    /// Like [`EdgeModel::static_edge`] but also receives the endpoint states
    /// one lag in the past.
    pub fn static_delay_edge<F>(f: F, dim: usize, coupling: Coupling) -> Result<Self>
    where
        F: Fn(&mut [f64], &[f64], &[f64], &[f64], &[f64], &P, f64) + Send + Sync + 'static,
    {
        Ok(Self {
            symbols: checked_symbols(dim, None, "e")?,
            dim,
            coupling,
            func: EdgeFn::StaticDelay(Arc::new(f)),
        })
    }

    /// Edge with its own dynamic states `de = f(e, v_src, v_dst, p, t)`.
    ///
    /// ODE edges are evaluated once per step whatever the coupling; on an
    /// undirected graph both endpoints see the state `e`, except that with
    /// [`Coupling::Antisymmetric`] the fiducial source sees `-e` and with
    /// [`Coupling::Directed`] it sees nothing.
    pub fn ode<F>(f: F, dim: usize, symbols: Option<Vec<String>>) -> Result<Self>
    where
        F: Fn(&mut [f64], &[f64], &[f64], &[f64], &P, f64) + Send + Sync + 'static,
    {
        Ok(Self {
            symbols: checked_symbols(dim, symbols, "e")?,
            dim,
            coupling: Coupling::default(),
            func: EdgeFn::Ode(Arc::new(f)),
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_symbols(mut self, symbols: Vec<String>) -> Result<Self> {
        self.symbols = checked_symbols(self.dim, Some(symbols), "e")?;
        Ok(self)
    }

    pub fn kind(&self) -> EdgeKind {
        match self.func {
            EdgeFn::Static(_) => EdgeKind::Static,
            EdgeFn::StaticDelay(_) => EdgeKind::StaticDelay,
            EdgeFn::Ode(_) => EdgeKind::Ode,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Uniform edge signature used by the assembly loop. `out` receives the
    /// edge value (or `de` for ODE edges); `e` is the edge state (empty for
    /// static edges); `hs`/`hd` are the delayed endpoint states.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    pub(crate) fn call(
        &self,
        out: &mut [f64],
        e: &[f64],
        vs: &[f64],
        vd: &[f64],
        hs: &[f64],
        hd: &[f64],
        p: &P,
        t: f64,
    ) {
        match &self.func {
            EdgeFn::Static(f) => f(out, vs, vd, p, t),
            EdgeFn::StaticDelay(f) => f(out, vs, vd, hs, hd, p, t),
            EdgeFn::Ode(f) => f(out, e, vs, vd, p, t),
        }
    }
}

impl<P> fmt::Debug for VertexModel<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VertexModel")
            .field("kind", &self.kind())
            .field("dim", &self.dim)
            .field("symbols", &self.symbols)
            .finish_non_exhaustive()
    }
}

impl<P> fmt::Debug for EdgeModel<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeModel")
            .field("kind", &self.kind())
            .field("dim", &self.dim)
            .field("coupling", &self.coupling)
            .field("symbols", &self.symbols)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn kuramoto_vertex(dv: &mut [f64], _v: &[f64], edges: EdgeWindows<'_>, w: &f64, _t: f64) {
        dv[0] = *w;
        for e in edges {
            dv[0] += e[0];
        }
    }

    #[test]
    fn ode_vertex_models() {
        let m = VertexModel::ode(kuramoto_vertex, 1, Some(vec!["θ".into()])).unwrap();
        assert_eq!(m.kind(), VertexKind::Ode);
        assert_eq!(m.symbols(), &["θ".to_string()]);

        let inertia = VertexModel::<f64>::ode(
            |dv, v, _e, p, _t| {
                dv[0] = v[1];
                dv[1] = p - v[1];
            },
            2,
            Some(vec!["θ".into(), "ω".into()]),
        )
        .unwrap();
        assert_eq!(inertia.dim(), 2);
    }

    #[test]
    fn default_symbols() {
        let m = VertexModel::ode(kuramoto_vertex, 3, None).unwrap();
        assert_eq!(m.symbols(), &["v_1", "v_2", "v_3"]);
        let e = EdgeModel::<f64>::static_edge(|_, _, _, _, _| {}, 2, Coupling::Directed).unwrap();
        assert_eq!(e.symbols(), &["e_1", "e_2"]);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(matches!(
            VertexModel::ode(kuramoto_vertex, 0, None),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            VertexModel::ode(kuramoto_vertex, 2, Some(vec!["θ".into()])),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(EdgeModel::<f64>::static_edge(|_, _, _, _, _| {}, 0, Coupling::default()).is_err());
        assert!(EdgeModel::<f64>::ode(|_, _, _, _, _, _| {}, 1, Some(vec![])).is_err());
    }

    #[test]
    fn constructors_never_call() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let _v = VertexModel::<f64>::static_vertex(
            move |_, _, _, _| {
                c.fetch_add(1, Ordering::SeqCst);
            },
            1,
            None,
        )
        .unwrap();
        let c = calls.clone();
        let _e = EdgeModel::<f64>::static_delay_edge(
            move |_, _, _, _, _, _, _| {
                c.fetch_add(1, Ordering::SeqCst);
            },
            1,
            Coupling::Antisymmetric,
        )
        .unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn static_vertex_call_writes_residual() {
        let m = VertexModel::<f64>::static_vertex(|v, _, c, _| v.fill(*c), 2, None).unwrap();
        assert_eq!(m.kind(), VertexKind::Static);
        let mut dv = [0.0; 2];
        m.call(&mut dv, &[1.0, 4.0], EdgeWindows::empty(), &3.0, 0.0);
        assert_eq!(dv, [2.0, -1.0]);
    }

    #[test]
    fn edge_kinds_and_coupling() {
        let e = EdgeModel::<f64>::static_edge(|_, _, _, _, _| {}, 1, Coupling::default()).unwrap();
        assert_eq!(e.kind(), EdgeKind::Static);
        assert_eq!(e.coupling(), Coupling::Fiducial);
        let d = EdgeModel::<f64>::static_delay_edge(|_, _, _, _, _, _, _| {}, 1, Coupling::Undirected)
            .unwrap();
        assert_eq!(d.kind(), EdgeKind::StaticDelay);
        let o = EdgeModel::<f64>::ode(|_, _, _, _, _, _| {}, 1, None)
            .unwrap()
            .with_coupling(Coupling::Directed);
        assert_eq!(o.kind(), EdgeKind::Ode);
        assert_eq!(o.coupling(), Coupling::Directed);
    }
}
