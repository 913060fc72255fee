//! Index precomputation and the assembled right-hand side.
//!
//! State layout: all vertex states first (vertex order), then the states of
//! ODE edges (edge order). The edge cache is a separate flat buffer in which
//! every edge owns one contiguous window; undirected edges own a doubled
//! window whose first half is seen by the fiducial destination and whose
//! second half is seen by the fiducial source.

use std::io::Write;
use std::ops::Range;
use std::sync::{Mutex, TryLockError};

use rayon::prelude::*;

use crate::components::{Coupling, EdgeFn, EdgeKind, EdgeModel, VertexFn, VertexKind, VertexModel};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::solver::DynamicalSystem;

/// A contiguous slice `[offset, offset + len)` of a flat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub offset: usize,
    pub len: usize,
}

impl Window {
    #[inline]
    pub fn range(self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// The incoming edge values of one vertex, borrowed from the edge cache.
#[derive(Clone, Copy)]
pub struct EdgeWindows<'a> {
    cache: &'a [f64],
    windows: &'a [Window],
}

impl<'a> EdgeWindows<'a> {
    #[inline]
    pub fn new(cache: &'a [f64], windows: &'a [Window]) -> Self {
        Self { cache, windows }
    }

    pub fn empty() -> Self {
        Self {
            cache: &[],
            windows: &[],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &'a [f64] {
        &self.cache[self.windows[i].range()]
    }

    #[inline]
    pub fn iter(&self) -> EdgeWindowIter<'a> {
        EdgeWindowIter {
            cache: self.cache,
            windows: self.windows.iter(),
        }
    }
}

impl<'a> IntoIterator for EdgeWindows<'a> {
    type Item = &'a [f64];
    type IntoIter = EdgeWindowIter<'a>;

    #[inline]
    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

pub struct EdgeWindowIter<'a> {
    cache: &'a [f64],
    windows: std::slice::Iter<'a, Window>,
}

impl<'a> Iterator for EdgeWindowIter<'a> {
    type Item = &'a [f64];

    #[inline]
    fn next(&mut self) -> Option<&'a [f64]> {
        self.windows.next().map(|w| &self.cache[w.range()])
    }

    #[inline]
    fn size_hint(&self) -> (usize, Option<usize>) {
        self.windows.size_hint()
    }
}

impl ExactSizeIterator for EdgeWindowIter<'_> {}

/// Adds every incoming edge window to `dv` elementwise (over the shorter of
/// the two lengths).
#[inline]
pub fn coupling_sum(dv: &mut [f64], edges: EdgeWindows<'_>) {
    if let [d] = dv {
        for w in edges.windows {
            if w.len > 0 {
                *d += edges.cache[w.offset];
            }
        }
        return;
    }
    for e in edges {
        let n = dv.len().min(e.len());
        for i in 0..n {
            dv[i] += e[i];
        }
    }
}

/// Resolved per-edge evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMode {
    /// Called once, destination only.
    Directed,
    /// Called once per orientation.
    CallTwice,
    /// Called once, value copied to the source half.
    Symmetric,
    /// Called once, value negated into the source half.
    Antisymmetric,
}

#[derive(Debug, Clone)]
pub struct EdgeLayout {
    pub src: usize,
    pub dst: usize,
    pub src_state: Window,
    pub dst_state: Window,
    /// Window in the edge cache; `len` is twice the model dimension for
    /// doubled (undirected) edges.
    pub cache: Window,
    /// Window in the state vector for ODE edges.
    pub state: Option<Window>,
    pub mode: EdgeMode,
}

impl EdgeLayout {
    pub fn is_doubled(&self) -> bool {
        self.mode != EdgeMode::Directed
    }

    pub fn model_dim(&self) -> usize {
        if self.is_doubled() {
            self.cache.len / 2
        } else {
            self.cache.len
        }
    }
}

/// Static index information computed once from the graph and the models.
#[derive(Debug, Clone)]
pub struct GraphStruct {
    pub vertex_states: Vec<Window>,
    incoming_ptr: Vec<usize>,
    incoming: Vec<Window>,
    pub edges: Vec<EdgeLayout>,
    /// Total number of vertex states (the vertex part of the state vector).
    pub vertex_dim: usize,
    /// Full state dimension `D`.
    pub state_dim: usize,
    /// Edge cache length `E`.
    pub cache_dim: usize,
    // compact copy of the offsets read by the edge loop
    hot: Vec<HotEdge>,
}

#[derive(Debug, Clone, Copy)]
struct HotEdge {
    src: u32,
    src_len: u32,
    dst: u32,
    dst_len: u32,
    cache: u32,
}

impl HotEdge {
    #[inline(always)]
    fn ends<'a>(&self, x: &'a [f64], reversed: bool) -> (&'a [f64], &'a [f64]) {
        let s = &x[self.src as usize..(self.src + self.src_len) as usize];
        let d = &x[self.dst as usize..(self.dst + self.dst_len) as usize];
        if reversed {
            (d, s)
        } else {
            (s, d)
        }
    }
}

impl GraphStruct {
    pub fn n_vertices(&self) -> usize {
        self.vertex_states.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Cache windows a vertex reads, in edge order.
    #[inline]
    pub fn incoming(&self, v: usize) -> &[Window] {
        &self.incoming[self.incoming_ptr[v]..self.incoming_ptr[v + 1]]
    }
}

/// Mutable per-evaluation storage. Vertex states are read directly from the
/// state vector (they occupy its leading `vertex_dim` entries), so the buffer
/// only holds the linearized edge values.
#[derive(Debug, Clone)]
pub struct GraphDataBuffer {
    e_array: Vec<f64>,
}

impl GraphDataBuffer {
    pub fn e_array(&self) -> &[f64] {
        &self.e_array
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamPart<P> {
    Uniform(P),
    PerComponent(Vec<P>),
}

/// Parameters as seen by the component functions. `Global` is passed to
/// every component; `Split` routes the first part to vertices and the second
/// to edges, either uniformly or element `i` to component `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterBundle<P> {
    Global(P),
    Split { vertex: ParamPart<P>, edge: ParamPart<P> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSide {
    Vertex,
    Edge,
}

impl<P> ParameterBundle<P> {
    pub fn split(vertex: ParamPart<P>, edge: ParamPart<P>) -> Self {
        Self::Split { vertex, edge }
    }

    pub fn resolve(&self, side: ParamSide, index: usize) -> Result<&P> {
        let part = match (self, side) {
            (Self::Global(p), _) => return Ok(p),
            (Self::Split { vertex, .. }, ParamSide::Vertex) => vertex,
            (Self::Split { edge, .. }, ParamSide::Edge) => edge,
        };
        match part {
            ParamPart::Uniform(p) => Ok(p),
            ParamPart::PerComponent(ps) => ps.get(index).ok_or(Error::IndexOutOfRange {
                what: match side {
                    ParamSide::Vertex => "vertex parameters",
                    ParamSide::Edge => "edge parameters",
                },
                index,
                len: ps.len(),
            }),
        }
    }

    #[inline]
    fn uniform_vertex(&self) -> Option<&P> {
        match self {
            Self::Global(p) | Self::Split { vertex: ParamPart::Uniform(p), .. } => Some(p),
            _ => None,
        }
    }

    #[inline]
    fn uniform_edge(&self) -> Option<&P> {
        match self {
            Self::Global(p) | Self::Split { edge: ParamPart::Uniform(p), .. } => Some(p),
            _ => None,
        }
    }

    #[inline]
    fn vertex(&self, i: usize) -> &P {
        match self {
            Self::Global(p) => p,
            Self::Split { vertex, .. } => vertex.get(i),
        }
    }

    #[inline]
    fn edge(&self, i: usize) -> &P {
        match self {
            Self::Global(p) => p,
            Self::Split { edge, .. } => edge.get(i),
        }
    }

    pub fn edge_part_mut(&mut self) -> Option<&mut ParamPart<P>> {
        match self {
            Self::Global(_) => None,
            Self::Split { edge, .. } => Some(edge),
        }
    }

    pub fn vertex_part_mut(&mut self) -> Option<&mut ParamPart<P>> {
        match self {
            Self::Global(_) => None,
            Self::Split { vertex, .. } => Some(vertex),
        }
    }
}

impl<P> ParamPart<P> {
    #[inline]
    fn get(&self, i: usize) -> &P {
        match self {
            Self::Uniform(p) => p,
            Self::PerComponent(ps) => &ps[i],
        }
    }

    fn check_len(&self, what: &'static str, expected: usize) -> Result<()> {
        match self {
            Self::PerComponent(ps) if ps.len() != expected => Err(Error::LengthMismatch {
                what,
                expected,
                got: ps.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// Either one model broadcast to every component or one model per component.
pub enum Models<T> {
    One(T),
    Many(Vec<T>),
}

impl<P> From<VertexModel<P>> for Models<VertexModel<P>> {
    fn from(m: VertexModel<P>) -> Self {
        Self::One(m)
    }
}

impl<P> From<EdgeModel<P>> for Models<EdgeModel<P>> {
    fn from(m: EdgeModel<P>) -> Self {
        Self::One(m)
    }
}

impl<T> From<Vec<T>> for Models<T> {
    fn from(v: Vec<T>) -> Self {
        Self::Many(v)
    }
}

impl<T: Clone> Models<T> {
    fn expand(self, n: usize, what: &'static str) -> Result<Vec<T>> {
        match self {
            Self::One(m) => Ok(vec![m; n]),
            Self::Many(v) if v.len() == n => Ok(v),
            Self::Many(v) => Err(Error::LengthMismatch {
                what,
                expected: n,
                got: v.len(),
            }),
        }
    }
}

/// The assembled coupled system.
pub struct NetworkFunction<P = f64> {
    graph_struct: GraphStruct,
    vertex_models: Vec<VertexModel<P>>,
    edge_models: Vec<EdgeModel<P>>,
    mass_diagonal: Vec<f64>,
    symbols: Vec<String>,
    has_delay: bool,
    parallel: bool,
    // consecutive components sharing one callable (and, for edges, one mode)
    vertex_runs: Vec<Range<usize>>,
    edge_runs: Vec<Range<usize>>,
    buffer: Mutex<GraphDataBuffer>,
}

/// Splits `0..n` into maximal runs where `same(i - 1, i)` holds.
fn runs(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || !same(i - 1, i) {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Assembles a [`NetworkFunction`] from vertex and edge models and a graph.
///
/// Single models are broadcast to every vertex (edge); vectors must have one
/// entry per vertex (edge) in graph order.
pub fn network_dynamics<P>(
    vertices: impl Into<Models<VertexModel<P>>>,
    edges: impl Into<Models<EdgeModel<P>>>,
    g: &Graph,
) -> Result<NetworkFunction<P>> {
    let vertex_models = vertices.into().expand(g.n_vertices(), "vertex models")?;
    let edge_models = edges.into().expand(g.n_edges(), "edge models")?;

    let mut vertex_states = Vec::with_capacity(vertex_models.len());
    let mut offset = 0;
    for m in &vertex_models {
        vertex_states.push(Window {
            offset,
            len: m.dim(),
        });
        offset += m.dim();
    }
    let vertex_dim = offset;

    let mut layouts = Vec::with_capacity(edge_models.len());
    let mut cache_offset = 0;
    let mut state_offset = vertex_dim;
    for (j, (m, &(src, dst))) in edge_models.iter().zip(g.edges()).enumerate() {
        let mode = resolve_mode(m, g.is_directed()).map_err(|e| match e {
            Error::Unsupported(msg) => Error::Unsupported(format!("edge {j}: {msg}")),
            other => other,
        })?;
        let cache_len = if mode == EdgeMode::Directed {
            m.dim()
        } else {
            2 * m.dim()
        };
        let state = (m.kind() == EdgeKind::Ode).then(|| {
            let w = Window {
                offset: state_offset,
                len: m.dim(),
            };
            state_offset += m.dim();
            w
        });
        layouts.push(EdgeLayout {
            src,
            dst,
            src_state: vertex_states[src],
            dst_state: vertex_states[dst],
            cache: Window {
                offset: cache_offset,
                len: cache_len,
            },
            state,
            mode,
        });
        cache_offset += cache_len;
    }
    let state_dim = state_offset;
    let cache_dim = cache_offset;

    let mut per_vertex: Vec<Vec<Window>> = vec![Vec::new(); g.n_vertices()];
    for l in &layouts {
        let d = l.model_dim();
        per_vertex[l.dst].push(Window {
            offset: l.cache.offset,
            len: d,
        });
        if l.is_doubled() {
            per_vertex[l.src].push(Window {
                offset: l.cache.offset + d,
                len: d,
            });
        }
    }
    let mut incoming_ptr = Vec::with_capacity(g.n_vertices() + 1);
    let mut incoming = Vec::new();
    incoming_ptr.push(0);
    for ws in per_vertex {
        incoming.extend(ws);
        incoming_ptr.push(incoming.len());
    }

    let mut mass_diagonal = vec![1.0; state_dim];
    let mut symbols = Vec::with_capacity(state_dim);
    for (v, m) in vertex_models.iter().enumerate() {
        if m.kind() == VertexKind::Static {
            mass_diagonal[vertex_states[v].range()].fill(0.0);
        }
        symbols.extend(m.symbols().iter().map(|s| format!("{s}_{v}")));
    }
    for (j, m) in edge_models.iter().enumerate() {
        if m.kind() == EdgeKind::Ode {
            symbols.extend(m.symbols().iter().map(|s| format!("{s}_{j}")));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(symbols.len());
    for s in &symbols {
        if !seen.insert(s.as_str()) {
            return Err(Error::DuplicateSymbol(s.clone()));
        }
    }

    let has_delay = edge_models
        .iter()
        .any(|m| m.kind() == EdgeKind::StaticDelay);

    if state_dim.max(cache_dim) > u32::MAX as usize / 2 {
        return Err(Error::InvalidParameter("network too large for 32-bit offsets".into()));
    }
    let hot = layouts
        .iter()
        .map(|l| HotEdge {
            src: l.src_state.offset as u32,
            src_len: l.src_state.len as u32,
            dst: l.dst_state.offset as u32,
            dst_len: l.dst_state.len as u32,
            cache: l.cache.offset as u32,
        })
        .collect();

    let vertex_runs = runs(vertex_models.len(), |a, b| {
        let (x, y) = (&vertex_models[a], &vertex_models[b]);
        x.dim() == y.dim() && x.func.same_callable(&y.func)
    });
    let edge_runs = runs(edge_models.len(), |a, b| {
        let (x, y) = (&edge_models[a], &edge_models[b]);
        x.func.same_callable(&y.func) && layouts[a].mode == layouts[b].mode && x.dim() == y.dim()
    });

    Ok(NetworkFunction {
        graph_struct: GraphStruct {
            vertex_states,
            incoming_ptr,
            incoming,
            hot,
            edges: layouts,
            vertex_dim,
            state_dim,
            cache_dim,
        },
        vertex_models,
        edge_models,
        mass_diagonal,
        symbols,
        has_delay,
        parallel: false,
        vertex_runs,
        edge_runs,
        buffer: Mutex::new(GraphDataBuffer {
            e_array: vec![0.0; cache_dim],
        }),
    })
}

fn resolve_mode<P>(m: &EdgeModel<P>, directed: bool) -> Result<EdgeMode> {
    let c = m.coupling();
    if directed {
        return match c {
            Coupling::Symmetric | Coupling::Antisymmetric => Err(Error::Unsupported(format!(
                "{c:?} coupling requires an undirected graph"
            ))),
            _ => Ok(EdgeMode::Directed),
        };
    }
    Ok(match (m.kind(), c) {
        (_, Coupling::Directed) => EdgeMode::Directed,
        (_, Coupling::Antisymmetric) => EdgeMode::Antisymmetric,
        (_, Coupling::Symmetric) => EdgeMode::Symmetric,
        // an ODE edge has a single state; both endpoints see it
        (EdgeKind::Ode, _) => EdgeMode::Symmetric,
        (_, Coupling::Fiducial | Coupling::Undirected) => EdgeMode::CallTwice,
    })
}

/// Splits `buf` into consecutive windows of the given lengths.
fn split_windows(mut buf: &mut [f64], lens: impl Iterator<Item = usize>) -> Vec<&mut [f64]> {
    let mut out = Vec::with_capacity(lens.size_hint().0);
    for len in lens {
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(len);
        out.push(head);
        buf = tail;
    }
    out
}

impl<P> NetworkFunction<P> {
    /// Enables threaded evaluation of both core loops. Component callables
    /// must be reentrant. Results equal the sequential mode bitwise.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn graph_struct(&self) -> &GraphStruct {
        &self.graph_struct
    }

    pub fn dim(&self) -> usize {
        self.graph_struct.state_dim
    }

    pub fn mass_diagonal(&self) -> &[f64] {
        &self.mass_diagonal
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn has_delay(&self) -> bool {
        self.has_delay
    }

    pub fn vertex_models(&self) -> &[VertexModel<P>] {
        &self.vertex_models
    }

    pub fn edge_models(&self) -> &[EdgeModel<P>] {
        &self.edge_models
    }

    pub fn new_buffer(&self) -> GraphDataBuffer {
        GraphDataBuffer {
            e_array: vec![0.0; self.graph_struct.cache_dim],
        }
    }

    /// Composite symbols (`<symbol>_<component index>`) containing `fragment`,
    /// in state order.
    pub fn syms_containing(&self, fragment: &str) -> Vec<&str> {
        self.symbols
            .iter()
            .filter(|s| s.contains(fragment))
            .map(String::as_str)
            .collect()
    }

    /// State indices whose composite symbol contains `fragment`.
    pub fn idx_containing(&self, fragment: &str) -> Vec<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(fragment))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    /// Writes the symbol table as `name index` lines.
    pub fn write_symbol_table<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, s) in self.symbols.iter().enumerate() {
            writeln!(out, "{s} {i}")?;
        }
        Ok(())
    }

    /// Checks that per-component parameter arrays match the component counts.
    pub fn check_params(&self, p: &ParameterBundle<P>) -> Result<()> {
        if let ParameterBundle::Split { vertex, edge } = p {
            vertex.check_len("vertex parameters", self.graph_struct.n_vertices())?;
            edge.check_len("edge parameters", self.graph_struct.n_edges())?;
        }
        Ok(())
    }
}

impl<P: Sync> NetworkFunction<P> {
    /// Evaluates `du = f(u, p, t)`. Delay edges read the current state as
    /// their history.
    pub fn evaluate_rhs(&self, du: &mut [f64], u: &[f64], p: &ParameterBundle<P>, t: f64) {
        self.evaluate_rhs_delayed(du, u, u, p, t)
    }

    /// Evaluates the right-hand side with `history` holding the full state
    /// one lag in the past (read only by delay edges).
    pub fn evaluate_rhs_delayed(
        &self,
        du: &mut [f64],
        u: &[f64],
        history: &[f64],
        p: &ParameterBundle<P>,
        t: f64,
    ) {
        match self.buffer.try_lock() {
            Ok(mut buf) => self.eval(&mut buf.e_array, du, u, history, p, t),
            Err(TryLockError::Poisoned(poisoned)) => {
                let mut buf = poisoned.into_inner();
                self.eval(&mut buf.e_array, du, u, history, p, t)
            }
            // another thread is evaluating with the shared cache
            Err(TryLockError::WouldBlock) => {
                let mut buf = self.new_buffer();
                self.eval(&mut buf.e_array, du, u, history, p, t)
            }
        }
    }

    /// Same as [`evaluate_rhs_delayed`](Self::evaluate_rhs_delayed) with a
    /// caller-owned buffer; the edge values stay inspectable afterwards.
    pub fn evaluate_rhs_with(
        &self,
        buf: &mut GraphDataBuffer,
        du: &mut [f64],
        u: &[f64],
        history: &[f64],
        p: &ParameterBundle<P>,
        t: f64,
    ) {
        self.eval(&mut buf.e_array, du, u, history, p, t)
    }

    fn eval(
        &self,
        cache: &mut [f64],
        du: &mut [f64],
        u: &[f64],
        history: &[f64],
        p: &ParameterBundle<P>,
        t: f64,
    ) {
        let gs = &self.graph_struct;
        assert_eq!(du.len(), gs.state_dim, "du has wrong length");
        assert_eq!(u.len(), gs.state_dim, "u has wrong length");
        assert_eq!(history.len(), gs.state_dim, "history has wrong length");
        assert_eq!(cache.len(), gs.cache_dim, "edge cache has wrong length");

        if self.parallel {
            self.eval_parallel(cache, du, u, history, p, t);
            return;
        }

        for run in &self.edge_runs {
            let m = &self.edge_models[run.start];
            let layouts = &gs.edges[run.clone()];
            let hot = &gs.hot[run.clone()];
            let mode = layouts[0].mode;
            match &m.func {
                EdgeFn::Static(f) => static_edge_run(hot, mode, m.dim(), run.start, cache, p, |out, h, rev, q| {
                    let (vs, vd) = h.ends(u, rev);
                    f(out, vs, vd, q, t)
                }),
                EdgeFn::StaticDelay(f) => static_edge_run(hot, mode, m.dim(), run.start, cache, p, |out, h, rev, q| {
                    let (vs, vd) = h.ends(u, rev);
                    let (hs, hd) = h.ends(history, rev);
                    f(out, vs, vd, hs, hd, q, t)
                }),
                EdgeFn::Ode(_) => {
                    for (j, l) in run.clone().zip(layouts) {
                        let de = match l.state {
                            Some(w) => &mut du[w.range()],
                            None => &mut [][..],
                        };
                        edge_step(l, m, &mut cache[l.cache.range()], de, u, history, p.edge(j), t);
                    }
                }
            }
        }

        let cache = &*cache;
        for run in &self.vertex_runs {
            let uniform = p.uniform_vertex();
            match &self.vertex_models[run.start].func {
                VertexFn::Ode(f) => {
                    for v in run.clone() {
                        let w = gs.vertex_states[v];
                        let q = uniform.unwrap_or_else(|| p.vertex(v));
                        f(&mut du[w.range()], &u[w.range()], EdgeWindows::new(cache, gs.incoming(v)), q, t);
                    }
                }
                VertexFn::Static(_) => {
                    for v in run.clone() {
                        let w = gs.vertex_states[v];
                        let edges = EdgeWindows::new(cache, gs.incoming(v));
                        self.vertex_models[v].call(&mut du[w.range()], &u[w.range()], edges, p.vertex(v), t);
                    }
                }
            }
        }
    }

    fn eval_parallel(
        &self,
        cache: &mut [f64],
        du: &mut [f64],
        u: &[f64],
        history: &[f64],
        p: &ParameterBundle<P>,
        t: f64,
    ) {
        let gs = &self.graph_struct;
        let (du_vertices, du_edges) = du.split_at_mut(gs.vertex_dim);

        let cache_windows = split_windows(cache, gs.edges.iter().map(|l| l.cache.len));
        let state_windows = split_windows(
            du_edges,
            gs.edges.iter().map(|l| l.state.map_or(0, |w| w.len)),
        );
        cache_windows
            .into_par_iter()
            .zip(state_windows)
            .enumerate()
            .for_each(|(j, (c, de))| {
                edge_step(&gs.edges[j], &self.edge_models[j], c, de, u, history, p.edge(j), t);
            });

        let cache = &*cache;
        let vertex_windows = split_windows(du_vertices, gs.vertex_states.iter().map(|w| w.len));
        vertex_windows
            .into_par_iter()
            .enumerate()
            .for_each(|(v, dv)| {
                let w = gs.vertex_states[v];
                let edges = EdgeWindows::new(cache, gs.incoming(v));
                self.vertex_models[v].call(dv, &u[w.range()], edges, p.vertex(v), t);
            });
    }
}

/// Loop 1 over a run of static (or delay) edges sharing one callable, mode
/// and dimension `dim`. `call(out, edge, reversed, p)` evaluates one
/// orientation.
#[inline(always)]
fn static_edge_run<P, F>(
    hot: &[HotEdge],
    mode: EdgeMode,
    dim: usize,
    first: usize,
    cache: &mut [f64],
    p: &ParameterBundle<P>,
    call: F,
) where
    F: Fn(&mut [f64], &HotEdge, bool, &P),
{
    let uniform = p.uniform_edge();
    for (k, h) in hot.iter().enumerate() {
        let q = uniform.unwrap_or_else(|| p.edge(first + k));
        let c0 = h.cache as usize;
        if mode == EdgeMode::Directed {
            call(&mut cache[c0..c0 + dim], h, false, q);
            continue;
        }
        let (a, b) = cache[c0..c0 + 2 * dim].split_at_mut(dim);
        call(a, h, false, q);
        match mode {
            EdgeMode::CallTwice => call(b, h, true, q),
            EdgeMode::Symmetric => b.copy_from_slice(a),
            _ => {
                if let ([y], [x]) = (&mut *b, &*a) {
                    *y = -*x;
                } else {
                    for i in 0..dim {
                        b[i] = -a[i];
                    }
                }
            }
        }
    }
}

/// Loop-1 body for one edge. `cache` is the edge's full cache window and `de`
/// its state-derivative window (empty for static edges).
#[allow(clippy::too_many_arguments)]
#[inline]
fn edge_step<P>(
    l: &EdgeLayout,
    m: &EdgeModel<P>,
    cache: &mut [f64],
    de: &mut [f64],
    u: &[f64],
    history: &[f64],
    p: &P,
    t: f64,
) {
    let vs = &u[l.src_state.range()];
    let vd = &u[l.dst_state.range()];
    let hs = &history[l.src_state.range()];
    let hd = &history[l.dst_state.range()];

    if let Some(w) = l.state {
        let e = &u[w.range()];
        m.call(de, e, vs, vd, hs, hd, p, t);
        let (first, second) = cache.split_at_mut(w.len);
        first.copy_from_slice(e);
        match l.mode {
            EdgeMode::Directed => {}
            EdgeMode::Antisymmetric => {
                for (s, x) in second.iter_mut().zip(e) {
                    *s = -x;
                }
            }
            _ => second.copy_from_slice(e),
        }
        return;
    }

    match l.mode {
        EdgeMode::Directed => m.call(cache, &[], vs, vd, hs, hd, p, t),
        EdgeMode::CallTwice => {
            let (first, second) = cache.split_at_mut(cache.len() / 2);
            m.call(first, &[], vs, vd, hs, hd, p, t);
            m.call(second, &[], vd, vs, hd, hs, p, t);
        }
        EdgeMode::Symmetric => {
            let (first, second) = cache.split_at_mut(cache.len() / 2);
            m.call(first, &[], vs, vd, hs, hd, p, t);
            second.copy_from_slice(first);
        }
        EdgeMode::Antisymmetric => {
            let (first, second) = cache.split_at_mut(cache.len() / 2);
            m.call(first, &[], vs, vd, hs, hd, p, t);
            for (s, x) in second.iter_mut().zip(first.iter()) {
                *s = -x;
            }
        }
    }
}

impl<P: Sync> DynamicalSystem<ParameterBundle<P>> for NetworkFunction<P> {
    fn dim(&self) -> usize {
        self.graph_struct.state_dim
    }

    fn rhs(&self, du: &mut [f64], u: &[f64], p: &ParameterBundle<P>, t: f64) {
        self.evaluate_rhs(du, u, p, t)
    }

    fn rhs_delayed(
        &self,
        du: &mut [f64],
        u: &[f64],
        history: &[f64],
        p: &ParameterBundle<P>,
        t: f64,
    ) {
        self.evaluate_rhs_delayed(du, u, history, p, t)
    }

    fn mass_diagonal(&self) -> Option<&[f64]> {
        Some(&self.mass_diagonal)
    }

    fn symbols(&self) -> Option<&[String]> {
        Some(&self.symbols)
    }

    fn validate_params(&self, p: &ParameterBundle<P>) -> Result<()> {
        self.check_params(p)
    }
}
