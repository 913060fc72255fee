//! Graph topology, Watts–Strogatz generation and matrix exports.
//!
//! Edges are stored as an ordered list of `(src, dst)` pairs. For undirected
//! graphs the stored orientation is the fiducial one: it fixes which endpoint
//! is passed as the source argument of an edge function.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and builds a graph.
    ///
    /// Multi-edges are rejected for both kinds (for undirected graphs `(a, b)`
    /// and `(b, a)` are the same edge). Self-loops are rejected for undirected
    /// graphs only.
    pub fn new(directed: bool, n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(s, d) in &edges {
            for v in [s, d] {
                if v >= n_vertices {
                    return Err(Error::IndexOutOfRange {
                        what: "vertex set",
                        index: v,
                        len: n_vertices,
                    });
                }
            }
            if !directed && s == d {
                return Err(Error::InvalidParameter(format!(
                    "self-loop ({s}, {d}) in undirected graph"
                )));
            }
            let key = if directed { (s, d) } else { (s.min(d), s.max(d)) };
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({s}, {d})"
                )));
            }
        }
        Ok(Self {
            directed,
            n_vertices,
            edges,
        })
    }

    pub fn undirected(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(false, n_vertices, edges)
    }

    pub fn directed(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(true, n_vertices, edges)
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of edges touching each vertex (in + out for directed graphs).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices];
        for &(s, d) in &self.edges {
            deg[s] += 1;
            deg[d] += 1;
        }
        deg
    }

    /// Writes the edge-list text format: a `directed|undirected <n>` header
    /// followed by one 0-based `src dst` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let kind = if self.directed { "directed" } else { "undirected" };
        writeln!(out, "{kind} {}", self.n_vertices)?;
        for &(s, d) in &self.edges {
            writeln!(out, "{s} {d}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (directed, n) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing header".into(),
                });
            };
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let directed = match it.next() {
                Some("directed") => true,
                Some("undirected") => false,
                other => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("expected `directed` or `undirected`, found {other:?}"),
                    })
                }
            };
            let n = parse_field(it.next(), i + 1, "vertex count")?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "trailing fields in header".into(),
                });
            }
            break (directed, n);
        };
        let mut edges = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let s = parse_field(it.next(), i + 1, "source")?;
            let d = parse_field(it.next(), i + 1, "destination")?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected exactly two fields".into(),
                });
            }
            edges.push((s, d));
        }
        Self::new(directed, n, edges)
    }
}

fn parse_field(field: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let field = field.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} `{field}`"),
    })
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(std::str::from_utf8(&buf).map_err(|_| fmt::Error)?)
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::read_edge_list(s.as_bytes())
    }
}

/// Watts–Strogatz small-world graph.
///
/// Starts from a ring lattice in which every vertex is joined to its `k`
/// nearest neighbours, then visits the lattice edges `(u, u + j mod n)` for
/// `j = 1..=k/2` and `u = 0..n` in that order. With probability `p` the far
/// endpoint is replaced by a uniformly drawn vertex, redrawing on self-loops
/// and duplicates. Vertices already adjacent to every other vertex are
/// skipped. Rewired edges keep their slot in the edge list.
///
/// Randomness comes from ChaCha8 seeded with [`SeedableRng::seed_from_u64`];
/// each lattice edge consumes one `f64` draw and every rewiring attempt one
/// `random_range(0..n)` draw, so a seed reproduces the same graph everywhere.
pub fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "mean degree k = {k} must be even and at least 2"
        )));
    }
    if n <= k {
        return Err(Error::InvalidParameter(format!(
            "need n > k, got n = {n}, k = {k}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "rewiring probability {p} not in [0, 1]"
        )));
    }

    let half = k / 2;
    let mut edges = Vec::with_capacity(n * half);
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::with_capacity(k + 2); n];
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            edges.push((u, v));
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..=half {
        for u in 0..n {
            let slot = (j - 1) * n + u;
            if rng.random::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let mut w = rng.random_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.random_range(0..n);
            }
            let (_, v) = edges[slot];
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
            edges[slot] = (u, w);
        }
    }

    Ok(Graph {
        directed: false,
        n_vertices: n,
        edges,
    })
}

/// Dense adjacency matrix with `A[(j, i)] = 1` iff edge `j -> i` exists.
/// Undirected edges set both entries.
pub fn adjacency(g: &Graph) -> DMatrix<i64> {
    let n = g.n_vertices;
    let mut a = DMatrix::zeros(n, n);
    for &(s, d) in &g.edges {
        a[(s, d)] = 1;
        if !g.directed {
            a[(d, s)] = 1;
        }
    }
    a
}

/// Graph Laplacian `D - A` of an undirected graph.
pub fn laplacian(g: &Graph) -> Result<DMatrix<i64>> {
    if g.directed {
        return Err(Error::Unsupported(
            "laplacian of a directed graph".into(),
        ));
    }
    let a = adjacency(g);
    let mut l = -a;
    for (v, d) in g.degrees().into_iter().enumerate() {
        l[(v, v)] += d as i64;
    }
    Ok(l)
}

/// Dense oriented incidence matrix (`N x M`): column `j` holds `-1` at the
/// source and `+1` at the destination of edge `j`.
pub fn oriented_incidence(g: &Graph) -> Result<DMatrix<i64>> {
    if g.directed {
        return Err(Error::Unsupported(
            "oriented incidence matrix of a directed graph".into(),
        ));
    }
    let mut b = DMatrix::zeros(g.n_vertices, g.edges.len());
    for (j, &(s, d)) in g.edges.iter().enumerate() {
        b[(s, j)] = -1;
        b[(d, j)] = 1;
    }
    Ok(b)
}

/// Sparse (CSR) counterpart of [`oriented_incidence`].
pub fn oriented_incidence_sparse(g: &Graph) -> Result<CsMat<f64>> {
    if g.directed {
        return Err(Error::Unsupported(
            "oriented incidence matrix of a directed graph".into(),
        ));
    }
    let mut tri = TriMat::with_capacity((g.n_vertices, g.edges.len()), 2 * g.edges.len());
    for (j, &(s, d)) in g.edges.iter().enumerate() {
        tri.add_triplet(s, j, -1.0);
        tri.add_triplet(d, j, 1.0);
    }
    Ok(tri.to_csr())
}
