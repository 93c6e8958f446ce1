//! Bipartite (Tanner) graphs of LDPC codes.
//!
//! Variable nodes are indexed `0..n`, check nodes `0..m`. Every undirected
//! edge `(i, j)` gets a stable index in `0..num_edges()`; edges are laid out
//! grouped by variable node, and within a node in ascending check order, so
//! the messages leaving one variable node occupy a contiguous slice.

mod alist;
mod construct;
mod gf2;
mod girth;

pub use alist::{parse_alist, write_alist};
pub use construct::{build_regular_graph, ConstructionParams, DEFAULT_ATTEMPTS};
pub use gf2::{enumerate_codewords, gf2_nullspace, BitMatrix, CodewordIter, GrayWalk, DEFAULT_ENUM_CAP};
pub use girth::{girth, shortest_cycle_through_edge};

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TannerError {
    #[error("check {0} has no neighbors")]
    EmptyCheck(usize),
    #[error("variable {0} has no neighbors")]
    EmptyVariable(usize),
    #[error("check {check} references variable {var} but n = {n}")]
    VariableOutOfRange { check: usize, var: usize, n: usize },
    #[error("parallel edge between variable {var} and check {check}")]
    ParallelEdge { var: usize, check: usize },
    #[error("matrix row {row} has length {len}, expected {expected}")]
    RaggedMatrix { row: usize, len: usize, expected: usize },
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("could not reach girth {target} after {attempts} attempts (best girth {best})")]
    Construction {
        target: usize,
        attempts: usize,
        best: usize,
    },
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("code dimension {dimension} exceeds enumeration cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },
}

/// Binary word of length `n`, one `u8` (0 or 1) per bit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword {
    bits: Vec<u8>,
}

impl Codeword {
    pub fn new(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Codeword { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Codeword { bits: vec![0; n] }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Primal objective `Σ γ_i x_i`.
    pub fn cost(&self, llr: &[f64]) -> f64 {
        self.bits
            .iter()
            .zip(llr)
            .filter(|(&b, _)| b == 1)
            .map(|(_, &g)| g)
            .sum()
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Codeword({self})")
    }
}

impl std::str::FromStr for Codeword {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(format!("invalid bit character {other:?}")),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Codeword::new)
    }
}

impl Serialize for Codeword {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Codeword {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Immutable Tanner graph with directed-edge indexing.
#[derive(Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    var_adj: Vec<Vec<usize>>,
    chk_adj: Vec<Vec<usize>>,
    /// `var_offset[i]..var_offset[i + 1]` are the edges of variable `i`.
    var_offset: Vec<usize>,
    /// Edge ids of each check, aligned with `chk_adj`.
    chk_edges: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    degrees: Option<(usize, usize)>,
}

impl fmt::Debug for TannerGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TannerGraph")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("edges", &self.edges.len())
            .field("degrees", &self.degrees)
            .finish()
    }
}

impl TannerGraph {
    /// Builds a graph from the variable lists of each check.
    ///
    /// Neighbor lists are sorted; every row and column must be nonempty.
    pub fn from_check_lists(n: usize, checks: Vec<Vec<usize>>) -> Result<Self, TannerError> {
        let m = checks.len();
        let mut var_adj = vec![Vec::new(); n];
        let mut chk_adj = Vec::with_capacity(m);
        for (j, mut row) in checks.into_iter().enumerate() {
            if row.is_empty() {
                return Err(TannerError::EmptyCheck(j));
            }
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(TannerError::ParallelEdge { var: w[0], check: j });
                }
            }
            for &i in &row {
                if i >= n {
                    return Err(TannerError::VariableOutOfRange { check: j, var: i, n });
                }
                var_adj[i].push(j);
            }
            chk_adj.push(row);
        }
        if let Some(i) = var_adj.iter().position(|a| a.is_empty()) {
            return Err(TannerError::EmptyVariable(i));
        }
        // checks were visited in ascending order, so var_adj is already sorted
        Ok(Self::assemble(n, var_adj, chk_adj))
    }

    /// Edge `(i, j)` exists iff `h[j][i] == 1`.
    pub fn from_dense_matrix(h: &[Vec<u8>]) -> Result<Self, TannerError> {
        let n = h.first().map_or(0, |r| r.len());
        let mut checks = Vec::with_capacity(h.len());
        for (j, row) in h.iter().enumerate() {
            if row.len() != n {
                return Err(TannerError::RaggedMatrix {
                    row: j,
                    len: row.len(),
                    expected: n,
                });
            }
            checks.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, _)| i)
                    .collect(),
            );
        }
        Self::from_check_lists(n, checks)
    }

    fn assemble(n: usize, var_adj: Vec<Vec<usize>>, chk_adj: Vec<Vec<usize>>) -> Self {
        let m = chk_adj.len();
        let mut var_offset = Vec::with_capacity(n + 1);
        let mut edges = Vec::new();
        var_offset.push(0);
        for (i, adj) in var_adj.iter().enumerate() {
            edges.extend(adj.iter().map(|&j| (i, j)));
            var_offset.push(edges.len());
        }
        let mut chk_edges: Vec<Vec<usize>> = chk_adj.iter().map(|r| Vec::with_capacity(r.len())).collect();
        // edges are in variable order, so each check's list ends up sorted by variable
        for (e, &(_, j)) in edges.iter().enumerate() {
            chk_edges[j].push(e);
        }
        let dv = var_adj.first().map(|a| a.len());
        let dc = chk_adj.first().map(|a| a.len());
        let degrees = match (dv, dc) {
            (Some(dv), Some(dc))
                if var_adj.iter().all(|a| a.len() == dv) && chk_adj.iter().all(|a| a.len() == dc) =>
            {
                Some((dv, dc))
            }
            _ => None,
        };
        debug_assert!(chk_edges.iter().zip(&chk_adj).all(|(es, vs)| es.len() == vs.len()));
        TannerGraph {
            n,
            m,
            var_adj,
            chk_adj,
            var_offset,
            chk_edges,
            edges,
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(dv, dc)` when the graph is regular.
    pub fn regular_degrees(&self) -> Option<(usize, usize)> {
        self.degrees
    }

    pub fn var_neighbors(&self, i: usize) -> &[usize] {
        &self.var_adj[i]
    }

    pub fn check_neighbors(&self, j: usize) -> &[usize] {
        &self.chk_adj[j]
    }

    /// Edge ids `i → j` for all `j ∈ N(i)`, contiguous.
    pub fn var_edges(&self, i: usize) -> Range<usize> {
        self.var_offset[i]..self.var_offset[i + 1]
    }

    /// Edge ids incident to check `j`, aligned with [`check_neighbors`](Self::check_neighbors).
    pub fn check_edges(&self, j: usize) -> &[usize] {
        &self.chk_edges[j]
    }

    /// `(variable, check)` endpoints of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let adj = self.var_adj.get(i)?;
        adj.binary_search(&j).ok().map(|k| self.var_offset[i] + k)
    }

    pub fn max_var_degree(&self) -> usize {
        self.var_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_check_degree(&self) -> usize {
        self.chk_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Indices of checks violated by `bits`.
    pub fn unsatisfied_checks(&self, bits: &[u8]) -> Vec<usize> {
        (0..self.m)
            .filter(|&j| self.chk_adj[j].iter().map(|&i| bits[i]).fold(0, |a, b| a ^ b) == 1)
            .collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self.chk_adj.iter().all(|row| row.iter().map(|&i| bits[i]).fold(0, |a, b| a ^ b) == 0)
    }

    /// Checks that variable and check adjacency describe the same edge set.
    pub fn is_consistent(&self) -> bool {
        let from_vars = self.var_adj.iter().map(Vec::len).sum::<usize>();
        let from_checks = self.chk_adj.iter().map(Vec::len).sum::<usize>();
        from_vars == from_checks
            && self.var_adj.iter().enumerate().all(|(i, adj)| {
                adj.iter().all(|&j| self.chk_adj[j].binary_search(&i).is_ok())
            })
            && self.chk_adj.iter().enumerate().all(|(j, adj)| {
                adj.iter().all(|&i| self.var_adj[i].binary_search(&j).is_ok())
            })
    }

    pub fn parity_matrix(&self) -> BitMatrix {
        let mut h = BitMatrix::zeros(self.m, self.n);
        for (j, row) in self.chk_adj.iter().enumerate() {
            for &i in row {
                h.set(j, i, true);
            }
        }
        h
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.chk_adj
            .iter()
            .map(|row| {
                let mut r = vec![0u8; self.n];
                for &i in row {
                    r[i] = 1;
                }
                r
            })
            .collect()
    }

    /// Hex-encoded SHA-256 of the canonical alist text; identifies a code in manifests.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(write_alist(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The (3,4)-regular length-12 parity-check matrix used for the ML-census
/// counterexample.
pub const EXAMPLE1_H: [[u8; 12]; 9] = [
    [0, 0, 0, 1, 1, 0, 1, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0],
    [0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 1, 0],
    [1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1],
    [0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 1],
];

pub fn example1_graph() -> TannerGraph {
    let rows: Vec<Vec<u8>> = EXAMPLE1_H.iter().map(|r| r.to_vec()).collect();
    TannerGraph::from_dense_matrix(&rows).expect("fixed matrix is well formed")
}
