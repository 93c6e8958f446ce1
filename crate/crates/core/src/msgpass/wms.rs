//! Weighted min-sum operator.

use serde::{Deserialize, Serialize};

use crate::tanner::TannerGraph;

/// Sign with the convention `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Variable-to-check messages `μ_{i→j}`, indexed by edge id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WmsMessages {
    pub v2c: Vec<f64>,
}

impl WmsMessages {
    pub fn new(v2c: Vec<f64>) -> Self {
        WmsMessages { v2c }
    }

    /// Canonical start `μ_{i→j} = γ_i`.
    pub fn from_llr(graph: &TannerGraph, llr: &[f64]) -> Self {
        WmsMessages {
            v2c: graph.edges().iter().map(|&(i, _)| llr[i]).collect(),
        }
    }

    /// Check-to-variable view `μ_{i←j}`.
    pub fn c2v(&self, graph: &TannerGraph) -> Vec<f64> {
        wms_c2v(graph, &self.v2c)
    }

    pub fn min_abs(&self) -> f64 {
        self.v2c.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.v2c.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Sign-product times minimum magnitude over `N(j) \ i` for every edge.
pub fn wms_c2v(graph: &TannerGraph, v2c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v2c.len()];
    wms_c2v_into(graph, v2c, &mut out);
    out
}

pub fn wms_c2v_into(graph: &TannerGraph, v2c: &[f64], c2v: &mut [f64]) {
    for j in 0..graph.m() {
        check_signmin(graph.check_edges(j), v2c, |e, value| c2v[e] = value);
    }
}

/// Min-sum check rule on the edges `edges`, reporting each output through `emit`.
/// An empty exclusion set yields `+∞`.
#[inline]
pub(crate) fn check_signmin(edges: &[usize], v2c: &[f64], mut emit: impl FnMut(usize, f64)) {
    let mut negative = false;
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut arg = usize::MAX;
    for &e in edges {
        let v = v2c[e];
        negative ^= v < 0.0;
        let a = v.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            arg = e;
        } else if a < min2 {
            min2 = a;
        }
    }
    for &e in edges {
        let mag = if e == arg { min2 } else { min1 };
        let flip = negative ^ (v2c[e] < 0.0);
        emit(e, if flip { -mag } else { mag });
    }
}

/// `ν_{i→j} = γ_i + β Σ_{k∈N(i)∖j} μ_{i←k}`.
pub fn wms_v2c_into(graph: &TannerGraph, llr: &[f64], c2v: &[f64], beta: f64, v2c: &mut [f64]) {
    for (i, &g) in llr.iter().enumerate().take(graph.n()) {
        let r = graph.var_edges(i);
        let incoming = &c2v[r.clone()];
        for (k, e) in r.enumerate() {
            let others: f64 = incoming
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != k)
                .map(|(_, &x)| x)
                .sum();
            v2c[e] = g + beta * others;
        }
    }
}

/// One application of the WMS operator `W`.
pub fn wms_step(graph: &TannerGraph, llr: &[f64], mu: &WmsMessages, beta: f64) -> WmsMessages {
    let c2v = wms_c2v(graph, &mu.v2c);
    let mut v2c = vec![0.0; c2v.len()];
    wms_v2c_into(graph, llr, &c2v, beta, &mut v2c);
    WmsMessages { v2c }
}

/// Per-bit beliefs `γ_i + β Σ_{j∈N(i)} μ_{i←j}`.
pub fn beliefs(graph: &TannerGraph, llr: &[f64], c2v: &[f64], beta: f64) -> Vec<f64> {
    (0..graph.n())
        .map(|i| llr[i] + beta * c2v[graph.var_edges(i)].iter().sum::<f64>())
        .collect()
}
