//! Tree-reweighted max-product in the log-likelihood-ratio domain.

use serde::{Deserialize, Serialize};

use super::wms::check_signmin;
use crate::tanner::TannerGraph;

/// Both message directions; the check update reads the previous
/// variable-to-check values, so neither is derivable from the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrmpState {
    pub v2c: Vec<f64>,
    pub c2v: Vec<f64>,
}

impl TrmpState {
    /// `v2c = γ`, `c2v = 0`.
    pub fn init(graph: &TannerGraph, llr: &[f64]) -> Self {
        TrmpState {
            v2c: graph.edges().iter().map(|&(i, _)| llr[i]).collect(),
            c2v: vec![0.0; graph.num_edges()],
        }
    }

    /// `γ_i + ρ Σ_j c2v_{i←j}`.
    pub fn beliefs(&self, graph: &TannerGraph, llr: &[f64], rho: f64) -> Vec<f64> {
        (0..graph.n())
            .map(|i| llr[i] + rho * self.c2v[graph.var_edges(i)].iter().sum::<f64>())
            .collect()
    }
}

/// Uniform edge appearance probability `(n(1 + dc/dv) − 1)/|E|`.
pub fn uniform_rho(n: usize, dv: usize, dc: usize) -> f64 {
    let edges = (n * dv) as f64;
    (n as f64 * (1.0 + dc as f64 / dv as f64) - 1.0) / edges
}

/// One synchronous TRMP iteration.
pub fn trmp_step(graph: &TannerGraph, llr: &[f64], state: &TrmpState, rho: f64) -> TrmpState {
    let ne = graph.num_edges();
    let mut next = TrmpState {
        v2c: vec![0.0; ne],
        c2v: vec![0.0; ne],
    };
    for (i, &g) in llr.iter().enumerate().take(graph.n()) {
        let r = graph.var_edges(i);
        for e in r.clone() {
            let others: f64 = r.clone().filter(|&k| k != e).map(|k| state.c2v[k]).sum();
            next.v2c[e] = g + rho * others - (1.0 - rho) * state.c2v[e];
        }
    }
    for j in 0..graph.m() {
        check_signmin(graph.check_edges(j), &state.v2c, |e, v| {
            next.c2v[e] = rho * v - (1.0 - rho) * state.v2c[e];
        });
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgpass::wms::{beliefs, wms_c2v, wms_step, WmsMessages};
    use crate::tanner::example1_graph;

    #[test]
    fn uniform_rho_formula() {
        // (10^4 · 3 − 1)/(3 · 10^4)
        assert_eq!(uniform_rho(10_000, 3, 6), 29_999.0 / 30_000.0);
        assert_eq!(uniform_rho(1_000, 3, 6), 2_999.0 / 3_000.0);
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = example1_graph();
        let llr = vec![0.0; 12];
        let s = TrmpState::init(&g, &llr);
        let next = trmp_step(&g, &llr, &s, 0.7);
        assert!(next.v2c.iter().chain(&next.c2v).all(|&v| v == 0.0));
    }

    #[test]
    fn rho_one_is_min_sum_at_double_rate() {
        let g = example1_graph();
        let llr: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64) - 2.2).collect();
        let mut s = TrmpState::init(&g, &llr);
        let mut ms = WmsMessages::from_llr(&g, &llr);
        for l in 0..15 {
            // TRMP iteration 2l carries min-sum iteration l on the v2c side
            assert_eq!(s.v2c, ms.v2c, "iteration {l}");
            s = trmp_step(&g, &llr, &s, 1.0);
            assert_eq!(s.c2v, wms_c2v(&g, &ms.v2c));
            assert_eq!(s.beliefs(&g, &llr, 1.0), beliefs(&g, &llr, &wms_c2v(&g, &ms.v2c), 1.0));
            s = trmp_step(&g, &llr, &s, 1.0);
            ms = wms_step(&g, &llr, &ms, 1.0);
        }
    }
}
