//! Attenuated max-product operator on pairs `(μ(0), μ(1))` per edge.

use serde::{Deserialize, Serialize};

use crate::tanner::TannerGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpMessages {
    pub v2c0: Vec<f64>,
    pub v2c1: Vec<f64>,
}

impl AmpMessages {
    /// Canonical start `μ_{i→j}(x) = (1 − x) γ_i`.
    pub fn init(graph: &TannerGraph, llr: &[f64]) -> Self {
        AmpMessages {
            v2c0: graph.edges().iter().map(|&(i, _)| llr[i]).collect(),
            v2c1: vec![0.0; graph.num_edges()],
        }
    }

    /// `μ(0) − μ(1)` per edge, the corresponding WMS message.
    pub fn difference(&self) -> Vec<f64> {
        self.v2c0.iter().zip(&self.v2c1).map(|(a, b)| a - b).collect()
    }

    /// Shifts each pair so its larger entry is 0. Differences, and therefore
    /// every later difference under `A`, are unchanged; the raw pairs grow
    /// like `(β(dv − 1)(dc − 1))^ℓ` and lose the difference to rounding.
    pub fn normalize(&mut self) {
        for (a, b) in self.v2c0.iter_mut().zip(self.v2c1.iter_mut()) {
            let top = a.max(*b);
            *a -= top;
            *b -= top;
        }
    }

    /// Sup-norm distance over all `2|E|` entries.
    pub fn distance(&self, other: &AmpMessages) -> f64 {
        self.v2c0
            .iter()
            .zip(&other.v2c0)
            .chain(self.v2c1.iter().zip(&other.v2c1))
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Check-to-variable values `μ_{i←k}(x)` for both `x`, aligned with edge ids.
///
/// For each excluded edge the best unconstrained pattern takes the larger
/// entry on every other edge; if its parity differs from `x`, the cheapest
/// single flip is paid instead. `O(dc)` per check.
pub fn amp_c2v(graph: &TannerGraph, mu: &AmpMessages) -> (Vec<f64>, Vec<f64>) {
    let ne = graph.num_edges();
    let mut out0 = vec![0.0; ne];
    let mut out1 = vec![0.0; ne];
    for k in 0..graph.m() {
        let edges = graph.check_edges(k);
        let mut base = 0.0;
        let mut parity = false;
        let mut min1 = f64::INFINITY;
        let mut min2 = f64::INFINITY;
        let mut arg = usize::MAX;
        for &e in edges {
            let (a, b) = (mu.v2c0[e], mu.v2c1[e]);
            base += a.max(b);
            parity ^= b > a;
            let cost = (a - b).abs();
            if cost < min1 {
                min2 = min1;
                min1 = cost;
                arg = e;
            } else if cost < min2 {
                min2 = cost;
            }
        }
        for &e in edges {
            let (a, b) = (mu.v2c0[e], mu.v2c1[e]);
            // subtracting the own term from the running sum keeps this O(dc)
            let rest = base - a.max(b);
            let rest_parity = parity ^ (b > a);
            let flip = if e == arg { min2 } else { min1 };
            let (v0, v1) = if rest_parity {
                (rest - flip, rest)
            } else {
                (rest, rest - flip)
            };
            out0[e] = v0;
            out1[e] = v1;
        }
    }
    (out0, out1)
}

/// Brute-force `max_{w ∈ S_{k,i}(x)} Σ_{m ∈ N(k)∖i} μ_{m→k}(w_m)` by enumerating
/// all patterns on the other edges. Kept as an oracle; refuses `dc > 10`.
pub fn amp_check_message_brute(pairs: &[(f64, f64)], x: u8) -> Option<f64> {
    if pairs.len() > 9 {
        return None;
    }
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << pairs.len()) {
        if (mask.count_ones() & 1) as u8 != x {
            continue;
        }
        let s: f64 = pairs
            .iter()
            .enumerate()
            .map(|(m, &(a, b))| if mask >> m & 1 == 1 { b } else { a })
            .sum();
        best = best.max(s);
    }
    Some(best)
}

/// One application of the AMP operator `A`.
pub fn amp_step(graph: &TannerGraph, llr: &[f64], mu: &AmpMessages, beta: f64) -> AmpMessages {
    let (c0, c1) = amp_c2v(graph, mu);
    let ne = graph.num_edges();
    let mut next = AmpMessages {
        v2c0: vec![0.0; ne],
        v2c1: vec![0.0; ne],
    };
    for (i, &g) in llr.iter().enumerate().take(graph.n()) {
        let r = graph.var_edges(i);
        for e in r.clone() {
            let (mut s0, mut s1) = (0.0, 0.0);
            for k in r.clone().filter(|&k| k != e) {
                s0 += c0[k];
                s1 += c1[k];
            }
            next.v2c0[e] = g + beta * s0;
            next.v2c1[e] = beta * s1;
        }
    }
    next
}

/// Outcome of iterating `A` from the canonical start.
#[derive(Clone, Debug)]
pub struct AmpRun {
    pub messages: AmpMessages,
    pub iters: usize,
    pub converged: bool,
    /// Sup-norm of the last step.
    pub last_step: f64,
}

/// Iterates `A` until the step falls below `tol` or `max_iters` is reached.
pub fn run_amp(graph: &TannerGraph, llr: &[f64], beta: f64, max_iters: usize, tol: f64) -> AmpRun {
    let mut mu = AmpMessages::init(graph, llr);
    let mut last_step = f64::INFINITY;
    for it in 1..=max_iters {
        let next = amp_step(graph, llr, &mu, beta);
        last_step = next.distance(&mu);
        mu = next;
        if last_step < tol {
            return AmpRun {
                messages: mu,
                iters: it,
                converged: true,
                last_step,
            };
        }
    }
    AmpRun {
        messages: mu,
        iters: max_iters,
        converged: false,
        last_step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgpass::wms::{wms_step, WmsMessages};
    use crate::tanner::example1_graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_matches_definition() {
        let g = example1_graph();
        let llr: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let mu = AmpMessages::init(&g, &llr);
        for (e, &(i, _)) in g.edges().iter().enumerate() {
            assert_eq!(mu.v2c0[e], llr[i]);
            assert_eq!(mu.v2c1[e], 0.0);
        }
    }

    #[test]
    fn brute_force_small_check() {
        // two other edges each with μ(0) = 1, μ(1) = 0; x = 0 needs even parity
        assert_eq!(amp_check_message_brute(&[(1.0, 0.0), (1.0, 0.0)], 0), Some(2.0));
        assert_eq!(amp_check_message_brute(&[(1.0, 0.0), (1.0, 0.0)], 1), Some(1.0));
        let g = TannerGraph::from_dense_matrix(&[vec![1, 1, 1]]).unwrap();
        let mu = AmpMessages {
            v2c0: vec![5.0, 1.0, 1.0],
            v2c1: vec![-2.0, 0.0, 0.0],
        };
        let (c0, c1) = amp_c2v(&g, &mu);
        assert_eq!(c0[0], 2.0);
        assert_eq!(c1[0], 1.0);
    }

    #[test]
    fn parity_trick_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dc in 2..=10 {
            let g = TannerGraph::from_dense_matrix(&[vec![1; dc]]).unwrap();
            for _ in 0..200 {
                let mu = AmpMessages {
                    v2c0: (0..dc).map(|_| rng.random_range(-3.0..3.0)).collect(),
                    v2c1: (0..dc).map(|_| rng.random_range(-3.0..3.0)).collect(),
                };
                let (c0, c1) = amp_c2v(&g, &mu);
                for e in 0..dc {
                    let pairs: Vec<(f64, f64)> = (0..dc)
                        .filter(|&m| m != e)
                        .map(|m| (mu.v2c0[m], mu.v2c1[m]))
                        .collect();
                    let b0 = amp_check_message_brute(&pairs, 0).unwrap();
                    let b1 = amp_check_message_brute(&pairs, 1).unwrap();
                    assert!((c0[e] - b0).abs() < 1e-12);
                    assert!((c1[e] - b1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalize_keeps_differences() {
        let mut m = AmpMessages {
            v2c0: vec![3.0, -1.0, 1e14 + 2.0],
            v2c1: vec![5.0, -4.0, 1e14],
        };
        let before = m.difference();
        m.normalize();
        assert_eq!(m.difference(), before);
        assert_eq!(m.v2c0, vec![-2.0, 0.0, 0.0]);
        assert_eq!(m.v2c1, vec![0.0, -3.0, -2.0]);
    }

    #[test]
    fn difference_tracks_wms() {
        let g = example1_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let llr: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let beta = 0.3;
        let mut amp = AmpMessages::init(&g, &llr);
        let mut wms = WmsMessages::from_llr(&g, &llr);
        for _ in 0..20 {
            amp = amp_step(&g, &llr, &amp, beta);
            wms = wms_step(&g, &llr, &wms, beta);
            for (a, w) in amp.difference().iter().zip(&wms.v2c) {
                assert!((a - w).abs() < 1e-9);
            }
        }
    }
}
