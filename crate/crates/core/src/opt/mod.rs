//! Exact oracles: ML decoding by enumeration, the LP relaxation, and the
//! dual objective.

mod lp;

pub use lp::{build_lp, even_subsets, solve_lp, LpError, LpProblem, LpSolution, LpStatus, MAX_LP_CHECK_DEGREE};

use serde::{Deserialize, Serialize};

use crate::tanner::{gf2_nullspace, Codeword, GrayWalk, TannerError, TannerGraph, DEFAULT_ENUM_CAP};

/// Minimizers kept when the ML problem has ties.
const MAX_REPORTED_MINIMIZERS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlSolution {
    pub codeword: Codeword,
    pub objective: f64,
    /// Every codeword attaining the minimum, up to 64 of them.
    pub minimizers: Vec<Codeword>,
    pub tie: bool,
    pub codewords_visited: u64,
}

/// `argmin_{x ∈ C} Σ γ_i x_i` over all codewords.
pub fn exact_ml(graph: &TannerGraph, llr: &[f64]) -> Result<MlSolution, TannerError> {
    exact_ml_capped(graph, llr, DEFAULT_ENUM_CAP)
}

pub fn exact_ml_capped(graph: &TannerGraph, llr: &[f64], cap: usize) -> Result<MlSolution, TannerError> {
    let basis = gf2_nullspace(&graph.parity_matrix());
    if basis.len() > cap || basis.len() >= 64 {
        return Err(TannerError::DimensionCap {
            dimension: basis.len(),
            cap,
        });
    }
    let tol = 1e-9 * (1.0 + llr.iter().map(|g| g.abs()).sum::<f64>());
    let mut walk = GrayWalk::new(graph.n(), basis);
    let mut running = 0.0;
    let mut best = f64::INFINITY;
    let mut minimizers: Vec<Codeword> = Vec::new();
    let mut tie_count = 0usize;
    let mut visited = 0u64;
    while let Some(flip) = walk.advance() {
        visited += 1;
        if let Some(k) = flip {
            let word = walk.current();
            for (i, &b) in walk.basis()[k].bits().iter().enumerate() {
                if b == 1 {
                    running += if word[i] == 1 { llr[i] } else { -llr[i] };
                }
            }
        }
        if running > best + tol {
            continue;
        }
        // incremental sums drift; settle close calls on the exact cost
        let word = Codeword::new(walk.current().to_vec());
        let exact = word.cost(llr);
        running = exact;
        if exact < best - tol {
            best = exact;
            minimizers.clear();
            minimizers.push(word);
            tie_count = 1;
        } else if exact <= best + tol {
            tie_count += 1;
            if minimizers.len() < MAX_REPORTED_MINIMIZERS {
                minimizers.push(word);
            }
        }
    }
    Ok(MlSolution {
        codeword: minimizers[0].clone(),
        objective: best,
        tie: tie_count > 1,
        minimizers,
        codewords_visited: visited,
    })
}

/// Smallest and second-smallest of `Σ_{i∈S} t_i` over even-weight subsets `S`.
/// Walks a Gray code on all but the last index, whose membership is fixed by parity.
pub fn local_min_over_even(t: &[f64]) -> (f64, f64) {
    let Some((&last, head)) = t.split_last() else {
        return (0.0, f64::INFINITY);
    };
    let mut best = 0.0;
    let mut second = f64::INFINITY;
    let mut partial = 0.0;
    let mut odd = false;
    let mut members = vec![false; head.len()];
    let total = 1u64 << head.len();
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        members[k] = !members[k];
        partial += if members[k] { head[k] } else { -head[k] };
        odd = !odd;
        let v = if odd { partial + last } else { partial };
        if v < best {
            second = best;
            best = v;
        } else if v < second {
            second = v;
        }
    }
    (best, second)
}

/// `Σ_j min_{S even} Σ_{i∈S} τ_{i,j}` with `τ` indexed by edge id.
pub fn dual_objective(graph: &TannerGraph, tau: &[f64]) -> f64 {
    let mut buf = Vec::with_capacity(graph.max_check_degree());
    (0..graph.m())
        .map(|j| {
            buf.clear();
            buf.extend(graph.check_edges(j).iter().map(|&e| tau[e]));
            local_min_over_even(&buf).0
        })
        .sum()
}
