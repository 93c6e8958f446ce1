//! The LP relaxation over local codeword polytopes, and a dense two-phase
//! simplex with Bland's rule to solve it.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tanner::TannerGraph;

pub const MAX_LP_CHECK_DEGREE: usize = 16;
const PIVOT_TOL: f64 = 1e-9;
const INTEGRAL_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("check degree {0} exceeds the LP cap {MAX_LP_CHECK_DEGREE}")]
    DegreeCap(usize),
    #[error("simplex stalled after {iterations} pivots")]
    Stall { iterations: usize },
    #[error("phase one ended with infeasibility {0:e}")]
    Infeasible(f64),
    #[error("objective is unbounded below")]
    Unbounded,
}

/// Even-weight subsets of `0..d`, ordered by weight then lexicographically.
pub fn even_subsets(d: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..(1 << d))
        .filter(|m| m.count_ones() % 2 == 0)
        .map(|m| (0..d).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// `min c·y` subject to `A y = b`, `y ≥ 0`. Columns are the `n` bits followed
/// by one `ζ_{j,S}` per check and even local subset.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub n: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// For each `ζ` column: check index and subset as positions in `N(j)`.
    pub zeta: Vec<(usize, Vec<usize>)>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    /// Plain-text dump: objective, then one line per constraint.
    pub fn dump(&self) -> String {
        let name = |k: usize| {
            if k < self.n {
                format!("x{k}")
            } else {
                let (j, s) = &self.zeta[k - self.n];
                format!("z{j}_{}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("."))
            }
        };
        let mut out = String::from("minimize");
        for k in 0..self.num_vars() {
            if self.c[k] != 0.0 {
                let _ = write!(out, " {:+} {}", self.c[k], name(k));
            }
        }
        out.push('\n');
        for r in 0..self.num_constraints() {
            for k in 0..self.num_vars() {
                if self.a[(r, k)] != 0.0 {
                    let _ = write!(out, " {:+} {}", self.a[(r, k)], name(k));
                }
            }
            let _ = writeln!(out, " = {}", self.b[r]);
        }
        out
    }
}

pub fn build_lp(graph: &TannerGraph, llr: &[f64]) -> Result<LpProblem, LpError> {
    let dmax = graph.max_check_degree();
    if dmax > MAX_LP_CHECK_DEGREE {
        return Err(LpError::DegreeCap(dmax));
    }
    let n = graph.n();
    let mut zeta = Vec::new();
    for j in 0..graph.m() {
        for s in even_subsets(graph.check_edges(j).len()) {
            zeta.push((j, s));
        }
    }
    let rows = graph.m() + graph.num_edges();
    let cols = n + zeta.len();
    let mut a = DMatrix::zeros(rows, cols);
    let mut b = DVector::zeros(rows);
    for j in 0..graph.m() {
        b[j] = 1.0;
    }
    // edge rows: Σ_{S∋i} ζ_{j,S} − x_i = 0
    for (e, &(i, _)) in graph.edges().iter().enumerate() {
        a[(graph.m() + e, i)] = -1.0;
    }
    for (z, (j, s)) in zeta.iter().enumerate() {
        a[(*j, n + z)] = 1.0;
        let edges = graph.check_edges(*j);
        for &pos in s {
            a[(graph.m() + edges[pos], n + z)] = 1.0;
        }
    }
    let mut c = DVector::zeros(cols);
    for i in 0..n {
        c[i] = llr[i];
    }
    Ok(LpProblem { n, a, b, c, zeta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub integral: bool,
    pub status: LpStatus,
    pub pivots: usize,
    /// Column index of each basic variable.
    pub basis: Vec<usize>,
    /// Smallest reduced cost recomputed from the final basis alone.
    pub min_reduced_cost: f64,
    /// `‖A y − b‖∞` of the returned point.
    pub primal_residual: f64,
}

impl LpSolution {
    /// Optimality certificate: dual feasibility of the final basis.
    pub fn reduced_costs_nonnegative(&self) -> bool {
        self.min_reduced_cost >= -1e-8
    }
}

struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, k: usize) -> f64 {
        self.t[r * self.width + k]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize, obj: &mut [f64]) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for k in 0..w {
            self.t[pr * w + k] /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for k in 0..w {
                    self.t[r * w + k] -= f * prow[k];
                }
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for k in 0..w {
                obj[k] -= f * prow[k];
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Bland's rule on columns `< allowed`. `obj` holds reduced costs and `−z` in the last slot.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> Result<(), LpError> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::Stall { iterations: self.pivots });
            }
            let Some(pc) = (0..allowed).find(|&k| obj[k] < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((br, _, bv)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[r] < bv),
                    };
                    if better {
                        best = Some((ratio, r, self.basis[r]));
                    }
                }
            }
            let Some((_, pr, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(pr, pc, obj);
        }
    }
}

/// Two-phase primal simplex; the optimality of the final basis is then
/// re-verified with an LU solve that does not reuse the tableau.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let (m, nv) = (problem.num_constraints(), problem.num_vars());
    let width = nv + m + 1;
    let mut t = vec![0.0; m * width];
    for r in 0..m {
        let sign = if problem.b[r] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..nv {
            t[r * width + k] = sign * problem.a[(r, k)];
        }
        t[r * width + nv + r] = 1.0;
        t[r * width + width - 1] = sign * problem.b[r];
    }
    let mut tab = Tableau {
        rows: m,
        width,
        t,
        basis: (nv..nv + m).collect(),
        pivots: 0,
    };

    let mut obj = vec![0.0; width];
    for r in 0..m {
        for k in 0..nv {
            obj[k] -= tab.at(r, k);
        }
        obj[width - 1] -= tab.rhs(r);
    }
    tab.optimize(&mut obj, nv)?;
    let infeas = -obj[width - 1];
    if infeas > 1e-8 {
        return Err(LpError::Infeasible(infeas));
    }

    // drive artificials out of the basis; rows where that is impossible are redundant
    let mut keep = vec![true; m];
    for r in 0..m {
        if tab.basis[r] >= nv {
            match (0..nv).find(|&k| tab.at(r, k).abs() > PIVOT_TOL) {
                Some(k) => tab.pivot(r, k, &mut obj),
                None => keep[r] = false,
            }
        }
    }

    let mut obj = vec![0.0; width];
    obj[..nv].copy_from_slice(problem.c.as_slice());
    for r in 0..m {
        let cb = if tab.basis[r] < nv { problem.c[tab.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for k in 0..width {
                obj[k] -= cb * tab.at(r, k);
            }
        }
    }
    tab.optimize(&mut obj, nv)?;

    let mut y = vec![0.0; nv];
    for r in 0..m {
        if tab.basis[r] < nv {
            y[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let x = y[..problem.n].to_vec();
    let objective: f64 = x.iter().zip(problem.c.iter()).map(|(a, b)| a * b).sum();
    let basis: Vec<usize> = (0..m).filter(|&r| keep[r]).map(|r| tab.basis[r]).collect();
    let rows: Vec<usize> = (0..m).filter(|&r| keep[r]).collect();
    let min_reduced_cost = reduced_cost_check(problem, &rows, &basis);
    let ay = &problem.a * DVector::from_vec(y);
    let primal_residual = (ay - &problem.b).amax();
    Ok(LpSolution {
        integral: x.iter().all(|&v| v.min(1.0 - v).abs() <= INTEGRAL_TOL),
        x,
        objective,
        status: LpStatus::Optimal,
        pivots: tab.pivots,
        basis,
        min_reduced_cost,
        primal_residual,
    })
}

/// `min_k (c_k − A_kᵀ y)` with `B_ᵀ y = c_B` solved from scratch.
fn reduced_cost_check(problem: &LpProblem, rows: &[usize], basis: &[usize]) -> f64 {
    let k = basis.len();
    let bmat = DMatrix::from_fn(k, k, |r, c| problem.a[(rows[r], basis[c])]);
    let cb = DVector::from_fn(k, |c, _| problem.c[basis[c]]);
    let Some(y) = bmat.transpose().lu().solve(&cb) else {
        return f64::NEG_INFINITY;
    };
    (0..problem.num_vars())
        .map(|col| {
            let dot: f64 = rows.iter().zip(y.iter()).map(|(&r, &yr)| problem.a[(r, col)] * yr).sum();
            problem.c[col] - dot
        })
        .fold(f64::INFINITY, f64::min)
}
