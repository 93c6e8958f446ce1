//! Message-passing decoders as one-step operators, plus a trajectory runner
//! that classifies how the iteration ends.
//!
//! All decoders use the synchronous (flooding) schedule. Iteration `ℓ` of
//! the runner holds the variable-to-check messages `μ^(ℓ)`; the
//! check-to-variable view and the hard decisions at `ℓ` are derived from
//! them. The start is `μ^(0)_{i→j} = γ_i`.

mod amp;
mod trmp;
mod wms;

pub use amp::{amp_c2v, amp_check_message_brute, amp_step, run_amp, AmpMessages, AmpRun};
pub use trmp::{trmp_step, uniform_rho, TrmpState};
pub use wms::{beliefs, sgn, wms_c2v, wms_c2v_into, wms_step, wms_v2c_into, WmsMessages};

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{check_wms_consistency, is_wms_consistent, Certificate, ConsistencyReport};
use crate::channel::inf_norm;
use crate::tanner::{Codeword, TannerGraph};

/// Magnitude cap that keeps genuinely divergent runs finite.
pub const MESSAGE_CLAMP: f64 = 1e12;
pub const DEFAULT_DIV_WINDOW: usize = 10;
/// Divergence threshold as a multiple of `‖γ‖∞`.
pub const DEFAULT_DIV_FACTOR: f64 = 100.0;
/// Fixed-point tolerance as a multiple of `max(1, ‖γ‖∞)`.
pub const DEFAULT_FP_FACTOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("beta must lie in [0, 1], got {0}")]
    Beta(f64),
    #[error("fixed-point tolerance must be positive, got {0}")]
    FpTol(f64),
    #[error("divergence window must be at least 1")]
    Window,
    #[error("rho must lie in (0, 1], got {0}")]
    Rho(f64),
    #[error("LLR length {llr} does not match n = {n}")]
    Length { llr: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub beta: f64,
    pub max_iters: usize,
    /// `None` selects `1e−10 · max(1, ‖γ‖∞)`.
    pub fp_tol: Option<f64>,
    /// `None` selects `100 · ‖γ‖∞`.
    pub div_threshold: Option<f64>,
    pub div_window: usize,
    /// Turn off to iterate slowly converging contractions whose fixed point
    /// lies above the divergence threshold.
    pub detect_divergence: bool,
    /// Stop as soon as the hard decisions satisfy every check.
    pub stop_on_codeword: bool,
    pub trmp_rho: Option<f64>,
}

impl DecoderConfig {
    pub fn new(beta: f64, max_iters: usize) -> Self {
        DecoderConfig {
            beta,
            max_iters,
            fp_tol: None,
            div_threshold: None,
            div_window: DEFAULT_DIV_WINDOW,
            detect_divergence: true,
            stop_on_codeword: false,
            trmp_rho: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ConfigError::Beta(self.beta));
        }
        if let Some(t) = self.fp_tol {
            if !(t > 0.0) {
                return Err(ConfigError::FpTol(t));
            }
        }
        if self.div_window == 0 {
            return Err(ConfigError::Window);
        }
        if let Some(r) = self.trmp_rho {
            if !(r > 0.0 && r <= 1.0) {
                return Err(ConfigError::Rho(r));
            }
        }
        Ok(())
    }

    pub fn fp_tol_for(&self, llr: &[f64]) -> f64 {
        self.fp_tol
            .unwrap_or_else(|| DEFAULT_FP_FACTOR * inf_norm(llr).max(1.0))
    }

    pub fn div_threshold_for(&self, llr: &[f64]) -> f64 {
        self.div_threshold
            .unwrap_or_else(|| DEFAULT_DIV_FACTOR * inf_norm(llr))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// Magnitudes above threshold and consistent for a full window starting at `l0`.
    DivergentConsistent { l0: usize },
    /// The final sign pattern repeats with this period (at least 2).
    Oscillating { period: usize },
    MaxIters,
    /// Stopped early because the hard decisions formed a codeword.
    CodewordFound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodeResult {
    pub hard: Codeword,
    pub status: Status,
    pub iters: usize,
    pub beta: f64,
    pub is_codeword: bool,
    /// Some belief was exactly zero and resolved to bit 0.
    pub tie: bool,
    /// Some message hit the magnitude clamp.
    pub saturated: bool,
    /// Sup-norm of the last update.
    pub last_step: f64,
    pub consistency: ConsistencyReport,
    pub certificate: Option<Certificate>,
    pub messages: WmsMessages,
}

/// `x̂_i = ½(1 − sgn(γ_i + β Σ_j μ_{i←j}))`, with a flag raised if any belief is 0.
pub fn hard_decision(graph: &TannerGraph, llr: &[f64], mu: &WmsMessages, beta: f64) -> (Codeword, bool) {
    let c2v = mu.c2v(graph);
    hard_from_beliefs(&beliefs(graph, llr, &c2v, beta))
}

pub(crate) fn hard_from_beliefs(b: &[f64]) -> (Codeword, bool) {
    let tie = b.contains(&0.0);
    (Codeword::new(b.iter().map(|&v| u8::from(v < 0.0)).collect()), tie)
}

fn check_lengths(graph: &TannerGraph, llr: &[f64]) -> Result<(), ConfigError> {
    if llr.len() != graph.n() {
        return Err(ConfigError::Length {
            llr: llr.len(),
            n: graph.n(),
        });
    }
    Ok(())
}

/// Runs WMS from the canonical start.
pub fn run(graph: &TannerGraph, llr: &[f64], config: &DecoderConfig) -> Result<DecodeResult, ConfigError> {
    check_lengths(graph, llr)?;
    run_from(graph, llr, config, WmsMessages::from_llr(graph, llr), |_, _, _| {})
}

/// Runs WMS from `init`, calling `observe(ℓ, μ^(ℓ), μ_←^(ℓ))` on every state visited.
pub fn run_from(
    graph: &TannerGraph,
    llr: &[f64],
    config: &DecoderConfig,
    init: WmsMessages,
    mut observe: impl FnMut(usize, &[f64], &[f64]),
) -> Result<DecodeResult, ConfigError> {
    config.validate()?;
    check_lengths(graph, llr)?;
    let beta = config.beta;
    let fp_tol = config.fp_tol_for(llr);
    let theta = config.div_threshold_for(llr);
    let ne = graph.num_edges();

    let mut v2c = init.v2c;
    let mut c2v = vec![0.0; ne];
    let mut next = vec![0.0; ne];
    wms_c2v_into(graph, &v2c, &mut c2v);

    let mut iters = 0;
    let mut last_step = f64::INFINITY;
    let mut saturated = false;
    let mut window_start: Option<usize> = None;
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut period = 0;
    let status = loop {
        observe(iters, &v2c, &c2v);
        if last_step < fp_tol {
            break Status::Converged;
        }
        if config.detect_divergence {
            let big = v2c.iter().all(|v| v.abs() > theta);
            if big && is_wms_consistent(graph, llr, &v2c, &c2v, beta) {
                let start = *window_start.get_or_insert(iters);
                if iters + 1 - start >= config.div_window {
                    break Status::DivergentConsistent { l0: start };
                }
            } else {
                window_start = None;
            }
        }
        if config.stop_on_codeword {
            let (word, _) = hard_from_beliefs(&beliefs(graph, llr, &c2v, beta));
            if graph.is_codeword(word.bits()) {
                break Status::CodewordFound;
            }
        }
        if iters == config.max_iters {
            break if period >= 2 {
                Status::Oscillating { period }
            } else {
                Status::MaxIters
            };
        }

        wms_v2c_into(graph, llr, &c2v, beta, &mut next);
        let mut step = 0.0_f64;
        for (n, &o) in next.iter_mut().zip(&v2c) {
            if n.abs() > MESSAGE_CLAMP || n.is_nan() {
                *n = if n.is_nan() { MESSAGE_CLAMP } else { n.signum() * MESSAGE_CLAMP };
                saturated = true;
            }
            step = step.max((*n - o).abs());
        }
        std::mem::swap(&mut v2c, &mut next);
        wms_c2v_into(graph, &v2c, &mut c2v);
        last_step = step;
        iters += 1;

        let h = sign_hash(&v2c);
        period = seen.insert(h, iters).map_or(0, |prev| iters - prev);
    };

    let b = beliefs(graph, llr, &c2v, beta);
    let (hard, tie) = hard_from_beliefs(&b);
    let consistency = check_wms_consistency(graph, llr, &v2c, &c2v, beta);
    Ok(DecodeResult {
        is_codeword: graph.is_codeword(hard.bits()),
        hard,
        status,
        iters,
        beta,
        tie,
        saturated,
        last_step,
        consistency,
        certificate: None,
        messages: WmsMessages::new(v2c),
    })
}

fn sign_hash(v: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for chunk in v.chunks(64) {
        let word = chunk
            .iter()
            .enumerate()
            .fold(0u64, |w, (k, &x)| w | (u64::from(x < 0.0) << k));
        h.write_u64(word);
    }
    h.finish()
}

/// Final state of a fixed-length TRMP run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrmpResult {
    pub hard: Codeword,
    pub is_codeword: bool,
    pub tie: bool,
    pub iters: usize,
    pub rho: f64,
}

/// Runs `iters` TRMP iterations from `v2c = γ`, `c2v = 0`; hard decisions
/// come from the beliefs `γ_i + ρ Σ_j c2v_{i←j}` of the final state.
pub fn run_trmp(graph: &TannerGraph, llr: &[f64], rho: f64, iters: usize) -> Result<TrmpResult, ConfigError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(ConfigError::Rho(rho));
    }
    check_lengths(graph, llr)?;
    let mut s = TrmpState::init(graph, llr);
    for _ in 0..iters {
        s = trmp_step(graph, llr, &s, rho);
        for v in s.v2c.iter_mut().chain(s.c2v.iter_mut()) {
            *v = v.clamp(-MESSAGE_CLAMP, MESSAGE_CLAMP);
        }
    }
    let (hard, tie) = hard_from_beliefs(&s.beliefs(graph, llr, rho));
    Ok(TrmpResult {
        is_codeword: graph.is_codeword(hard.bits()),
        hard,
        tie,
        iters,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::{build_regular_graph, example1_graph};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_positive_fixed_point() {
        let g = build_regular_graph(60, 3, 6, 6, 4).unwrap();
        let llr = vec![2.0; 60];
        let beta = 0.49;
        let r = run(&g, &llr, &DecoderConfig::new(beta, 2000)).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.hard.is_zero());
        assert!(r.consistency.wms_consistent);
        // μ* = γ/(1 − β(dv − 1))
        let expect = 2.0 / (1.0 - beta * 2.0);
        for &v in &r.messages.v2c {
            assert!((v - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_belief_raises_tie() {
        let g = example1_graph();
        let r = run(&g, &[0.0; 12], &DecoderConfig::new(0.3, 10)).unwrap();
        assert!(r.tie);
        assert!(r.hard.is_zero());
    }

    #[test]
    fn all_positive_beliefs_give_zero_word() {
        let g = example1_graph();
        let mu = WmsMessages::new(vec![1.0; 36]);
        let (w, tie) = hard_decision(&g, &[0.5; 12], &mu, 0.5);
        assert!(w.is_zero());
        assert!(!tie);
    }

    #[test]
    fn example2_mechanism_on_dense_fragment() {
        // every variable in every check: dv = 4, dc = 5
        let g = TannerGraph::from_dense_matrix(&vec![vec![1u8; 5]; 4]).unwrap();
        let llr = vec![-1.0; 5];
        let mut first = None;
        let r = run_from(
            &g,
            &llr,
            &DecoderConfig::new(0.7, 500),
            WmsMessages::from_llr(&g, &llr),
            |l, v, _| {
                if l == 1 {
                    first = Some(v.to_vec());
                }
            },
        )
        .unwrap();
        assert!(first.unwrap().iter().all(|&v| v > 1.0));
        assert!(matches!(r.status, Status::DivergentConsistent { .. }));
        assert!(r.hard.is_zero());
    }

    #[test]
    fn unique_fixed_point_from_random_starts() {
        let g = build_regular_graph(48, 3, 6, 6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let llr: Vec<f64> = (0..48).map(|_| rng.random_range(-3.0..3.0)).collect();
        let cfg = DecoderConfig::new(0.45, 10_000);
        let tol = cfg.fp_tol_for(&llr);
        let mut start = || WmsMessages::new((0..g.num_edges()).map(|_| rng.random_range(-50.0..50.0)).collect());
        let (s1, s2) = (start(), start());
        let a = run_from(&g, &llr, &cfg, s1, |_, _, _| {}).unwrap();
        let b = run_from(&g, &llr, &cfg, s2, |_, _, _| {}).unwrap();
        assert_eq!(a.status, Status::Converged);
        assert_eq!(b.status, Status::Converged);
        let d = inf_norm(&a.messages.v2c.iter().zip(&b.messages.v2c).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(d <= 10.0 * tol, "distance {d}");
    }

    #[test]
    fn config_validation() {
        assert!(DecoderConfig::new(1.5, 1).validate().is_err());
        let mut c = DecoderConfig::new(0.5, 1);
        c.div_window = 0;
        assert!(c.validate().is_err());
        let g = example1_graph();
        assert!(run(&g, &[1.0; 3], &DecoderConfig::new(0.5, 1)).is_err());
    }

    #[test]
    fn max_iters_reports_without_error() {
        let g = example1_graph();
        let llr: Vec<f64> = (0..12).map(|i| if i % 3 == 0 { -1.0 } else { 0.7 }).collect();
        let r = run(&g, &llr, &DecoderConfig::new(1.0, 3)).unwrap();
        assert!(r.iters <= 3);
    }
}
