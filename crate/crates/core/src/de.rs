//! Sampled density evolution for WMS on `(dv, dc)`-regular ensembles.
//!
//! The all-zeros codeword is assumed throughout. A population of `N`
//! variable-to-check messages is pushed through the check rule (sign product
//! times minimum over `dc − 1` draws) and the variable rule (fresh channel
//! LLR plus `β` times `dv − 1` check draws).

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{trial_rng, ChannelSpec};

const CHUNK: usize = 1 << 14;
/// Stream ids keep the channel, check and variable draws apart.
const STREAM_INIT: u64 = 0x1000;
const STREAM_CHECK: u64 = 0x2000;
const STREAM_VAR: u64 = 0x3000;
/// Largest message magnitude kept; populations that reach it are decoded.
const POP_CLAMP: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeError {
    #[error("bracket [{lo}, {hi}] is invalid: {detail}")]
    Bracket { lo: f64, hi: f64, detail: String },
    #[error("invalid query: {0}")]
    Query(String),
}

/// Channel LLR of a transmitted zero. BSC LLRs are scaled to `±1`; WMS is
/// positively homogeneous, so the scale does not change any sign.
pub fn de_channel_llr<R: Rng + ?Sized>(channel: &ChannelSpec, rng: &mut R) -> f64 {
    match *channel {
        ChannelSpec::Bsc { p } => {
            if rng.random::<f64>() < p {
                -1.0
            } else {
                1.0
            }
        }
        ChannelSpec::Biawgn { .. } => channel.sample_llr_zero(rng),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MessagePopulation {
    pub samples: Vec<f64>,
    pub iteration: usize,
}

impl MessagePopulation {
    /// Iteration-0 population: one channel draw per sample.
    pub fn from_channel(channel: &ChannelSpec, n: usize, seed: u64) -> Self {
        let mut samples = vec![0.0; n];
        samples
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut rng = chunk_rng(seed, STREAM_INIT, c);
                for s in chunk {
                    *s = de_channel_llr(channel, &mut rng);
                }
            });
        MessagePopulation { samples, iteration: 0 }
    }

    /// `P(μ < 0) + ½ P(μ = 0)`.
    pub fn error_probability(&self) -> f64 {
        error_probability(&self.samples)
    }
}

pub fn error_probability(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let (neg, zero) = samples.iter().fold((0usize, 0usize), |(n, z), &v| {
        (n + usize::from(v < 0.0), z + usize::from(v == 0.0))
    });
    (neg as f64 + 0.5 * zero as f64) / samples.len() as f64
}

/// Chunk-local generator: a ChaCha stream position seeds a Xoshiro state, so
/// results do not depend on how chunks are scheduled.
fn chunk_rng(seed: u64, stream: u64, chunk: usize) -> Xoshiro256PlusPlus {
    let mut key = [0u8; 32];
    trial_rng(seed, stream, chunk as u64).fill_bytes(&mut key);
    Xoshiro256PlusPlus::from_seed(key)
}

/// Fills `idx` with uniform indices below `n`, two per 64-bit draw.
fn fill_indices<R: RngCore>(rng: &mut R, n: usize, idx: &mut [u32]) {
    debug_assert!(n <= u32::MAX as usize);
    for pair in idx.chunks_mut(2) {
        let w = rng.next_u64();
        pair[0] = ((u64::from(w as u32) * n as u64) >> 32) as u32;
        if let Some(b) = pair.get_mut(1) {
            *b = (((w >> 32) * n as u64) >> 32) as u32;
        }
    }
}

/// One DE iteration. Deterministic in `seed` and the population's iteration index.
pub fn de_step(
    pop: &MessagePopulation,
    dv: usize,
    dc: usize,
    beta: f64,
    channel: &ChannelSpec,
    seed: u64,
) -> MessagePopulation {
    let n = pop.samples.len();
    let it = pop.iteration as u64;
    let src = &pop.samples;
    let mut checks = vec![0.0; n];
    checks
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = chunk_rng(seed, STREAM_CHECK + it * 0x10_0000, c);
            let k = dc - 1;
            let mut idx = vec![0u32; chunk.len() * k];
            fill_indices(&mut rng, n, &mut idx);
            for (out, draw) in chunk.iter_mut().zip(idx.chunks_exact(k)) {
                let mut neg = false;
                let mut min = f64::INFINITY;
                for &d in draw {
                    let v = src[d as usize];
                    neg ^= v < 0.0;
                    min = min.min(v.abs());
                }
                *out = if neg { -min } else { min };
            }
        });
    let mut samples = vec![0.0; n];
    samples
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = chunk_rng(seed, STREAM_VAR + it * 0x10_0000, c);
            let k = dv - 1;
            let mut idx = vec![0u32; chunk.len() * k];
            fill_indices(&mut rng, n, &mut idx);
            for (out, draw) in chunk.iter_mut().zip(idx.chunks_exact(k)) {
                let g = de_channel_llr(channel, &mut rng);
                let s: f64 = draw.iter().map(|&d| checks[d as usize]).sum();
                *out = (g + beta * s).clamp(-POP_CLAMP, POP_CLAMP);
            }
        });
    MessagePopulation {
        samples,
        iteration: pop.iteration + 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub dv: usize,
    pub dc: usize,
    pub beta: f64,
    /// Channel kind; its parameter is ignored.
    pub channel: ChannelSpec,
    pub target_error: f64,
    pub max_iters: usize,
    pub population: usize,
    pub tolerance: f64,
    /// Noise bracket `[lo, hi]`: success expected at `lo`, failure at `hi`.
    pub bracket: (f64, f64),
    /// Iterations without a 1% improvement of the best error before giving up.
    pub stall_window: usize,
    pub seed: u64,
}

impl ThresholdQuery {
    pub fn new(dv: usize, dc: usize, beta: f64, channel: ChannelSpec) -> Self {
        let bracket = match channel {
            ChannelSpec::Bsc { .. } => (0.005, 0.2),
            ChannelSpec::Biawgn { .. } => (0.3, 1.5),
        };
        ThresholdQuery {
            dv,
            dc,
            beta,
            channel,
            target_error: 1e-6,
            max_iters: 500,
            population: 1_000_000,
            tolerance: 5e-4,
            bracket,
            stall_window: 100,
            seed: 1,
        }
    }

    fn validate(&self) -> Result<(), DeError> {
        if self.dv < 2 || self.dc < 2 {
            return Err(DeError::Query("degrees must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(DeError::Query(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.population == 0 || !(self.tolerance > 0.0) {
            return Err(DeError::Query("population and tolerance must be positive".into()));
        }
        let (lo, hi) = self.bracket;
        if !(lo < hi) || self.channel.with_param(lo).validate().is_err() || self.channel.with_param(hi).validate().is_err() {
            return Err(DeError::Bracket {
                lo,
                hi,
                detail: "endpoints must be valid channel parameters with lo < hi".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub success: bool,
    pub iters: usize,
    pub final_error: f64,
    /// Ended early because the error stopped improving.
    pub stalled: bool,
}

/// Runs DE at one noise level until the error drops below target, stalls, or hits `max_iters`.
pub fn evaluate(query: &ThresholdQuery, param: f64) -> TrajectoryOutcome {
    let channel = query.channel.with_param(param);
    let seed = query.seed;
    let mut pop = MessagePopulation::from_channel(&channel, query.population, seed);
    let mut best = pop.error_probability();
    let mut best_at = 0;
    let mut err = best;
    for it in 1..=query.max_iters {
        pop = de_step(&pop, query.dv, query.dc, query.beta, &channel, seed);
        err = pop.error_probability();
        if err < query.target_error {
            return TrajectoryOutcome {
                success: true,
                iters: it,
                final_error: err,
                stalled: false,
            };
        }
        if err < 0.99 * best {
            best = err;
            best_at = it;
        } else if it - best_at >= query.stall_window {
            return TrajectoryOutcome {
                success: false,
                iters: it,
                final_error: err,
                stalled: true,
            };
        }
    }
    TrajectoryOutcome {
        success: false,
        iters: query.max_iters,
        final_error: err,
        stalled: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdResult {
    Threshold { value: f64, evaluations: usize },
    /// The error settles at a positive level even at the low end of the bracket.
    NoThreshold { floor: f64, at: f64 },
}

/// Bisection for the largest noise level where DE drives the error below target.
pub fn threshold(query: &ThresholdQuery) -> Result<ThresholdResult, DeError> {
    query.validate()?;
    let (mut lo, mut hi) = query.bracket;
    let at_lo = evaluate(query, lo);
    if !at_lo.success {
        if at_lo.final_error > 0.0 && (at_lo.stalled || at_lo.iters == query.max_iters) {
            return Ok(ThresholdResult::NoThreshold {
                floor: at_lo.final_error,
                at: lo,
            });
        }
        return Err(DeError::Bracket {
            lo,
            hi,
            detail: "decoding fails at the low end".into(),
        });
    }
    if evaluate(query, hi).success {
        return Err(DeError::Bracket {
            lo,
            hi,
            detail: "decoding succeeds at the high end".into(),
        });
    }
    let mut evaluations = 2;
    while hi - lo > query.tolerance {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if evaluate(query, mid).success {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult::Threshold {
        value: 0.5 * (lo + hi),
        evaluations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub dv: usize,
    pub dc: usize,
    pub beta: f64,
    pub channel: String,
    /// `threshold`, `no_threshold` or `error`.
    pub outcome: String,
    /// Threshold value, or the error floor for `no_threshold`.
    pub value: Option<f64>,
    pub population: usize,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default)]
    pub detail: String,
}

/// Threshold for every β in `betas`; per-point failures become rows, not errors.
pub fn threshold_curve(base: &ThresholdQuery, betas: &[f64]) -> Vec<CurveRow> {
    betas
        .iter()
        .map(|&beta| {
            let q = ThresholdQuery { beta, ..base.clone() };
            let (outcome, value, detail) = match threshold(&q) {
                Ok(ThresholdResult::Threshold { value, .. }) => ("threshold", Some(value), String::new()),
                Ok(ThresholdResult::NoThreshold { floor, at }) => {
                    ("no_threshold", Some(floor), format!("floor at {at}"))
                }
                Err(e) => ("error", None, e.to_string()),
            };
            CurveRow {
                dv: q.dv,
                dc: q.dc,
                beta,
                channel: q.channel.name().to_string(),
                outcome: outcome.to_string(),
                value,
                population: q.population,
                max_iters: q.max_iters,
                seed: q.seed,
                detail,
            }
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(beta: f64, p: f64) -> (ThresholdQuery, ChannelSpec) {
        let c = ChannelSpec::bsc(p).unwrap();
        let mut q = ThresholdQuery::new(3, 6, beta, c);
        q.population = 50_000;
        q.max_iters = 200;
        (q, c)
    }

    #[test]
    fn estimator_counts_half_zeros() {
        assert_eq!(error_probability(&[-1.0, 0.0, 1.0, 2.0]), 0.375);
        assert_eq!(error_probability(&[]), 0.0);
        let shifted: Vec<f64> = [-1.0, 0.0, 1.0, 2.0].iter().map(|v| v + 0.5).collect();
        assert!(error_probability(&shifted) <= 0.375);
    }

    #[test]
    fn zero_beta_step_is_the_channel() {
        let c = ChannelSpec::bsc(0.1).unwrap();
        let pop = MessagePopulation::from_channel(&c, 20_000, 3);
        let next = de_step(&pop, 3, 6, 0.0, &c, 3);
        assert!(next.samples.iter().all(|&v| v == 1.0 || v == -1.0));
        let e = next.error_probability();
        assert!((e - 0.1).abs() < 0.01, "{e}");
    }

    #[test]
    fn deterministic_in_seed() {
        let c = ChannelSpec::biawgn(0.8).unwrap();
        let a = MessagePopulation::from_channel(&c, 40_000, 9);
        let b = MessagePopulation::from_channel(&c, 40_000, 9);
        assert_eq!(de_step(&a, 3, 6, 0.5, &c, 9), de_step(&b, 3, 6, 0.5, &c, 9));
    }

    #[test]
    fn below_and_above_the_half_weight_threshold() {
        let (q, _) = small(0.5, 0.04);
        assert!(evaluate(&q, 0.04).success);
        let (q, _) = small(0.5, 0.07);
        let out = evaluate(&q, 0.07);
        assert!(!out.success && out.final_error > 1e-3);
    }

    #[test]
    fn invalid_brackets() {
        let (mut q, _) = small(0.5, 0.04);
        q.bracket = (0.1, 0.05);
        assert!(matches!(threshold(&q), Err(DeError::Bracket { .. })));
        q.bracket = (0.01, 0.02);
        assert!(matches!(threshold(&q), Err(DeError::Bracket { .. })));
    }

    #[test]
    fn empty_grid() {
        let (q, _) = small(0.5, 0.04);
        assert!(threshold_curve(&q, &[]).is_empty());
    }
}
