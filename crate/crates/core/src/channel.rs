//! Binary-input channels (BSC and BPSK over AWGN) and their LLRs.
//!
//! Conventions: natural logarithms, BPSK maps bit 0 to `+1`, and
//! `γ_i = log p(y_i | 0) − log p(y_i | 1)`, so a positive LLR favors bit 0.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tanner::Codeword;

/// Default half-width of the optional uniform tie-breaking perturbation.
pub const DEFAULT_PERTURBATION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("BSC crossover probability must lie in (0, 0.5], got {0}")]
    Crossover(f64),
    #[error("AWGN noise deviation must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("observation kind does not match the channel")]
    ObservationKind,
    #[error("LLR entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSpec {
    Bsc { p: f64 },
    Biawgn { sigma: f64 },
}

impl ChannelSpec {
    pub fn bsc(p: f64) -> Result<Self, ChannelError> {
        let c = ChannelSpec::Bsc { p };
        c.validate()?;
        Ok(c)
    }

    pub fn biawgn(sigma: f64) -> Result<Self, ChannelError> {
        let c = ChannelSpec::Biawgn { sigma };
        c.validate()?;
        Ok(c)
    }

    /// `p = 0.5` is accepted: it is the uninformative channel with `γ = 0`.
    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            ChannelSpec::Bsc { p } if !(p > 0.0 && p <= 0.5) => Err(ChannelError::Crossover(p)),
            ChannelSpec::Biawgn { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(ChannelError::Sigma(sigma))
            }
            _ => Ok(()),
        }
    }

    /// The swept noise parameter: `p` or `σ`.
    pub fn param(&self) -> f64 {
        match *self {
            ChannelSpec::Bsc { p } => p,
            ChannelSpec::Biawgn { sigma } => sigma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelSpec::Bsc { .. } => "bsc",
            ChannelSpec::Biawgn { .. } => "biawgn",
        }
    }

    /// Same channel kind with a different noise parameter.
    pub fn with_param(&self, value: f64) -> Self {
        match self {
            ChannelSpec::Bsc { .. } => ChannelSpec::Bsc { p: value },
            ChannelSpec::Biawgn { .. } => ChannelSpec::Biawgn { sigma: value },
        }
    }

    /// LLR magnitude of a BSC observation, `ln((1 − p)/p)`.
    pub fn bsc_reliability(p: f64) -> f64 {
        ((1.0 - p) / p).ln()
    }

    /// Draws one channel LLR for a transmitted 0 bit.
    pub fn sample_llr_zero<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ChannelSpec::Bsc { p } => {
                let l = Self::bsc_reliability(p);
                if rng.random::<f64>() < p {
                    -l
                } else {
                    l
                }
            }
            ChannelSpec::Biawgn { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                2.0 * (1.0 + sigma * z) / (sigma * sigma)
            }
        }
    }
}

/// Channel output: hard bits for the BSC, reals for the AWGN channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Bits(Vec<u8>),
    Reals(Vec<f64>),
}

impl Observation {
    pub fn len(&self) -> usize {
        match self {
            Observation::Bits(b) => b.len(),
            Observation::Reals(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flips every BSC bit or negates every AWGN sample.
    pub fn flipped(&self) -> Self {
        match self {
            Observation::Bits(b) => Observation::Bits(b.iter().map(|x| x ^ 1).collect()),
            Observation::Reals(r) => Observation::Reals(r.iter().map(|y| -y).collect()),
        }
    }
}

/// Per-bit channel LLRs `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LlrVector {
    values: Vec<f64>,
}

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ChannelError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ChannelError::NonFinite { index, value });
        }
        Ok(LlrVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.values)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Adds i.i.d. uniform noise on `[−eta, eta]` to every entry.
    pub fn perturb<R: Rng + ?Sized>(&mut self, eta: f64, rng: &mut R) {
        if eta > 0.0 {
            for v in &mut self.values {
                *v += rng.random_range(-eta..=eta);
            }
        }
    }
}

impl Deref for LlrVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Parses newline- or whitespace-separated reals.
pub fn parse_llr_text(text: &str) -> Result<LlrVector, String> {
    let values = text
        .split_whitespace()
        .enumerate()
        .map(|(k, t)| t.parse::<f64>().map_err(|_| format!("entry {}: invalid number {t:?}", k + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    LlrVector::new(values).map_err(|e| e.to_string())
}

/// Passes `codeword` through the channel.
pub fn sample<R: Rng + ?Sized>(spec: &ChannelSpec, codeword: &Codeword, rng: &mut R) -> Observation {
    match *spec {
        ChannelSpec::Bsc { p } => Observation::Bits(
            codeword
                .bits()
                .iter()
                .map(|&b| b ^ u8::from(rng.random::<f64>() < p))
                .collect(),
        ),
        ChannelSpec::Biawgn { sigma } => Observation::Reals(
            codeword
                .bits()
                .iter()
                .map(|&b| {
                    let z: f64 = StandardNormal.sample(rng);
                    (1.0 - 2.0 * b as f64) + sigma * z
                })
                .collect(),
        ),
    }
}

/// Channel LLRs of an observation.
pub fn llr(spec: &ChannelSpec, obs: &Observation) -> Result<LlrVector, ChannelError> {
    let values = match (*spec, obs) {
        (ChannelSpec::Bsc { p }, Observation::Bits(y)) => {
            let l = ChannelSpec::bsc_reliability(p);
            y.iter().map(|&b| (1.0 - 2.0 * b as f64) * l).collect()
        }
        (ChannelSpec::Biawgn { sigma }, Observation::Reals(y)) => {
            let s2 = sigma * sigma;
            y.iter().map(|&v| 2.0 * v / s2).collect()
        }
        _ => return Err(ChannelError::ObservationKind),
    };
    LlrVector::new(values)
}

/// The constant `−1` LLR vector.
pub fn all_minus_one_llr(n: usize) -> LlrVector {
    LlrVector {
        values: vec![-1.0; n],
    }
}

/// Generator for trial `trial` of stream `stream` under `master`.
///
/// Uses ChaCha8's stream id and block counter so that every
/// `(master, stream, trial)` triple gets its own reproducible, non-overlapping
/// random sequence regardless of execution order.
pub fn trial_rng(master: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    // 2^36 words per trial
    rng.set_word_pos(u128::from(trial) << 36);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsc_half_is_uninformative() {
        let spec = ChannelSpec::bsc(0.5).unwrap();
        let g = llr(&spec, &Observation::Bits(vec![0, 1, 1])).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bsc_llr_value() {
        let spec = ChannelSpec::bsc(0.1).unwrap();
        let g = llr(&spec, &Observation::Bits(vec![0, 1])).unwrap();
        // ln((1 − 0.1)/0.1) = ln 9
        let ln9 = 9f64.ln();
        assert!((g[0] - ln9).abs() < 1e-15);
        assert!((g[1] + ln9).abs() < 1e-15);
        assert!((g[0] - 2.19722).abs() < 1e-5);
        assert_eq!(g.inf_norm(), ChannelSpec::bsc_reliability(0.1));
    }

    #[test]
    fn awgn_llr_value() {
        let spec = ChannelSpec::biawgn(1.0).unwrap();
        let g = llr(&spec, &Observation::Reals(vec![-0.5])).unwrap();
        assert_eq!(g[0], -1.0);
    }

    #[test]
    fn all_minus_one() {
        assert_eq!(all_minus_one_llr(3).values(), &[-1.0, -1.0, -1.0]);
        assert!(all_minus_one_llr(0).is_empty());
        let g = all_minus_one_llr(12);
        assert_eq!(g.len(), 12);
        assert!(g.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn validation() {
        assert!(ChannelSpec::bsc(0.0).is_err());
        assert!(ChannelSpec::bsc(0.6).is_err());
        assert!(ChannelSpec::biawgn(0.0).is_err());
        assert!(ChannelSpec::biawgn(f64::NAN).is_err());
        assert!(llr(&ChannelSpec::Bsc { p: 0.1 }, &Observation::Reals(vec![1.0])).is_err());
    }

    #[test]
    fn near_noiseless_bsc() {
        let spec = ChannelSpec::bsc(1e-12).unwrap();
        let cw = Codeword::new(vec![0, 1, 1, 0, 1, 0, 0, 1]);
        let mut rng = trial_rng(5, 0, 0);
        assert_eq!(sample(&spec, &cw, &mut rng), Observation::Bits(cw.bits().to_vec()));
    }

    #[test]
    fn bsc_flip_rate_in_binomial_band() {
        let p = 0.5 - 1e-3;
        let spec = ChannelSpec::bsc(p).unwrap();
        let n = 1_000_000;
        let mut rng = trial_rng(11, 0, 0);
        let Observation::Bits(y) = sample(&spec, &Codeword::zeros(n), &mut rng) else {
            unreachable!()
        };
        let flips = y.iter().filter(|&&b| b == 1).count() as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((flips - n as f64 * p).abs() < 3.0 * sd, "flips = {flips}");
    }

    #[test]
    fn awgn_mean_in_clt_band() {
        let sigma = 0.5;
        let spec = ChannelSpec::biawgn(sigma).unwrap();
        let n = 1_000_000;
        let mut rng = trial_rng(12, 0, 0);
        let Observation::Reals(y) = sample(&spec, &Codeword::zeros(n), &mut rng) else {
            unreachable!()
        };
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * sigma / (n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: Vec<u64> = (0..4).map(|_| trial_rng(1, 2, 7).random()).collect();
        let mut r = trial_rng(1, 2, 7);
        assert_eq!(a[0], r.random::<u64>());
        let other: u64 = trial_rng(1, 2, 8).random();
        let other_stream: u64 = trial_rng(1, 3, 7).random();
        assert_ne!(a[0], other);
        assert_ne!(a[0], other_stream);
    }

    #[test]
    fn perturbation_is_bounded() {
        let mut g = LlrVector::new(vec![0.0; 100]).unwrap();
        g.perturb(DEFAULT_PERTURBATION, &mut trial_rng(0, 0, 0));
        assert!(g.iter().all(|v| v.abs() <= DEFAULT_PERTURBATION));
        assert!(g.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn parse_llr_file_text() {
        let g = parse_llr_text("-1\n-1.5\n 2e-1\n").unwrap();
        assert_eq!(g.values(), &[-1.0, -1.5, 0.2]);
        assert!(parse_llr_text("1 x").is_err());
        assert!(parse_llr_text("inf").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bsc_sign_symmetry(bits in proptest::collection::vec(0u8..2, 1..40), p in 0.001f64..0.5) {
                let spec = ChannelSpec::Bsc { p };
                let obs = Observation::Bits(bits);
                let a = llr(&spec, &obs).unwrap();
                let b = llr(&spec, &obs.flipped()).unwrap();
                for (x, y) in a.iter().zip(b.iter()) {
                    prop_assert_eq!(*x, -*y);
                }
                prop_assert_eq!(a.inf_norm(), ChannelSpec::bsc_reliability(p));
            }

            #[test]
            fn awgn_sign_symmetry(y in proptest::collection::vec(-5.0f64..5.0, 1..40), sigma in 0.1f64..3.0) {
                let spec = ChannelSpec::Biawgn { sigma };
                let obs = Observation::Reals(y);
                let a = llr(&spec, &obs).unwrap();
                let b = llr(&spec, &obs.flipped()).unwrap();
                for (x, y) in a.iter().zip(b.iter()) {
                    prop_assert_eq!(*x, -*y);
                }
            }
        }
    }
}
