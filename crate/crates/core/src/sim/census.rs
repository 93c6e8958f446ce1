//! Counting decoder-returned codewords against exact ML on a small code.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{blackwell_certify, certify_ml};
use crate::channel::{self, trial_rng, ChannelSpec};
use crate::msgpass::{run, DecoderConfig, Status};
use crate::opt::exact_ml;
use crate::tanner::{enumerate_codewords, Codeword, TannerGraph, DEFAULT_ENUM_CAP};

use super::SimError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmit {
    /// A uniformly random codeword per block.
    #[default]
    Random,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub p: f64,
    pub beta: f64,
    pub iters: usize,
    pub blocks: u64,
    pub seed: u64,
    #[serde(default)]
    pub transmit: Transmit,
    /// Return the first codeword the hard decisions hit instead of the final state.
    #[serde(default)]
    pub stop_on_codeword: bool,
    #[serde(default)]
    pub perturbation: Option<f64>,
}

impl CensusConfig {
    pub fn new(p: f64, beta: f64, iters: usize, blocks: u64, seed: u64) -> Self {
        CensusConfig {
            p,
            beta,
            iters,
            blocks,
            seed,
            transmit: Transmit::Random,
            stop_on_codeword: false,
            perturbation: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub blocks: u64,
    /// Blocks whose decoder output satisfies every check.
    pub returned_codeword: u64,
    /// Returned codewords attaining the ML objective.
    pub ml_agree: u64,
    pub not_ml: u64,
    /// Returned codewords equal to the transmitted word.
    pub correct: u64,
    pub certified: u64,
    /// Certified outputs that exact ML rejects.
    pub certified_not_ml: u64,
    pub ties: u64,
    /// Block indices of returned codewords that are not ML, up to 32.
    pub not_ml_examples: Vec<u64>,
}

impl Census {
    pub fn returned_fraction(&self) -> f64 {
        if self.blocks == 0 {
            0.0
        } else {
            self.returned_codeword as f64 / self.blocks as f64
        }
    }

    fn merge(mut self, o: Census) -> Census {
        self.blocks += o.blocks;
        self.returned_codeword += o.returned_codeword;
        self.ml_agree += o.ml_agree;
        self.not_ml += o.not_ml;
        self.correct += o.correct;
        self.certified += o.certified;
        self.certified_not_ml += o.certified_not_ml;
        self.ties += o.ties;
        self.not_ml_examples.extend(o.not_ml_examples);
        self.not_ml_examples.sort_unstable();
        self.not_ml_examples.truncate(32);
        self
    }
}

/// Decodes `blocks` BSC blocks with WMS and checks every returned codeword
/// against exact ML. Certificates are attempted on converged runs, and on
/// divergent-consistent runs when `β = 1/(dv − 1)`.
pub fn run_counterexample_census(graph: &TannerGraph, cfg: &CensusConfig) -> Result<Census, SimError> {
    let spec = ChannelSpec::bsc(cfg.p).map_err(|e| SimError::Config(e.to_string()))?;
    let mut dcfg = DecoderConfig::new(cfg.beta, cfg.iters);
    dcfg.stop_on_codeword = cfg.stop_on_codeword;
    dcfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
    let book: Vec<Codeword> = enumerate_codewords(graph, DEFAULT_ENUM_CAP)?.collect();
    let critical = graph
        .regular_degrees()
        .is_some_and(|(dv, _)| dv >= 2 && (cfg.beta - 1.0 / (dv as f64 - 1.0)).abs() < 1e-12);

    let census = (0..cfg.blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(cfg.seed, 0, b);
            let sent = match cfg.transmit {
                Transmit::Random => book[rng.random_range(0..book.len())].clone(),
                Transmit::Zero => Codeword::zeros(graph.n()),
            };
            let obs = channel::sample(&spec, &sent, &mut rng);
            let mut llr = channel::llr(&spec, &obs).expect("validated channel");
            if let Some(eta) = cfg.perturbation {
                llr.perturb(eta, &mut rng);
            }
            let r = run(graph, &llr, &dcfg).expect("validated config");
            let mut c = Census {
                blocks: 1,
                ties: u64::from(r.tie),
                ..Census::default()
            };
            if !r.is_codeword {
                return c;
            }
            c.returned_codeword = 1;
            c.correct = u64::from(r.hard == sent);
            let ml = exact_ml(graph, &llr).expect("enumerable code");
            let agrees = (r.hard.cost(&llr) - ml.objective).abs() <= 1e-9 * (1.0 + llr.l1_norm());
            if agrees {
                c.ml_agree = 1;
            } else {
                c.not_ml = 1;
                c.not_ml_examples.push(b);
            }
            let certified = match r.status {
                Status::Converged => certify_ml(graph, &llr, &r, cfg.beta).is_ok_and(|x| x.is_certified()),
                Status::DivergentConsistent { .. } if critical => {
                    blackwell_certify(graph, &llr, &dcfg).is_ok_and(|o| o.certificate.is_certified())
                }
                _ => false,
            };
            c.certified = u64::from(certified);
            c.certified_not_ml = u64::from(certified && !agrees);
            c
        })
        .reduce(Census::default, Census::merge);
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::example1_graph;

    #[test]
    fn empty_census() {
        let c = run_counterexample_census(&example1_graph(), &CensusConfig::new(0.1, 0.8, 200, 0, 1)).unwrap();
        assert_eq!(c, Census::default());
        assert_eq!(c.returned_fraction(), 0.0);
    }

    #[test]
    fn deterministic_and_consistent_counts() {
        let g = example1_graph();
        let cfg = CensusConfig::new(0.1, 0.8, 200, 300, 5);
        let a = run_counterexample_census(&g, &cfg).unwrap();
        let b = run_counterexample_census(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks, 300);
        assert_eq!(a.ml_agree + a.not_ml, a.returned_codeword);
        assert!(a.correct <= a.returned_codeword);
        assert_eq!(a.certified_not_ml, 0);
    }
}
