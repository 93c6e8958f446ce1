//! Rate of divergent-consistent trajectories at `β = 1/(dv − 1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, trial_rng, ChannelSpec};
use crate::msgpass::{run, DecoderConfig, Status};
use crate::tanner::{build_regular_graph, Codeword};

use super::{wilson_interval, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub dv: usize,
    pub dc: usize,
    pub n: usize,
    pub girth: usize,
    /// BSC crossover probabilities.
    pub grid: Vec<f64>,
    pub trials: u64,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub p: f64,
    pub trials: u64,
    pub divergent_consistent: u64,
    pub rate: f64,
    pub rate_lo: f64,
    pub rate_hi: f64,
    pub converged: u64,
    pub word_errors: u64,
}

/// One freshly drawn code per trial, all-zeros transmitted.
pub fn run_conjecture_probe(cfg: &ProbeConfig) -> Result<Vec<ProbeRow>, SimError> {
    if cfg.dv < 2 {
        return Err(SimError::Config("dv must be at least 2".into()));
    }
    let beta = 1.0 / (cfg.dv as f64 - 1.0);
    let dcfg = DecoderConfig::new(beta, cfg.max_iters);
    let mut rows = Vec::with_capacity(cfg.grid.len());
    for (k, &p) in cfg.grid.iter().enumerate() {
        let spec = ChannelSpec::bsc(p).map_err(|e| SimError::Config(e.to_string()))?;
        let outcomes: Vec<(bool, bool, bool)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let g = build_regular_graph(cfg.n, cfg.dv, cfg.dc, cfg.girth, cfg.seed ^ (t << 20))?;
                let mut rng = trial_rng(cfg.seed, k as u64, t);
                let sent = Codeword::zeros(cfg.n);
                let llr = channel::llr(&spec, &channel::sample(&spec, &sent, &mut rng)).expect("valid channel");
                let r = run(&g, &llr, &dcfg).expect("valid config");
                Ok((
                    matches!(r.status, Status::DivergentConsistent { .. }),
                    r.status == Status::Converged,
                    r.hard != sent,
                ))
            })
            .collect::<Result<_, SimError>>()?;
        let trials = outcomes.len() as u64;
        let dc_count = outcomes.iter().filter(|o| o.0).count() as u64;
        let (rate_lo, rate_hi) = wilson_interval(dc_count, trials);
        rows.push(ProbeRow {
            p,
            trials,
            divergent_consistent: dc_count,
            rate: dc_count as f64 / trials as f64,
            rate_lo,
            rate_hi,
            converged: outcomes.iter().filter(|o| o.1).count() as u64,
            word_errors: outcomes.iter().filter(|o| o.2).count() as u64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_and_extremes() {
        let mut cfg = ProbeConfig {
            dv: 3,
            dc: 6,
            n: 96,
            girth: 4,
            grid: vec![],
            trials: 10,
            max_iters: 300,
            seed: 3,
        };
        assert!(run_conjecture_probe(&cfg).unwrap().is_empty());
        cfg.grid = vec![0.002, 0.3];
        let rows = run_conjecture_probe(&cfg).unwrap();
        assert!(rows[0].rate >= 0.8, "{:?}", rows[0]);
        assert_eq!(rows[1].divergent_consistent, 0);
    }
}
