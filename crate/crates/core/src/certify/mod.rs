//! Optimality certificates for WMS and AMP decoding.
//!
//! A converged WMS run with `β(dv − 1) < 1` whose messages are consistent
//! yields a dual point `τ` of the LP relaxation whose objective matches the
//! cost of the hard decisions; that equality certifies the word as both LP
//! and ML optimal. For `β = 1/(dv − 1)` runs that diverge consistently, the
//! δ-reduction reruns with a slightly smaller weight and certifies that run.

mod consistency;

pub use consistency::{
    amp_edge_decisions, check_amp_consistency, check_wms_consistency, is_wms_consistent, AmpConsistency,
    Condition, ConsistencyReport, Violation,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::inf_norm;
use crate::msgpass::{
    beliefs, hard_from_beliefs, run, wms_c2v, wms_step, AmpMessages, DecodeResult, DecoderConfig, Status,
    WmsMessages, DEFAULT_FP_FACTOR,
};
use crate::opt::{dual_objective, local_min_over_even};
use crate::tanner::{Codeword, TannerGraph};

/// Largest check degree the brute-force local checks accept.
pub const MAX_LOCAL_DEGREE: usize = 20;
/// Certification tolerance as a multiple of `1 + ‖γ‖₁`.
pub const DEFAULT_CERT_FACTOR: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("messages are not a fixed point: residual {residual:e} exceeds {tol:e}")]
    NotFixedPoint { residual: f64, tol: f64 },
    #[error("certificates need a regular graph")]
    Irregular,
    #[error("check degree {0} exceeds the brute-force limit {MAX_LOCAL_DEGREE}")]
    DegreeTooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Reason {
    Tie,
    Inconsistent { condition: Condition, bit: usize },
    NotCodeword,
    LocalMinimizer { check: usize },
    Gap { gap: f64, tol: f64 },
    DeltaReductionFailed { detail: String },
    NoL1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertKind {
    MlCertified,
    NotCertified(Reason),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualWitness {
    /// `τ_{i,j}` by edge id.
    pub tau: Vec<f64>,
    /// `g(τ) = Σ_j min over even subsets S of Σ_{i∈S} τ_{i,j}`.
    pub objective: f64,
    /// `max_i |Σ_j τ_{i,j} − γ_i|`.
    pub feasibility_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    /// `Σ γ_i x̂_i`.
    pub f_candidate: f64,
    pub g_witness: Option<f64>,
    pub gap: Option<f64>,
    pub tol_cert: f64,
    /// Every check's local minimizer was unique.
    pub unique_local_minimizers: bool,
    pub witness: Option<DualWitness>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.kind == CertKind::MlCertified
    }
}

/// Default certification tolerance `1e−7 (1 + ‖γ‖₁)`.
pub fn default_tol_cert(llr: &[f64]) -> f64 {
    DEFAULT_CERT_FACTOR * (1.0 + llr.iter().map(|v| v.abs()).sum::<f64>())
}

/// `‖W[μ] − μ‖∞`.
pub fn fixed_point_residual(graph: &TannerGraph, llr: &[f64], mu: &[f64], beta: f64) -> f64 {
    let next = wms_step(graph, llr, &WmsMessages::new(mu.to_vec()), beta);
    next.v2c
        .iter()
        .zip(mu)
        .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
}

/// `τ_{i,j} = (μ_{i→j} − β(dv − 1) μ_{i←j}) / dv` from a fixed point.
pub fn build_dual_witness(
    graph: &TannerGraph,
    llr: &[f64],
    mu: &[f64],
    beta: f64,
    fp_tol: f64,
) -> Result<DualWitness, CertifyError> {
    let (dv, dc) = graph.regular_degrees().ok_or(CertifyError::Irregular)?;
    if dc > MAX_LOCAL_DEGREE {
        return Err(CertifyError::DegreeTooLarge(dc));
    }
    let residual = fixed_point_residual(graph, llr, mu, beta);
    if !(residual <= fp_tol) {
        return Err(CertifyError::NotFixedPoint { residual, tol: fp_tol });
    }
    let c2v = wms_c2v(graph, mu);
    let scale = beta * (dv as f64 - 1.0);
    let tau: Vec<f64> = mu
        .iter()
        .zip(&c2v)
        .map(|(&out, &back)| (out - scale * back) / dv as f64)
        .collect();
    let feasibility_residual = (0..graph.n())
        .map(|i| (tau[graph.var_edges(i)].iter().sum::<f64>() - llr[i]).abs())
        .fold(0.0, f64::max);
    Ok(DualWitness {
        objective: dual_objective(graph, &tau),
        tau,
        feasibility_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimizer {
    /// The word `½(1 − sgn μ_j)` is even and attains the minimum.
    pub attains_min: bool,
    pub unique: bool,
    pub min_value: f64,
    pub candidate_value: f64,
}

/// Compares `½(1 − sgn μ_j)` against every even-weight local word for `⟨w, τ_j⟩`.
pub fn check_local_minimizer(tau_j: &[f64], mu_j: &[f64]) -> Result<LocalMinimizer, CertifyError> {
    if tau_j.len() > MAX_LOCAL_DEGREE {
        return Err(CertifyError::DegreeTooLarge(tau_j.len()));
    }
    let tol = 1e-9 * (1.0 + tau_j.iter().map(|t| t.abs()).sum::<f64>());
    let candidate: Vec<bool> = mu_j.iter().map(|&m| m < 0.0).collect();
    let even = candidate.iter().filter(|&&b| b).count() % 2 == 0;
    let candidate_value: f64 = tau_j
        .iter()
        .zip(&candidate)
        .filter(|(_, &b)| b)
        .map(|(t, _)| t)
        .sum();
    let (min_value, second) = local_min_over_even(tau_j);
    let attains_min = even && candidate_value <= min_value + tol;
    Ok(LocalMinimizer {
        attains_min,
        unique: attains_min && second > min_value + tol,
        min_value,
        candidate_value,
    })
}

/// Tolerances for [`certify_ml_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CertifyOptions {
    /// `None`: the default fixed-point tolerance, or the run's last step if larger.
    pub fp_tol: Option<f64>,
    /// `None`: [`default_tol_cert`].
    pub tol_cert: Option<f64>,
}

pub fn certify_ml(
    graph: &TannerGraph,
    llr: &[f64],
    result: &DecodeResult,
    beta: f64,
) -> Result<Certificate, CertifyError> {
    certify_ml_with(graph, llr, result, beta, CertifyOptions::default())
}

/// Certifies a converged WMS run, reporting the first failing clause.
pub fn certify_ml_with(
    graph: &TannerGraph,
    llr: &[f64],
    result: &DecodeResult,
    beta: f64,
    opts: CertifyOptions,
) -> Result<Certificate, CertifyError> {
    if result.status != Status::Converged {
        return Err(CertifyError::Precondition(format!(
            "certificate needs a converged run, status is {:?}",
            result.status
        )));
    }
    let (dv, dc) = graph.regular_degrees().ok_or(CertifyError::Irregular)?;
    if dc > MAX_LOCAL_DEGREE {
        return Err(CertifyError::DegreeTooLarge(dc));
    }
    let mu = &result.messages.v2c;
    let c2v = wms_c2v(graph, mu);
    let (hard, tie) = hard_from_beliefs(&beliefs(graph, llr, &c2v, beta));
    let f_candidate = hard.cost(llr);
    let tol_cert = opts.tol_cert.unwrap_or_else(|| default_tol_cert(llr));
    // a step below the stopping tolerance bounds the residual up to rounding at the messages' scale
    let fp_tol = opts.fp_tol.unwrap_or_else(|| {
        let stop = (DEFAULT_FP_FACTOR * inf_norm(llr).max(1.0)).max(result.last_step);
        2.0 * stop + 8.0 * f64::EPSILON * dv as f64 * inf_norm(mu)
    });

    let witness = build_dual_witness(graph, llr, mu, beta, fp_tol)?;
    let report = check_wms_consistency(graph, llr, mu, &c2v, beta);

    let mut unique = true;
    let mut failing_check = None;
    for j in 0..graph.m() {
        let edges = graph.check_edges(j);
        let tau_j: Vec<f64> = edges.iter().map(|&e| witness.tau[e]).collect();
        let mu_j: Vec<f64> = edges.iter().map(|&e| mu[e]).collect();
        let lm = check_local_minimizer(&tau_j, &mu_j)?;
        unique &= lm.unique;
        if !lm.attains_min && failing_check.is_none() {
            failing_check = Some(j);
        }
    }
    let gap = f_candidate - witness.objective;

    let kind = if tie || report.has_tie() {
        CertKind::NotCertified(Reason::Tie)
    } else if let Some(v) = report.violations.first() {
        CertKind::NotCertified(Reason::Inconsistent {
            condition: v.condition,
            bit: v.bit,
        })
    } else if !graph.is_codeword(hard.bits()) {
        CertKind::NotCertified(Reason::NotCodeword)
    } else if let Some(check) = failing_check {
        CertKind::NotCertified(Reason::LocalMinimizer { check })
    } else if !(gap <= tol_cert) {
        CertKind::NotCertified(Reason::Gap { gap, tol: tol_cert })
    } else {
        CertKind::MlCertified
    };
    Ok(Certificate {
        kind,
        f_candidate,
        g_witness: Some(witness.objective),
        gap: Some(gap),
        tol_cert,
        unique_local_minimizers: unique,
        witness: Some(witness),
    })
}

/// Result of the δ-reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlackwellOutcome {
    pub certificate: Certificate,
    pub delta: Option<f64>,
    pub l0: Option<usize>,
    pub l1: Option<usize>,
    /// Hard decisions of the `β = 1/(dv − 1)` run at `L0`.
    pub hard_at_l0: Option<Codeword>,
    /// Hard decisions of the reduced run.
    pub hard_delta: Option<Codeword>,
    pub rerun_iters: usize,
    pub rerun_status: Option<Status>,
}

/// Budget for the reduced run: the contraction factor is `δ`, so reaching
/// the fixed-point tolerance takes about `ln(1/tol) / (1 − δ)` iterations.
pub fn delta_rerun_budget(l1: usize) -> usize {
    let inv = (l1 * (l1 + 1)) as f64;
    (40.0 * inv) as usize + 1000
}

/// δ-reduction for a run at `β = 1/(dv − 1)` that diverges consistently.
///
/// `config.max_iters` bounds the search for `L1`.
pub fn blackwell_certify(
    graph: &TannerGraph,
    llr: &[f64],
    config: &DecoderConfig,
) -> Result<BlackwellOutcome, CertifyError> {
    let (dv, _) = graph.regular_degrees().ok_or(CertifyError::Irregular)?;
    if dv < 2 {
        return Err(CertifyError::Precondition("needs dv ≥ 2".into()));
    }
    let beta = 1.0 / (dv as f64 - 1.0);
    if (config.beta - beta).abs() > 1e-12 {
        return Err(CertifyError::Precondition(format!(
            "δ-reduction starts from β = 1/(dv − 1) = {beta}, got {}",
            config.beta
        )));
    }
    let mut cfg = config.clone();
    cfg.beta = beta;
    cfg.stop_on_codeword = false;
    let mut states: Vec<Vec<f64>> = Vec::new();
    let first = crate::msgpass::run_from(graph, llr, &cfg, WmsMessages::from_llr(graph, llr), |_, v, _| {
        states.push(v.to_vec())
    })
    .map_err(|e| CertifyError::Precondition(e.to_string()))?;
    if !matches!(first.status, Status::DivergentConsistent { .. }) {
        return Err(CertifyError::Precondition(format!(
            "run at β = 1/(dv − 1) is {:?}, not divergent and consistent",
            first.status
        )));
    }

    let g_inf = inf_norm(llr);
    let not_certified = |reason: Reason, l0, l1, delta| BlackwellOutcome {
        certificate: Certificate {
            kind: CertKind::NotCertified(reason),
            f_candidate: f64::NAN,
            g_witness: None,
            gap: None,
            tol_cert: default_tol_cert(llr),
            unique_local_minimizers: false,
            witness: None,
        },
        delta,
        l0,
        l1,
        hard_at_l0: None,
        hard_delta: None,
        rerun_iters: 0,
        rerun_status: None,
    };

    // per-state flags for the L0 search
    let good = |v: &[f64]| {
        let c2v = wms_c2v(graph, v);
        is_wms_consistent(graph, llr, v, &c2v, beta) && v.iter().all(|x| x.abs() >= 2.0 * g_inf)
    };
    let negs = |v: &[f64]| v.iter().map(|&x| x < 0.0).collect::<Vec<bool>>();
    let mut ok: Vec<bool> = states.iter().map(|v| good(v)).collect();

    let (l0, l1) = loop {
        let h = states.len() - 1;
        let last_signs = negs(&states[h]);
        // smallest L0 > 2 such that every state in [L0, h] is good and shares the sign pattern of h
        let mut l0 = None;
        for l in (3..=h).rev() {
            if ok[l] && negs(&states[l]) == last_signs {
                l0 = Some(l);
            } else {
                break;
            }
        }
        if let Some(l0) = l0 {
            let target = inf_norm(&states[l0]) + 2.0 * g_inf;
            let l1 = (l0 + 1..=h).find(|&l| states[l..=h].iter().all(|v| v.iter().all(|x| x.abs() >= target)));
            if let Some(l1) = l1 {
                break (l0, l1);
            }
        }
        if h >= config.max_iters {
            return Ok(not_certified(Reason::NoL1, l0, None, None));
        }
        let next = wms_step(graph, llr, &WmsMessages::new(states[h].clone()), beta);
        ok.push(good(&next.v2c));
        states.push(next.v2c);
    };

    let delta = 1.0 - 1.0 / (l1 as f64 * (l1 as f64 + 1.0));
    let (hard_at_l0, _) = hard_from_beliefs(&beliefs(graph, llr, &wms_c2v(graph, &states[l0]), beta));

    let mut rerun_cfg = DecoderConfig::new(delta / (dv as f64 - 1.0), delta_rerun_budget(l1));
    rerun_cfg.fp_tol = Some(
        config
            .fp_tol_for(llr)
            .max(1e-14 * g_inf * (l1 * (l1 + 1)) as f64),
    );
    rerun_cfg.detect_divergence = false;
    let rerun = run(graph, llr, &rerun_cfg).map_err(|e| CertifyError::Precondition(e.to_string()))?;

    let mut out = not_certified(Reason::NoL1, Some(l0), Some(l1), Some(delta));
    out.hard_at_l0 = Some(hard_at_l0.clone());
    out.hard_delta = Some(rerun.hard.clone());
    out.rerun_iters = rerun.iters;
    out.rerun_status = Some(rerun.status);

    let failure = if rerun.status != Status::Converged {
        Some(format!("reduced run ended as {:?} after {} iterations", rerun.status, rerun.iters))
    } else if !rerun.consistency.wms_consistent {
        Some("reduced fixed point is not consistent".to_string())
    } else if rerun.hard != hard_at_l0 {
        Some("reduced hard decisions differ from those at L0".to_string())
    } else {
        None
    };
    if let Some(detail) = failure {
        out.certificate.kind = CertKind::NotCertified(Reason::DeltaReductionFailed { detail });
        return Ok(out);
    }
    out.certificate = certify_ml(graph, llr, &rerun, rerun_cfg.beta)?;
    Ok(out)
}

/// `|Σ_e μ*_e(x*_e) − dv Σ_i (1 − x*_i) γ_i / (1 − β(dv − 1)(dc − 1))|` at an
/// AMP-consistent fixed point.
pub fn amp_reward_identity_check(
    graph: &TannerGraph,
    llr: &[f64],
    mu: &AmpMessages,
    beta: f64,
) -> Result<f64, CertifyError> {
    let (dv, dc) = graph.regular_degrees().ok_or(CertifyError::Irregular)?;
    let rep = check_amp_consistency(graph, mu);
    if !rep.consistent {
        return Err(CertifyError::Precondition("AMP messages are not consistent".into()));
    }
    let x = rep.word.bits();
    let lhs: f64 = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, _))| if x[i] == 0 { mu.v2c0[e] } else { mu.v2c1[e] })
        .sum();
    let corr: f64 = (0..graph.n()).filter(|&i| x[i] == 0).map(|i| llr[i]).sum();
    let rhs = dv as f64 * corr / (1.0 - beta * (dv as f64 - 1.0) * (dc as f64 - 1.0));
    Ok((lhs - rhs).abs())
}
