//! Monte Carlo campaigns with persisted, resumable results.
//!
//! Every `(grid point, trial)` pair owns a random stream derived from the
//! master seed, and all decoders at that pair see the same channel
//! realization. Records are appended in trial order, so an interrupted and
//! resumed campaign produces the same files as an uninterrupted one.

mod census;
mod probe;
mod stats;

pub use census::{run_counterexample_census, Census, CensusConfig, Transmit};
pub use probe::{run_conjecture_probe, ProbeConfig, ProbeRow};
pub use stats::{wilson_interval, WILSON_Z95};

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::certify::{blackwell_certify, certify_ml};
use crate::channel::{self, trial_rng, ChannelSpec, LlrVector};
use crate::msgpass::{run, run_trmp, uniform_rho, DecoderConfig, Status};
use crate::opt::{exact_ml, MlSolution};
use crate::tanner::{build_regular_graph, example1_graph, parse_alist, Codeword, TannerError, TannerGraph};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph error: {0}")]
    Graph(#[from] TannerError),
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error("existing results in {0} belong to a different campaign")]
    Mismatch(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GraphSource {
    Example1,
    File {
        path: PathBuf,
    },
    Generate {
        n: usize,
        dv: usize,
        dc: usize,
        #[serde(default = "default_girth")]
        girth: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_girth() -> usize {
    6
}

impl GraphSource {
    pub fn load(&self) -> Result<TannerGraph, SimError> {
        Ok(match self {
            GraphSource::Example1 => example1_graph(),
            GraphSource::File { path } => parse_alist(&fs::read_to_string(path)?)?,
            GraphSource::Generate { n, dv, dc, girth, seed } => build_regular_graph(*n, *dv, *dc, *girth, *seed)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum DecoderSpec {
    Wms {
        beta: f64,
        iters: usize,
    },
    /// `rho = None` selects the uniform edge appearance probability.
    Trmp {
        #[serde(default)]
        rho: Option<f64>,
        iters: usize,
    },
}

impl DecoderSpec {
    pub fn label(&self) -> String {
        match self {
            DecoderSpec::Wms { beta, iters } => format!("wms_b{beta}_i{iters}"),
            DecoderSpec::Trmp { rho: Some(r), iters } => format!("trmp_r{r}_i{iters}"),
            DecoderSpec::Trmp { rho: None, iters } => format!("trmp_i{iters}"),
        }
    }
}

/// WMS at β ∈ {0.5, 0.8, 1} for 100 iterations and uniform-ρ TRMP for 100 and 1000.
pub fn trmp_comparison_decoders() -> Vec<DecoderSpec> {
    vec![
        DecoderSpec::Wms { beta: 0.5, iters: 100 },
        DecoderSpec::Wms { beta: 0.8, iters: 100 },
        DecoderSpec::Wms { beta: 1.0, iters: 100 },
        DecoderSpec::Trmp { rho: None, iters: 100 },
        DecoderSpec::Trmp { rho: None, iters: 1000 },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub graph: GraphSource,
    /// Channel kind; the parameter is taken from `grid`.
    pub channel: ChannelSpec,
    pub grid: Vec<f64>,
    pub decoders: Vec<DecoderSpec>,
    pub trials: u64,
    pub seed: u64,
    pub output: PathBuf,
    /// Work units between appends to the trial file.
    #[serde(default = "default_checkpoint")]
    pub checkpoint: u64,
    /// Attempt an ML certificate on converged WMS runs.
    #[serde(default)]
    pub certify: bool,
    /// Also run the δ-reduction on divergent-consistent runs at `β = 1/(dv − 1)`.
    #[serde(default)]
    pub blackwell: bool,
    /// Compare against exact ML (small codes only).
    #[serde(default)]
    pub ml_oracle: bool,
    /// Half-width of a uniform LLR perturbation that breaks ties.
    #[serde(default)]
    pub perturbation: Option<f64>,
}

fn default_checkpoint() -> u64 {
    256
}

impl Campaign {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if self.decoders.is_empty() {
            return Err(SimError::Config("no decoders configured".into()));
        }
        if self.checkpoint == 0 {
            return Err(SimError::Config("checkpoint must be at least 1".into()));
        }
        for &v in &self.grid {
            self.channel
                .with_param(v)
                .validate()
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        for d in &self.decoders {
            let bad = match *d {
                DecoderSpec::Wms { beta, .. } => !(0.0..=1.0).contains(&beta),
                DecoderSpec::Trmp { rho: Some(r), .. } => !(r > 0.0 && r <= 1.0),
                DecoderSpec::Trmp { rho: None, .. } => false,
            };
            if bad {
                return Err(SimError::Config(format!("decoder {} has an invalid weight", d.label())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the campaign's JSON form, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        hex_digest(serde_json::to_string(&c).expect("campaign serializes").as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub param: f64,
    pub decoder: String,
    pub trial: u64,
    pub status: String,
    pub iters: usize,
    /// Hard word differs from the transmitted word.
    pub word_error: bool,
    /// Word error whose output is not a codeword.
    pub detected_error: bool,
    /// WMS-consistency of the final messages; empty for TRMP.
    pub consistent: Option<bool>,
    pub certified: bool,
    pub ml_agrees: Option<bool>,
    pub tie: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: usize,
    pub param: f64,
    pub decoder: String,
    pub trials: u64,
    pub word_errors: u64,
    pub wer: f64,
    pub wer_lo: f64,
    pub wer_hi: f64,
    pub detected_errors: u64,
    pub inconsistent: u64,
    pub p_inconsistent: f64,
    pub incons_lo: f64,
    pub incons_hi: f64,
    pub certified: u64,
    /// Certified records that exact ML rejects; must be zero.
    pub certified_not_ml: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub campaign_hash: String,
    pub seed: u64,
    pub code_fingerprint: String,
    pub units_total: u64,
    pub units_done: u64,
    pub decoders: Vec<String>,
    pub version: String,
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub summaries: Vec<PointSummary>,
    pub records: Vec<TrialRecord>,
    pub manifest: Manifest,
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shared per-unit context.
struct Ctx<'a> {
    campaign: &'a Campaign,
    graph: &'a TannerGraph,
    beta_critical: Option<f64>,
    rho_uniform: f64,
}

impl Ctx<'_> {
    fn channel_llr(&self, point: usize, trial: u64, sent: &Codeword) -> LlrVector {
        let spec = self.campaign.channel.with_param(self.campaign.grid[point]);
        let mut rng = trial_rng(self.campaign.seed, point as u64, trial);
        let obs = channel::sample(&spec, sent, &mut rng);
        let mut llr = channel::llr(&spec, &obs).expect("validated channel");
        if let Some(eta) = self.campaign.perturbation {
            llr.perturb(eta, &mut rng);
        }
        llr
    }

    fn unit(&self, point: usize, trial: u64) -> Vec<TrialRecord> {
        let g = self.graph;
        let sent = Codeword::zeros(g.n());
        let llr = self.channel_llr(point, trial, &sent);
        let ml: Option<MlSolution> = self.campaign.ml_oracle.then(|| exact_ml(g, &llr).expect("checked dimension"));
        let ml_tol = 1e-9 * (1.0 + llr.l1_norm());
        let param = self.campaign.grid[point];
        self.campaign
            .decoders
            .iter()
            .map(|d| {
                let (hard, status, iters, consistent, certified, tie) = match *d {
                    DecoderSpec::Wms { beta, iters } => {
                        let r = run(g, &llr, &DecoderConfig::new(beta, iters)).expect("validated decoder");
                        let mut certified = false;
                        if self.campaign.certify && r.status == Status::Converged {
                            certified = certify_ml(g, &llr, &r, beta).is_ok_and(|c| c.is_certified());
                        }
                        let critical = self.beta_critical.is_some_and(|b| (b - beta).abs() < 1e-12);
                        if self.campaign.blackwell && critical && matches!(r.status, Status::DivergentConsistent { .. }) {
                            certified = blackwell_certify(g, &llr, &DecoderConfig::new(beta, iters))
                                .is_ok_and(|o| o.certificate.is_certified());
                        }
                        (r.hard, status_label(r.status), r.iters, Some(r.consistency.wms_consistent), certified, r.tie)
                    }
                    DecoderSpec::Trmp { rho, iters } => {
                        let r = run_trmp(g, &llr, rho.unwrap_or(self.rho_uniform), iters).expect("validated decoder");
                        (r.hard, "fixed_length".to_string(), r.iters, None, false, r.tie)
                    }
                };
                let word_error = hard != sent;
                let is_cw = g.is_codeword(hard.bits());
                TrialRecord {
                    point,
                    param,
                    decoder: d.label(),
                    trial,
                    status,
                    iters,
                    word_error,
                    detected_error: word_error && !is_cw,
                    consistent,
                    certified,
                    ml_agrees: ml
                        .as_ref()
                        .map(|m| is_cw && (hard.cost(&llr) - m.objective).abs() <= ml_tol),
                    tie,
                }
            })
            .collect()
    }
}

pub fn status_label(s: Status) -> String {
    match s {
        Status::Converged => "converged".into(),
        Status::DivergentConsistent { l0 } => format!("divergent_consistent@{l0}"),
        Status::Oscillating { period } => format!("oscillating@{period}"),
        Status::MaxIters => "max_iters".into(),
        Status::CodewordFound => "codeword_found".into(),
    }
}

fn read_records(path: &Path) -> Result<Vec<TrialRecord>, SimError> {
    let mut out = Vec::new();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    for rec in rdr.deserialize() {
        // a torn final line from an interrupted write ends the usable prefix
        match rec {
            Ok(r) => out.push(r),
            Err(_) => break,
        }
    }
    Ok(out)
}

fn write_records(path: &Path, records: &[TrialRecord], header: bool, append: bool) -> Result<(), SimError> {
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(BufWriter::new(file));
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SimError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)? + "\n")?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Per-(point, decoder) summaries in grid then decoder order.
pub fn summarize(campaign: &Campaign, records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut out = Vec::new();
    for (point, &param) in campaign.grid.iter().enumerate() {
        for d in &campaign.decoders {
            let label = d.label();
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.point == point && r.decoder == label).collect();
            let trials = rs.len() as u64;
            let count = |f: &dyn Fn(&TrialRecord) -> bool| rs.iter().filter(|r| f(r)).count() as u64;
            let word_errors = count(&|r| r.word_error);
            let inconsistent = count(&|r| r.consistent == Some(false));
            let (wer_lo, wer_hi) = wilson_interval(word_errors, trials);
            let (incons_lo, incons_hi) = wilson_interval(inconsistent, trials);
            let frac = |k: u64| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
            out.push(PointSummary {
                point,
                param,
                decoder: label,
                trials,
                word_errors,
                wer: frac(word_errors),
                wer_lo,
                wer_hi,
                detected_errors: count(&|r| r.detected_error),
                inconsistent,
                p_inconsistent: frac(inconsistent),
                incons_lo,
                incons_hi,
                certified: count(&|r| r.certified),
                certified_not_ml: count(&|r| r.certified && r.ml_agrees == Some(false)),
            });
        }
    }
    out
}

/// Runs (or resumes) a campaign, writing `trials.csv`, `summary.csv` and `manifest.json` under `output`.
pub fn run_wer_campaign(campaign: &Campaign) -> Result<CampaignResult, SimError> {
    run_campaign_limited(campaign, None)
}

/// As [`run_wer_campaign`], but stops after `max_units` new work units; used to exercise resumption.
pub fn run_campaign_limited(campaign: &Campaign, max_units: Option<u64>) -> Result<CampaignResult, SimError> {
    campaign.validate()?;
    let graph = campaign.graph.load()?;
    if campaign.ml_oracle {
        exact_ml(&graph, &vec![1.0; graph.n()])?;
    }
    let regular = graph.regular_degrees();
    let ctx = Ctx {
        campaign,
        graph: &graph,
        beta_critical: regular.filter(|&(dv, _)| dv >= 2).map(|(dv, _)| 1.0 / (dv as f64 - 1.0)),
        rho_uniform: regular.map_or(1.0, |(dv, dc)| uniform_rho(graph.n(), dv, dc)),
    };
    let units_total = campaign.grid.len() as u64 * campaign.trials;
    fs::create_dir_all(&campaign.output)?;
    let trials_path = campaign.output.join(TRIALS_FILE);
    let manifest_path = campaign.output.join(MANIFEST_FILE);
    let mut manifest = Manifest {
        campaign_hash: campaign.hash(),
        seed: campaign.seed,
        code_fingerprint: graph.fingerprint(),
        units_total,
        units_done: 0,
        decoders: campaign.decoders.iter().map(DecoderSpec::label).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };

    let per_unit = campaign.decoders.len();
    let mut records = Vec::new();
    if manifest_path.exists() && trials_path.exists() {
        let old: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
        if old.campaign_hash != manifest.campaign_hash {
            return Err(SimError::Mismatch(campaign.output.clone()));
        }
        records = read_records(&trials_path)?;
        records.truncate(records.len() / per_unit * per_unit);
    }
    // rewrite the usable prefix so a torn tail never survives
    write_records(&trials_path, &records, true, false)?;
    let mut done = (records.len() / per_unit) as u64;
    manifest.units_done = done;
    write_json(&manifest_path, &manifest)?;

    let stop = max_units.map_or(units_total, |m| (done + m).min(units_total));
    while done < stop {
        let end = (done + campaign.checkpoint).min(stop);
        let batch: Vec<TrialRecord> = (done..end)
            .into_par_iter()
            .map(|u| {
                let point = (u / campaign.trials) as usize;
                ctx.unit(point, u % campaign.trials)
            })
            .flatten_iter()
            .collect();
        write_records(&trials_path, &batch, false, true)?;
        records.extend(batch);
        done = end;
        manifest.units_done = done;
        write_json(&manifest_path, &manifest)?;
    }

    let summaries = summarize(campaign, &records);
    let mut w = csv::Writer::from_writer(File::create(campaign.output.join(SUMMARY_FILE))?);
    for s in &summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(CampaignResult {
        summaries,
        records,
        manifest,
    })
}

/// Runs the WMS/TRMP comparison; an empty decoder list selects [`trmp_comparison_decoders`].
pub fn run_trmp_comparison(campaign: &Campaign) -> Result<CampaignResult, SimError> {
    let mut c = campaign.clone();
    if c.decoders.is_empty() {
        c.decoders = trmp_comparison_decoders();
    }
    run_wer_campaign(&c)
}
