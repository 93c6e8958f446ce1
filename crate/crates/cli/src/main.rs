//! `mpcert`: decode, certify, compute DE thresholds and run simulation campaigns.

mod config;

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mpcert_core::certify::{blackwell_certify, certify_ml_with, CertifyOptions};
use mpcert_core::channel::{self, parse_llr_text, trial_rng, ChannelSpec, LlrVector};
use mpcert_core::de::{threshold, CurveRow, DeError, ThresholdQuery, ThresholdResult};
use mpcert_core::msgpass::{run, run_trmp, uniform_rho, DecoderConfig, Status};
use mpcert_core::opt::exact_ml;
use mpcert_core::sim::{
    run_conjecture_probe, run_counterexample_census, run_trmp_comparison, run_wer_campaign, Campaign, CensusConfig,
    GraphSource, ProbeConfig, SimError,
};
use mpcert_core::tanner::{build_regular_graph, example1_graph, parse_alist, write_alist, Codeword, TannerGraph};

#[derive(Parser)]
#[command(name = "mpcert", version, about = "Weighted min-sum decoding with ML certificates")]
struct Cli {
    /// TOML file whose [<subcommand>] table supplies defaults for that subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for campaigns and density evolution (default: available parallelism).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one LLR vector and print the result as JSON.
    Decode(DecodeArgs),
    /// Density-evolution threshold of a regular ensemble under WMS.
    Threshold(ThresholdArgs),
    /// Run a simulation campaign described by a TOML recipe.
    Campaign(CampaignArgs),
    /// Generate a random regular code and write it in alist format.
    Gencode(GencodeArgs),
    /// Decode with WMS and try to certify the output as the ML codeword.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Parity-check matrix in alist format.
    #[arg(long, value_name = "FILE", conflicts_with = "example1")]
    code: Option<PathBuf>,
    /// Use the built-in length-12 (3,4)-regular example code.
    #[arg(long)]
    example1: bool,
}

impl CodeArgs {
    fn load(&self) -> Result<TannerGraph, Failure> {
        match (&self.code, self.example1) {
            (_, true) => Ok(example1_graph()),
            (Some(path), false) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))?;
                parse_alist(&text).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))
            }
            (None, false) => Err(Failure::input(anyhow!("give --code FILE or --example1"))),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Bsc,
    Biawgn,
}

impl ChannelKind {
    fn spec(self, param: f64) -> Result<ChannelSpec, Failure> {
        match self {
            ChannelKind::Bsc => ChannelSpec::bsc(param),
            ChannelKind::Biawgn => ChannelSpec::biawgn(param),
        }
        .map_err(|e| Failure::input(e.into()))
    }
}

#[derive(Args)]
struct NoiseArgs {
    /// Channel LLRs, whitespace or newline separated.
    #[arg(long, value_name = "FILE", conflicts_with = "channel")]
    llr: Option<PathBuf>,
    /// Sample LLRs for the all-zeros codeword from this channel instead.
    #[arg(long, value_enum, requires = "param")]
    channel: Option<ChannelKind>,
    /// Crossover probability (bsc) or noise deviation (biawgn).
    #[arg(long)]
    param: Option<f64>,
    /// Seed for the sampled channel output and the perturbation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add uniform noise of this half-width to every LLR to break ties.
    #[arg(long, value_name = "ETA")]
    perturb: Option<f64>,
}

impl NoiseArgs {
    fn load(&self, n: usize) -> Result<LlrVector, Failure> {
        let mut rng = trial_rng(self.seed, 0, 0);
        let mut llr = match (&self.llr, self.channel) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))?;
                parse_llr_text(&text).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))?
            }
            (None, Some(kind)) => {
                let spec = kind.spec(self.param.expect("clap enforces --param"))?;
                let obs = channel::sample(&spec, &Codeword::zeros(n), &mut rng);
                channel::llr(&spec, &obs).map_err(|e| Failure::input(e.into()))?
            }
            (None, None) => return Err(Failure::input(anyhow!("give --llr FILE or --channel with --param"))),
        };
        if llr.len() != n {
            return Err(Failure::input(anyhow!("LLR vector has {} entries, code length is {n}", llr.len())));
        }
        if let Some(eta) = self.perturb {
            llr.perturb(eta, &mut rng);
        }
        Ok(llr)
    }
}

#[derive(Args)]
struct WmsArgs {
    /// Weight on incoming check messages, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Fixed-point tolerance on the sup-norm step (default 1e-10 max(1, |llr|_inf)).
    #[arg(long)]
    fp_tol: Option<f64>,
    /// Magnitude above which messages count as diverging (default 100 |llr|_inf).
    #[arg(long)]
    div_threshold: Option<f64>,
    /// Consecutive iterations above the threshold, all consistent, to report divergence.
    #[arg(long, default_value_t = 10)]
    div_window: usize,
    /// Keep iterating through divergence instead of stopping.
    #[arg(long)]
    no_divergence_detection: bool,
    /// Stop as soon as the hard decisions form a codeword.
    #[arg(long)]
    stop_on_codeword: bool,
}

impl WmsArgs {
    fn config(&self) -> Result<DecoderConfig, Failure> {
        let cfg = DecoderConfig {
            fp_tol: self.fp_tol,
            div_threshold: self.div_threshold,
            div_window: self.div_window,
            detect_divergence: !self.no_divergence_detection,
            stop_on_codeword: self.stop_on_codeword,
            ..DecoderConfig::new(self.beta, self.iters)
        };
        cfg.validate().map_err(|e| Failure::input(e.into()))?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Wms,
    Trmp,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, value_enum, default_value_t = Algorithm::Wms)]
    algorithm: Algorithm,
    #[command(flatten)]
    wms: WmsArgs,
    /// TRMP edge weight (default: uniform edge appearance probability of the code).
    #[arg(long)]
    rho: Option<f64>,
    /// Attach an ML certificate attempt (WMS only).
    #[arg(long)]
    certify: bool,
    /// Include the final message vector in the output.
    #[arg(long)]
    messages: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    wms: WmsArgs,
    /// Certificate gap tolerance (default 1e-7 (1 + |llr|_1)).
    #[arg(long)]
    tol_cert: Option<f64>,
    /// Also solve ML exactly by enumeration and report agreement (small codes only).
    #[arg(long)]
    ml: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 3)]
    dv: usize,
    #[arg(long, default_value_t = 6)]
    dc: usize,
    /// Weight on check messages; repeat to compute a curve.
    #[arg(long, default_values_t = [0.5])]
    beta: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ChannelKind::Bsc)]
    channel: ChannelKind,
    /// Population size.
    #[arg(long, default_value_t = 1_000_000)]
    population: usize,
    /// Bisection stops when the bracket is narrower than this.
    #[arg(long, default_value_t = 5e-4)]
    tol: f64,
    /// Density-evolution iterations per noise level.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Error probability that counts as decoded.
    #[arg(long, default_value_t = 1e-6)]
    target: f64,
    /// Low end of the noise bracket (default 0.005 bsc, 0.3 biawgn).
    #[arg(long)]
    lo: Option<f64>,
    /// High end of the noise bracket (default 0.2 bsc, 1.5 biawgn).
    #[arg(long)]
    hi: Option<f64>,
    /// Iterations without a 1% improvement before a trajectory counts as stalled.
    #[arg(long, default_value_t = 100)]
    stall_window: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Append one CSV row per beta to this file.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CampaignKind {
    /// Word error rate and inconsistency rate per noise level.
    Wer,
    /// Returned codewords against exact ML on a small code.
    Census,
    /// WMS against TRMP on shared noise.
    Trmp,
    /// Rate of divergent-consistent runs at the critical weight.
    Conjecture,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(value_enum)]
    kind: CampaignKind,
    /// TOML recipe.
    recipe: PathBuf,
    /// Output directory (overrides the recipe).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed (overrides the recipe).
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per point, or blocks for a census (overrides the recipe).
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct GencodeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    dv: usize,
    #[arg(long, default_value_t = 6)]
    dc: usize,
    /// Minimum girth.
    #[arg(long, default_value_t = 6)]
    girth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }

    fn algorithm(error: anyhow::Error) -> Self {
        Failure { code: 3, error }
    }

    fn io(error: anyhow::Error) -> Self {
        Failure { code: 4, error }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) | SimError::Csv(_) | SimError::Json(_) => Failure::io(e.into()),
            SimError::Graph(_) => Failure::algorithm(e.into()),
            SimError::Config(_) | SimError::Mismatch(_) => Failure::input(e.into()),
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::io(e.into()))?;
    writeln!(out).map_err(|e| Failure::io(e.into()))
}

fn cmd_decode(a: &DecodeArgs) -> Result<(), Failure> {
    let graph = a.code.load()?;
    let llr = a.noise.load(graph.n())?;
    match a.algorithm {
        Algorithm::Trmp => {
            let rho = match a.rho {
                Some(r) => r,
                None => {
                    let (dv, dc) = graph
                        .regular_degrees()
                        .ok_or_else(|| Failure::input(anyhow!("uniform rho needs a regular code; pass --rho")))?;
                    uniform_rho(graph.n(), dv, dc)
                }
            };
            let r = run_trmp(&graph, &llr, rho, a.wms.iters).map_err(|e| Failure::input(e.into()))?;
            print_json(&r)
        }
        Algorithm::Wms => {
            let cfg = a.wms.config()?;
            let mut r = run(&graph, &llr, &cfg).map_err(|e| Failure::input(e.into()))?;
            if a.certify && r.status == Status::Converged {
                r.certificate = certify_ml_with(&graph, &llr, &r, cfg.beta, CertifyOptions::default()).ok();
            }
            let mut v = serde_json::to_value(&r).map_err(|e| Failure::io(e.into()))?;
            if !a.messages {
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("messages");
                }
            }
            print_json(&v)
        }
    }
}

#[derive(Serialize)]
struct MlComparison {
    objective: f64,
    decoder_objective: f64,
    agrees: bool,
    tie: bool,
}

#[derive(Serialize)]
struct CertifyReport {
    status: Status,
    iters: usize,
    hard: Codeword,
    certified: bool,
    /// Which procedure produced the certificate, if any.
    method: Option<&'static str>,
    certificate: Option<serde_json::Value>,
    detail: Option<String>,
    ml: Option<MlComparison>,
}

fn cmd_certify(a: &CertifyArgs) -> Result<(), Failure> {
    let graph = a.code.load()?;
    let llr = a.noise.load(graph.n())?;
    let cfg = a.wms.config()?;
    let r = run(&graph, &llr, &cfg).map_err(|e| Failure::input(e.into()))?;
    let critical = graph.regular_degrees().map(|(dv, _)| 1.0 / (dv as f64 - 1.0));
    let mut report = CertifyReport {
        status: r.status,
        iters: r.iters,
        hard: r.hard.clone(),
        certified: false,
        method: None,
        certificate: None,
        detail: None,
        ml: None,
    };
    let mut word = r.hard.clone();
    match r.status {
        Status::Converged => {
            let opts = CertifyOptions {
                fp_tol: None,
                tol_cert: a.tol_cert,
            };
            match certify_ml_with(&graph, &llr, &r, cfg.beta, opts) {
                Ok(c) => {
                    report.certified = c.is_certified();
                    report.method = Some("fixed_point");
                    report.certificate = serde_json::to_value(&c).ok();
                }
                Err(e) => report.detail = Some(e.to_string()),
            }
        }
        Status::DivergentConsistent { .. } if critical.is_some_and(|b| (b - cfg.beta).abs() < 1e-12) => {
            match blackwell_certify(&graph, &llr, &cfg) {
                Ok(o) => {
                    report.certified = o.certificate.is_certified();
                    report.method = Some("delta_reduction");
                    if let Some(h) = &o.hard_delta {
                        word = h.clone();
                    }
                    report.certificate = serde_json::to_value(&o).ok();
                }
                Err(e) => report.detail = Some(e.to_string()),
            }
        }
        s => report.detail = Some(format!("no certificate procedure applies to status {s:?}")),
    }
    if a.ml {
        let ml = exact_ml(&graph, &llr).map_err(|e| Failure::input(e.into()))?;
        let decoder_objective = word.cost(&llr);
        report.ml = Some(MlComparison {
            objective: ml.objective,
            decoder_objective,
            agrees: (decoder_objective - ml.objective).abs() <= 1e-9 * (1.0 + llr.l1_norm()),
            tie: ml.tie,
        });
    }
    print_json(&report)
}

fn append_csv(path: &Path, rows: &[CurveRow]) -> Result<(), Failure> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::io(anyhow!("{}: {e}", path.display())))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| Failure::io(e.into()))?;
    }
    w.flush().map_err(|e| Failure::io(e.into()))
}

fn cmd_threshold(a: &ThresholdArgs) -> Result<(), Failure> {
    let channel = a.channel.spec(match a.channel {
        ChannelKind::Bsc => 0.1,
        ChannelKind::Biawgn => 1.0,
    })?;
    let mut base = ThresholdQuery::new(a.dv, a.dc, a.beta[0], channel);
    base.population = a.population;
    base.tolerance = a.tol;
    base.max_iters = a.max_iters;
    base.target_error = a.target;
    base.stall_window = a.stall_window;
    base.seed = a.seed;
    base.bracket = (a.lo.unwrap_or(base.bracket.0), a.hi.unwrap_or(base.bracket.1));

    let mut rows = Vec::new();
    let mut first_error: Option<DeError> = None;
    for &beta in &a.beta {
        let q = ThresholdQuery { beta, ..base.clone() };
        let head = format!("dv={} dc={} beta={beta} channel={}", q.dv, q.dc, channel.name());
        let (outcome, value, detail) = match threshold(&q) {
            Ok(ThresholdResult::Threshold { value, evaluations }) => {
                println!("{head} threshold={value:.6} evaluations={evaluations}");
                ("threshold", Some(value), String::new())
            }
            Ok(ThresholdResult::NoThreshold { floor, at }) => {
                println!("{head} no_threshold floor={floor:.6e} at={at}");
                ("no_threshold", Some(floor), format!("floor at {at}"))
            }
            Err(e) => {
                println!("{head} error=\"{e}\"");
                let detail = e.to_string();
                first_error.get_or_insert(e);
                ("error", None, detail)
            }
        };
        rows.push(CurveRow {
            dv: q.dv,
            dc: q.dc,
            beta,
            channel: channel.name().to_string(),
            outcome: outcome.to_string(),
            value,
            population: q.population,
            max_iters: q.max_iters,
            seed: q.seed,
            detail,
        });
    }
    if let Some(path) = &a.csv {
        append_csv(path, &rows)?;
    }
    match first_error {
        Some(e @ DeError::Query(_)) => Err(Failure::input(e.into())),
        Some(e) => Err(Failure::algorithm(e.into())),
        None => Ok(()),
    }
}

#[derive(Deserialize)]
struct CensusRecipe {
    #[serde(default = "example1_source")]
    graph: GraphSource,
    output: PathBuf,
    #[serde(flatten)]
    census: CensusConfig,
}

#[derive(Serialize)]
struct CensusRow {
    blocks: u64,
    returned_codeword: u64,
    returned_fraction: f64,
    ml_agree: u64,
    not_ml: u64,
    correct: u64,
    certified: u64,
    certified_not_ml: u64,
    ties: u64,
}

fn example1_source() -> GraphSource {
    GraphSource::Example1
}

#[derive(Deserialize)]
struct ProbeRecipe {
    output: PathBuf,
    #[serde(flatten)]
    probe: ProbeConfig,
}

fn read_recipe<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::input(anyhow!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(anyhow!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::io(anyhow!("{}: {e}", path.display())))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::io(e.into()))?;
    }
    w.into_inner().map_err(|e| Failure::io(anyhow!("{e}")))
}

fn cmd_campaign(a: &CampaignArgs) -> Result<(), Failure> {
    match a.kind {
        CampaignKind::Wer | CampaignKind::Trmp => {
            let mut c: Campaign = read_recipe(&a.recipe)?;
            if let Some(o) = &a.output {
                c.output = o.clone();
            }
            if let Some(s) = a.seed {
                c.seed = s;
            }
            if let Some(t) = a.trials {
                c.trials = t;
            }
            let r = match a.kind {
                CampaignKind::Wer => run_wer_campaign(&c)?,
                _ => run_trmp_comparison(&c)?,
            };
            io::stdout()
                .write_all(&to_csv(&r.summaries)?)
                .map_err(|e| Failure::io(e.into()))
        }
        CampaignKind::Census => {
            let mut recipe: CensusRecipe = read_recipe(&a.recipe)?;
            if let Some(o) = &a.output {
                recipe.output = o.clone();
            }
            if let Some(s) = a.seed {
                recipe.census.seed = s;
            }
            if let Some(t) = a.trials {
                recipe.census.blocks = t;
            }
            let graph = recipe.graph.load()?;
            let census = run_counterexample_census(&graph, &recipe.census)?;
            let json = serde_json::to_vec_pretty(&census).map_err(|e| Failure::io(e.into()))?;
            write_file(&recipe.output.join("census.json"), &json)?;
            let c = &census;
            let table = to_csv(&[CensusRow {
                blocks: c.blocks,
                returned_codeword: c.returned_codeword,
                returned_fraction: c.returned_fraction(),
                ml_agree: c.ml_agree,
                not_ml: c.not_ml,
                correct: c.correct,
                certified: c.certified,
                certified_not_ml: c.certified_not_ml,
                ties: c.ties,
            }])?;
            write_file(&recipe.output.join("census.csv"), &table)?;
            io::stdout().write_all(&table).map_err(|e| Failure::io(e.into()))
        }
        CampaignKind::Conjecture => {
            let mut recipe: ProbeRecipe = read_recipe(&a.recipe)?;
            if let Some(o) = &a.output {
                recipe.output = o.clone();
            }
            if let Some(s) = a.seed {
                recipe.probe.seed = s;
            }
            if let Some(t) = a.trials {
                recipe.probe.trials = t;
            }
            let rows = run_conjecture_probe(&recipe.probe)?;
            let table = to_csv(&rows)?;
            write_file(&recipe.output.join("conjecture.csv"), &table)?;
            io::stdout().write_all(&table).map_err(|e| Failure::io(e.into()))
        }
    }
}

fn cmd_gencode(a: &GencodeArgs) -> Result<(), Failure> {
    let graph = build_regular_graph(a.n, a.dv, a.dc, a.girth, a.seed).map_err(|e| Failure::algorithm(e.into()))?;
    let text = write_alist(&graph);
    match &a.out {
        Some(path) => write_file(path, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::io(e.into())),
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let threads = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("building the worker pool")
        .map_err(Failure::input)?;
    match &cli.command {
        Command::Decode(a) => cmd_decode(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Gencode(a) => cmd_gencode(a),
        Command::Certify(a) => cmd_certify(a),
    }
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&args) {
        let merged = fs::read_to_string(&path)
            .with_context(|| format!("reading config {}", path.display()))
            .and_then(|text| config::merge(args.clone(), &text));
        match merged {
            Ok(m) => args = m,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(u8::try_from(code).unwrap_or(2));
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
