//! Argument parsing and command implementations for the `markovscope` binary.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 I/O error,
//! 1 anything else (numerical failure).

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use markovscope::checkers::{build_markov_state, check_petz_t, check_ruskai, classify, MarkovBlockSpec};
use markovscope::config::{MeasureKind, OutputFormat, RunConfig};
use markovscope::io::{create_file, read_state, write_csv, write_jsonl, StateFile, FORMAT_VERSION};
use markovscope::lab::{
    pinsker_identity_check, sample_state, scan, search_min_deficit, ScanSummary, SearchOutcome, TrailPoint,
};
use markovscope::markov::{build_m_bundle, theorem2_conditions};
use markovscope::parallel::{threads_from_env, with_threads};
use markovscope::random::{random_block_layout, random_markov_spec, stream_rng};
use markovscope::report::{analyze, ANALYSIS_CSV_COLUMNS};
use markovscope::{Dims, Error, TripartiteState};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => EXIT_PARSE,
            Error::Shape(_) | Error::Capacity { .. } | Error::Domain(_) | Error::InvalidState(_) | Error::Config(_) => {
                EXIT_VALIDATION
            }
            Error::Io(_) => EXIT_IO,
            Error::Numeric(_) => EXIT_OTHER,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "markovscope", version, about = "Conditional mutual information and quantum Markov chain diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full report for one state file.
    Analyze {
        state: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a generated state file.
    Generate {
        #[arg(long, value_enum)]
        kind: GenerateKind,
        /// Number of B blocks for kind=markov (random when omitted).
        #[arg(long)]
        blocks: Option<usize>,
        /// Build kind=markov from a block-spec JSON file instead of at random.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the conjecture deficits over a random sample.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Local search for the smallest conjecture deficit.
    Search {
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one checker on a state file.
    Check {
        #[arg(value_enum)]
        checker: CheckerName,
        state: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenerateKind {
    Markov,
    Classical,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckerName {
    Ruskai,
    PetzT,
    Recovery,
    Commutator,
    Pinsker,
    Classify,
}

/// Flags shared by every subcommand; each overrides the matching config key.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML (or .json) file with run configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Subsystem dimensions, e.g. 2,2,2.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// hs_induced, classical_dirichlet or markov_perturbed.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub env_dim: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    /// Comma-separated t values for the imaginary-power checker.
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub tol_support: Option<f64>,
    #[arg(long)]
    pub tol_check: Option<f64>,
    #[arg(long)]
    pub eta_comm: Option<f64>,
    #[arg(long)]
    pub eta_state: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json, csv or jsonl.
    #[arg(long)]
    pub format: Option<String>,
}

impl CommonArgs {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.dims {
            cfg.dims = d.parse()?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.count {
            cfg.count = v;
        }
        if let Some(m) = &self.measure {
            cfg.measure = m.parse::<MeasureKind>()?;
        }
        if let Some(v) = self.env_dim {
            cfg.env_dim = Some(v);
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = v;
        }
        if let Some(g) = &self.t_grid {
            cfg.t_grid = g
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad t value {t:?}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.tol_support {
            cfg.tol_support = v;
        }
        if let Some(v) = self.tol_check {
            cfg.tol_check = v;
        }
        if let Some(v) = self.eta_comm {
            cfg.eta_comm = v;
        }
        if let Some(v) = self.eta_state {
            cfg.eta_state = v;
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse::<OutputFormat>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Sibling of `path` with `suffix` replacing its extension.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_state(path: &Path) -> CliResult<TripartiteState> {
    read_state(path).map_err(|e| match e {
        Error::Io(err) => io_error(path, err),
        other => other.into(),
    })
}

pub fn cmd_analyze(state_path: &Path, cfg: &RunConfig) -> CliResult<String> {
    let s = load_state(state_path)?;
    let report = analyze(&s, cfg)?;
    let text = match cfg.format {
        OutputFormat::Csv => format!("{}\n{}\n", ANALYSIS_CSV_COLUMNS.join(","), report.csv_row()),
        _ => to_json(&report),
    };
    if let Some(out) = &cfg.out {
        write_text(out, &text)?;
    }
    Ok(text)
}

pub fn generate_state(
    kind: GenerateKind,
    blocks: Option<usize>,
    spec: Option<&Path>,
    cfg: &RunConfig,
) -> CliResult<TripartiteState> {
    let dims = cfg.dims;
    let state = match kind {
        GenerateKind::Markov => {
            let spec = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
                    serde_json::from_str::<MarkovBlockSpec>(&text).map_err(Error::from)?
                }
                None => {
                    if blocks.is_some_and(|k| k == 0 || k > dims.b) {
                        return Err(Error::Config(format!(
                            "--blocks must lie in 1..={} for dB = {}",
                            dims.b, dims.b
                        ))
                        .into());
                    }
                    let mut rng = stream_rng(cfg.seed, 0);
                    let layout = random_block_layout(dims.b, blocks, &mut rng);
                    random_markov_spec(dims.a, dims.c, &layout, &mut rng)?
                }
            };
            build_markov_state(&spec)?
        }
        GenerateKind::Classical | GenerateKind::Random => {
            let mut c = cfg.clone();
            c.count = 1;
            c.measure = match kind {
                GenerateKind::Classical => MeasureKind::ClassicalDirichlet,
                _ => MeasureKind::HsInduced,
            };
            sample_state(&c.sample_config(), 0)?
        }
    };
    Ok(state)
}

pub fn cmd_generate(kind: GenerateKind, blocks: Option<usize>, spec: Option<&Path>, cfg: &RunConfig) -> CliResult<String> {
    let state = generate_state(kind, blocks, spec, cfg)?;
    let text = StateFile::from_state(&state).to_json();
    match &cfg.out {
        Some(out) => {
            write_text(out, &text)?;
            Ok(format!("wrote {} ({} state, dims {})\n", out.display(), kind_name(kind), state.dims()))
        }
        None => Ok(text),
    }
}

fn kind_name(kind: GenerateKind) -> &'static str {
    match kind {
        GenerateKind::Markov => "markov",
        GenerateKind::Classical => "classical",
        GenerateKind::Random => "random",
    }
}

#[derive(Serialize)]
struct RunHeader<'a> {
    format_version: u32,
    kind: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
pub struct ScanReport<'a> {
    pub format_version: u32,
    pub summary: &'a ScanSummary,
    pub outputs: Vec<PathBuf>,
    pub config: &'a RunConfig,
}

pub fn cmd_scan(cfg: &RunConfig) -> CliResult<String> {
    let outcome = scan(&cfg.sample_config(), &cfg.eval_settings())?;
    let mut outputs = Vec::new();
    if let Some(out) = &cfg.out {
        let header = RunHeader {
            format_version: FORMAT_VERSION,
            kind: "scan",
            config: cfg,
        };
        let (jsonl_path, csv_path) = match cfg.format {
            OutputFormat::Csv => (sibling(out, ".jsonl"), out.clone()),
            _ => (out.clone(), sibling(out, ".csv")),
        };
        let f = create_file(&jsonl_path).map_err(|e| io_error(&jsonl_path, e))?;
        write_jsonl(f, &header, &outcome.records).map_err(|e| io_error(&jsonl_path, e))?;
        let f = create_file(&csv_path).map_err(|e| io_error(&csv_path, e))?;
        write_csv(f, &outcome.records).map_err(|e| io_error(&csv_path, e))?;
        outputs.push(jsonl_path);
        outputs.push(csv_path);
        if !outcome.candidates.is_empty() {
            let p = sibling(out, ".candidates.json");
            write_text(&p, &to_json(&outcome.candidates))?;
            outputs.push(p);
        }
    }
    Ok(to_json(&ScanReport {
        format_version: FORMAT_VERSION,
        summary: &outcome.summary,
        outputs,
        config: cfg,
    }))
}

#[derive(Serialize)]
pub struct SearchReport<'a> {
    pub format_version: u32,
    pub best: &'a markovscope::lab::DeficitRecord,
    pub evaluations: usize,
    pub violation_candidate: bool,
    pub best_state: StateFile,
    pub config: &'a RunConfig,
}

fn trail_csv(trail: &[TrailPoint]) -> String {
    let mut s = String::from("restart,evaluation,deficit_conj,step\n");
    for p in trail {
        s.push_str(&format!("{},{},{},{}\n", p.restart, p.evaluation, p.deficit_conj, p.step));
    }
    s
}

pub fn run_search(cfg: &RunConfig) -> CliResult<SearchOutcome> {
    Ok(search_min_deficit(&cfg.search_config(), &cfg.eval_settings())?)
}

pub fn cmd_search(cfg: &RunConfig) -> CliResult<String> {
    let outcome = run_search(cfg)?;
    let report = to_json(&SearchReport {
        format_version: FORMAT_VERSION,
        best: &outcome.best,
        evaluations: outcome.evaluations,
        violation_candidate: outcome.candidate.is_some(),
        best_state: StateFile::from_state(&outcome.best_state),
        config: cfg,
    });
    if let Some(out) = &cfg.out {
        write_text(out, &report)?;
        write_text(&sibling(out, ".trail.csv"), &trail_csv(&outcome.trail))?;
        if let Some(c) = &outcome.candidate {
            write_text(&sibling(out, ".candidate.json"), &to_json(c))?;
        }
    }
    Ok(report)
}

pub fn cmd_check(checker: CheckerName, state_path: &Path, cfg: &RunConfig) -> CliResult<String> {
    let s = load_state(state_path)?;
    let policy = cfg.policy();
    let value = match checker {
        CheckerName::Ruskai => serde_json::to_value(check_ruskai(&s, policy)?),
        CheckerName::PetzT => serde_json::to_value(serde_json::json!({
            "residual": check_petz_t(&s, &cfg.t_grid, policy)?,
            "t_grid": cfg.t_grid,
        })),
        CheckerName::Recovery => {
            let bundle = build_m_bundle(&s, policy)?;
            serde_json::to_value(theorem2_conditions(&s, &bundle, policy)?)
        }
        CheckerName::Commutator => {
            let bundle = build_m_bundle(&s, policy)?;
            serde_json::to_value(serde_json::json!({ "comm_norm": bundle.commutator_trace_norm }))
        }
        CheckerName::Pinsker => serde_json::to_value(pinsker_identity_check(&s, policy)?),
        CheckerName::Classify => {
            let bundle = build_m_bundle(&s, policy)?;
            serde_json::to_value(classify(&s, &bundle, cfg.eta_comm, cfg.eta_state))
        }
    }
    .expect("checker results serialize");
    let text = to_json(&value);
    if let Some(out) = &cfg.out {
        write_text(out, &text)?;
    }
    Ok(text)
}

/// Executes a parsed command and returns what should go to stdout.
pub fn run(cli: Cli) -> CliResult<String> {
    let threads = threads_from_env()?;
    with_threads(threads, move || match cli.command {
        Command::Analyze { state, common } => cmd_analyze(&state, &common.resolve()?),
        Command::Generate {
            kind,
            blocks,
            spec,
            common,
        } => cmd_generate(kind, blocks, spec.as_deref(), &common.resolve()?),
        Command::Scan { common } => cmd_scan(&common.resolve()?),
        Command::Search {
            budget,
            restarts,
            common,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(b) = budget {
                cfg.search.budget = b;
            }
            if let Some(r) = restarts {
                cfg.search.restarts = r;
            }
            cfg.validate()?;
            cmd_search(&cfg)
        }
        Command::Check { checker, state, common } => cmd_check(checker, &state, &common.resolve()?),
    })?
}

/// Parses `dims` for callers that build configs by hand.
pub fn dims(s: &str) -> CliResult<Dims> {
    Ok(s.parse()?)
}
