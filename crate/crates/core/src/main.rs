use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fimkit::config::{check_budget, GlobalConfig};
use fimkit::context::{
    self, CursorQuery, RepoSnapshot, SourceFile, StrategyKind, UNKNOWN_LANGUAGE,
};
use fimkit::dataset::{self, derive_seed, DatasetEntry};
use fimkit::evalrun::{
    self, BackendKind, CompletionBackend, EvalSettings, HttpBackend, ReplayStore,
};
use fimkit::fim::{self, FimExample, SentinelSet, SplitStrategy};
use fimkit::lexing::ProfileRegistry;
use fimkit::metrics::{self, Binning, KkDenominator};
use fimkit::{exec, Execution};

#[cfg(feature = "parallel")]
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (parallel)");
#[cfg(not(feature = "parallel"))]
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (sequential)");

/// Fill-in-the-middle datasets, repository context and completion scoring.
#[derive(Parser)]
#[command(name = "fimkit", version = VERSION)]
struct Cli {
    /// TOML config; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split one file into FIM examples (JSONL).
    Split(SplitArgs),
    /// Collect repository context for a caret position.
    PackContext(PackArgs),
    /// Build a benchmark dataset from repositories.
    BuildDataset(BuildArgs),
    /// Complete and score every example of a dataset.
    Evaluate(EvalArgs),
    /// Aggregate evaluation records per language.
    Report(ReportArgs),
    /// Completed-code ratio and acceptance rate from an event log.
    Telemetry(TelemetryArgs),
    /// Cohen's kappa between binned metric scores and human labels.
    Kappa(KappaArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Random,
    ScopeAware,
}

#[derive(Args)]
struct SplitArgs {
    file: PathBuf,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    strategy: Option<SplitArg>,
    /// Number of draws; duplicates are dropped.
    #[arg(long, default_value_t = 1)]
    examples: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PackArgs {
    #[arg(long)]
    repo: PathBuf,
    /// Query file, relative to the repository root.
    #[arg(long)]
    file: String,
    /// Caret as a character offset.
    #[arg(long, conflicts_with = "line")]
    cursor: Option<usize>,
    /// Caret at the start of this 1-based line.
    #[arg(long)]
    line: Option<usize>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_files: Option<usize>,
    #[arg(long)]
    query_window: Option<usize>,
    #[arg(long)]
    chunk_window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Recently edited files, comma separated.
    #[arg(long, value_delimiter = ',')]
    recent: Vec<String>,
    /// Also render the prompt for an empty middle at the caret.
    #[arg(long)]
    prompt: bool,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    sentinels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Repository directory; repeat for several. Replaces the configured list.
    #[arg(long = "repo")]
    repos: Vec<PathBuf>,
    /// Reference repository for leakage checks; repeatable.
    #[arg(long = "reference")]
    references: Vec<PathBuf>,
    #[arg(long)]
    quota: Option<usize>,
    #[arg(long)]
    examples_per_file: Option<usize>,
    #[arg(long)]
    dedup_threshold: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    languages: Vec<String>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
}

#[derive(Args)]
struct EvalArgs {
    /// `dataset.jsonl`, or a directory holding one.
    #[arg(long)]
    dataset: PathBuf,
    /// http, replay, echo, truncate:N or empty.
    #[arg(long, value_parser = parse_backend)]
    backend: BackendKind,
    #[arg(long)]
    endpoint: Option<String>,
    /// JSONL of `{id, completion}` for the replay backend.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    max_tokens: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Stop sequence; repeatable. Replaces the configured list.
    #[arg(long = "stop")]
    stop: Vec<String>,
    #[arg(long)]
    scope_truncate: bool,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    sentinels: Option<PathBuf>,
    #[arg(long)]
    kk_tau: Option<f64>,
    #[arg(long, value_parser = parse_denominator)]
    kk_denominator: Option<KkDenominator>,
    #[arg(long)]
    no_normalize_em: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct TelemetryArgs {
    /// JSONL of telemetry events.
    #[arg(long)]
    events: PathBuf,
}

#[derive(Args)]
struct KappaArgs {
    /// JSONL of `{score, label}` pairs.
    #[arg(long)]
    input: PathBuf,
    /// Score thresholds separating ordinal bins, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    bins: Vec<f64>,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: fimkit::Error| e.to_string())
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: fimkit::Error| e.to_string())
}

fn parse_denominator(s: &str) -> Result<KkDenominator, String> {
    s.parse().map_err(|e: fimkit::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_config(path: Option<&Path>) -> CliResult<GlobalConfig> {
    match path {
        None => Ok(GlobalConfig::default()),
        Some(p) => GlobalConfig::load(p).map_err(|e| usage(format!("config {}: {e}", p.display()))),
    }
}

fn registry(config: &GlobalConfig) -> CliResult<ProfileRegistry> {
    config
        .registry()
        .map_err(|e| usage(format!("language profiles: {e}")))
}

fn require_seed(flag: Option<u64>, config: &GlobalConfig) -> CliResult<u64> {
    flag.or(config.seed)
        .ok_or_else(|| usage("--seed is required (or set `seed` in the config)"))
}

fn sentinels(flag: Option<&Path>, config: &GlobalConfig) -> CliResult<SentinelSet> {
    match flag {
        Some(p) => Ok(SentinelSet::load(p).with_context(|| format!("sentinels {}", p.display()))?),
        None => Ok(config.sentinels.clone()),
    }
}

fn budget(flag: Option<usize>, config: &GlobalConfig) -> CliResult<usize> {
    let b = flag.unwrap_or(config.budget);
    check_budget(b).map_err(|e| usage(e.to_string()))?;
    Ok(b)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing standard output")?,
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Repository-relative path for a file named on the command line.
fn example_path(file: &Path) -> String {
    let given = file.to_string_lossy().replace('\\', "/");
    context::normalize_path(&given).unwrap_or_else(|_| {
        file.file_name()
            .map_or_else(|| given.clone(), |n| n.to_string_lossy().into_owned())
    })
}

fn cmd_split(args: SplitArgs, config: &GlobalConfig) -> CliResult {
    let seed = require_seed(args.seed, config)?;
    if args.examples == 0 {
        return Err(usage("--examples must be at least 1"));
    }
    let registry = registry(config)?;
    let text = std::fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let path = example_path(&args.file);
    let strategy = match args.strategy {
        Some(SplitArg::Random) => SplitStrategy::Random,
        Some(SplitArg::ScopeAware) => SplitStrategy::ScopeAware,
        None => config.split.strategy,
    };
    let profile = match &args.language {
        Some(id) => Some(registry.get(id)?),
        None => registry.for_path(&path),
    };
    let language = profile.map_or(UNKNOWN_LANGUAGE.to_string(), |p| p.id.clone());
    let file = SourceFile::new(path.clone(), text, language);

    let mut seen = std::collections::BTreeSet::new();
    let mut out = String::new();
    for i in 0..args.examples {
        let s = if args.examples == 1 {
            seed
        } else {
            derive_seed(seed, &[path.as_bytes(), &(i as u64).to_le_bytes()])
        };
        let ex = match strategy {
            SplitStrategy::Random => fim::split_random(&file, s)?,
            SplitStrategy::ScopeAware => {
                let profile =
                    profile.ok_or_else(|| fimkit::Error::UnknownLanguage(path.clone()))?;
                fim::split_scope_aware(&file, profile, &config.split.weights, s)?
            }
        };
        if seen.insert(ex.middle_span()) {
            out.push_str(&serde_json::to_string(&ex)?);
            out.push('\n');
        }
    }
    emit(args.out.as_deref(), &out)
}

fn char_offset_of_line(text: &str, line: usize) -> CliResult<usize> {
    if line == 0 {
        return Err(usage("--line is 1-based"));
    }
    let mut chars = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return Ok(chars);
        }
        chars += l.chars().count();
    }
    if line == text.split_inclusive('\n').count() + 1 {
        return Ok(chars);
    }
    Err(Failure::Data(anyhow!(
        "line {line} is past the end of the file"
    )))
}

#[derive(Serialize)]
struct PackOutput<'a> {
    bundle: &'a context::ContextBundle,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<fim::RenderedPrompt>,
}

fn cmd_pack(args: PackArgs, config: &GlobalConfig, exec: Execution) -> CliResult {
    let mut ctx = config.context;
    if let Some(s) = args.strategy {
        ctx.strategy = s;
    }
    ctx.k = args.k.unwrap_or(ctx.k);
    ctx.max_files = args.max_files.unwrap_or(ctx.max_files);
    ctx.query_window = args.query_window.unwrap_or(ctx.query_window);
    ctx.chunk_window = args.chunk_window.unwrap_or(ctx.chunk_window);
    ctx.stride = args.stride.unwrap_or(ctx.stride);
    ctx.validate().map_err(|e| usage(e.to_string()))?;
    let budget = budget(args.budget, config)?;
    let sentinels = sentinels(args.sentinels.as_deref(), config)?;

    let registry = registry(config)?;
    let repo = RepoSnapshot::load(&args.repo, &registry)?;
    let file = repo.get(&context::normalize_path(&args.file)?)?;
    let cursor = match (args.cursor, args.line) {
        (Some(c), _) => c,
        (None, Some(l)) => char_offset_of_line(&file.text, l)?,
        (None, None) => return Err(usage("one of --cursor or --line is required")),
    };
    let profile = registry.get(&file.language)?;
    let query = CursorQuery::new(&file.path, &file.text, cursor, ctx.query_window)?;
    let bundle = context::collect(&repo, &query, &ctx, &args.recent, profile, exec)?;

    let prompt = if args.prompt {
        let split = file
            .text
            .char_indices()
            .nth(cursor)
            .map_or(file.text.len(), |(i, _)| i);
        let example = FimExample {
            path: file.path.clone(),
            prefix: file.text[..split].to_string(),
            middle: String::new(),
            suffix: file.text[split..].to_string(),
            boundary_start: fim::classify_offset(&file.text, split),
            boundary_end: fim::classify_offset(&file.text, split),
            split_strategy: SplitStrategy::ScopeAware,
            language: file.language.clone(),
            metadata: file.metadata.clone(),
        };
        Some(fim::render_prompt(&example, &bundle, &sentinels, budget)?)
    } else {
        None
    };
    emit(
        args.out.as_deref(),
        &json_line(&PackOutput {
            bundle: &bundle,
            prompt,
        })?,
    )
}

fn cmd_build(args: BuildArgs, config: &GlobalConfig, exec: Execution) -> CliResult {
    let seed = require_seed(args.seed, config)?;
    let registry = registry(config)?;
    let mut ds = config.dataset.clone();
    if !args.repos.is_empty() {
        ds.repos = args.repos;
    }
    if !args.references.is_empty() {
        ds.reference_repos = args.references;
    }
    if !args.languages.is_empty() {
        ds.languages = args.languages;
    }
    if let Some(q) = args.quota {
        ds.quota = Some(q);
    }
    ds.examples_per_file = args.examples_per_file.unwrap_or(ds.examples_per_file);
    ds.dedup_threshold = args.dedup_threshold.unwrap_or(ds.dedup_threshold);
    if let Some(s) = args.strategy {
        ds.context.strategy = s;
    }
    if ds.repos.is_empty() {
        return Err(usage(
            "no repositories: pass --repo or set dataset.repos in the config",
        ));
    }
    match ds.validate(&registry) {
        Err(e @ fimkit::Error::UnknownLanguage(_)) => return Err(Failure::Data(e.into())),
        Err(e) => return Err(usage(e.to_string())),
        Ok(()) => {}
    }
    let built = dataset::build(&ds, &registry, seed, exec)?;
    built.write(&args.out)?;
    eprintln!(
        "wrote {} examples to {} ({})",
        built.entries.len(),
        args.out.display(),
        built.manifest.counts
    );
    Ok(())
}

fn load_entries(path: &Path) -> CliResult<Vec<DatasetEntry>> {
    let file = if path.is_dir() {
        path.join(dataset::DATASET_FILE)
    } else {
        path.to_path_buf()
    };
    Ok(dataset::read_entries(&file)?)
}

#[derive(Serialize)]
struct EvalManifest<'a> {
    tool_version: &'a str,
    dataset: String,
    backend: String,
    examples: usize,
    failed: usize,
    budget: usize,
    sentinels: &'a SentinelSet,
    metrics: &'a metrics::MetricConfig,
    params: &'a evalrun::CompletionParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    http: Option<&'a evalrun::HttpConfig>,
}

fn cmd_evaluate(args: EvalArgs, config: &GlobalConfig, exec: Execution) -> CliResult {
    let budget = budget(args.budget, config)?;
    let sentinels = sentinels(args.sentinels.as_deref(), config)?;
    let mut metric_cfg = config.metrics;
    metric_cfg.kk_tau = args.kk_tau.unwrap_or(metric_cfg.kk_tau);
    metric_cfg.kk_denominator = args.kk_denominator.unwrap_or(metric_cfg.kk_denominator);
    if args.no_normalize_em {
        metric_cfg.normalize_em = false;
    }
    metric_cfg.validate().map_err(|e| usage(e.to_string()))?;
    let mut params = config.eval.params.clone();
    params.max_tokens = args.max_tokens.unwrap_or(params.max_tokens);
    params.temperature = args.temperature.unwrap_or(params.temperature);
    if !args.stop.is_empty() {
        params.stop = args.stop;
    }
    params.scope_truncate |= args.scope_truncate;
    let mut http = config.eval.http.clone();
    if let Some(e) = args.endpoint {
        http.endpoint = e;
    }
    http.timeout_ms = args.timeout_ms.unwrap_or(http.timeout_ms);
    http.retries = args.retries.unwrap_or(http.retries);

    let backend = match args.backend {
        BackendKind::Http => CompletionBackend::Http(
            HttpBackend::new(http.clone()).map_err(|e| usage(e.to_string()))?,
        ),
        BackendKind::Replay => {
            let path = args
                .replay
                .ok_or_else(|| usage("--backend replay needs --replay <file>"))?;
            CompletionBackend::Replay(ReplayStore::load(&path)?)
        }
        BackendKind::Echo => CompletionBackend::OracleEcho,
        BackendKind::Truncate(n) => CompletionBackend::OracleTruncate(n),
        BackendKind::Empty => CompletionBackend::OracleEmpty,
    };
    let registry = registry(config)?;
    let entries = load_entries(&args.dataset)?;
    let settings = EvalSettings {
        sentinels: &sentinels,
        budget,
        params: &params,
        metrics: &metric_cfg,
        registry: &registry,
        exec,
    };
    let records = evalrun::run_eval(&entries, &backend, &settings)?;
    evalrun::write_records(&args.out, &records)?;
    let failed = records.iter().filter(|r| r.failed).count();
    let manifest = EvalManifest {
        tool_version: VERSION,
        dataset: args.dataset.display().to_string(),
        backend: backend.name(),
        examples: records.len(),
        failed,
        budget,
        sentinels: &sentinels,
        metrics: &metric_cfg,
        params: &params,
        http: matches!(backend, CompletionBackend::Http(_)).then_some(&http),
    };
    let manifest_path = args.out.with_extension("manifest.json");
    emit(Some(&manifest_path), &json_line(&manifest)?)?;
    eprintln!(
        "evaluated {} examples ({failed} failed) -> {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult {
    let records = evalrun::read_records(&args.records)?;
    let report = evalrun::report(&records)?;
    let text = match args.format {
        Format::Table => report.to_table(),
        Format::Json => json_line(&report)?,
    };
    emit(None, &text)
}

fn cmd_telemetry(args: TelemetryArgs) -> CliResult {
    let file = std::fs::File::open(&args.events)
        .with_context(|| format!("reading {}", args.events.display()))?;
    let events = metrics::read_events(std::io::BufReader::new(file))?;
    emit(None, &json_line(&metrics::summarize(&events)?)?)
}

#[derive(serde::Deserialize)]
struct KappaPair {
    score: f64,
    label: u32,
}

fn cmd_kappa(args: KappaArgs) -> CliResult {
    let src = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in src
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let pair: KappaPair = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", args.input.display(), n + 1))?;
        scores.push(pair.score);
        labels.push(pair.label);
    }
    let kappa = metrics::kappa_agreement(&scores, &labels, &Binning::new(args.bins))?;
    emit(
        None,
        &json_line(&serde_json::json!({ "items": scores.len(), "kappa": kappa }))?,
    )
}

fn run(cli: Cli) -> CliResult {
    let config = load_config(cli.config.as_deref())?;
    let exec = match cli.jobs {
        Some(0) => return Err(usage("--jobs must be at least 1")),
        Some(1) => Execution::Sequential,
        Some(n) => {
            if Execution::is_parallel_available() {
                exec::init_pool(n);
            } else {
                eprintln!("note: built without the parallel feature; running sequentially");
            }
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    match cli.command {
        Command::Split(a) => cmd_split(a, &config),
        Command::PackContext(a) => cmd_pack(a, &config, exec),
        Command::BuildDataset(a) => cmd_build(a, &config, exec),
        Command::Evaluate(a) => cmd_evaluate(a, &config, exec),
        Command::Report(a) => cmd_report(a),
        Command::Telemetry(a) => cmd_telemetry(a),
        Command::Kappa(a) => cmd_kappa(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
