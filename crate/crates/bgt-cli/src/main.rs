//! `bgt` — command-line front door for the behavioral game theory harness:
//! run experiment grids, emit reports, replay recorded runs, validate the
//! prompt catalog, and list expanded grids.
//!
//! All subcommands are non-interactive. Credentials come only from the
//! `BGT_API_KEY` environment variable; the live endpoint from config or
//! `BGT_ENDPOINT`.

use clap::{Args, Parser, Subcommand};
use llm_gateway::{Gateway, LiveGateway, MockGateway, ReplayGateway};
use match_runner::{
    read_manifest, read_transcript, run_experiment, transcript_to_jsonl, ExperimentConfig,
    ExperimentOptions, MatchConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const API_KEY_ENV: &str = "BGT_API_KEY";
const ENDPOINT_ENV: &str = "BGT_ENDPOINT";
const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Parser)]
#[command(
    name = "bgt",
    about = "Behavioral game theory harness for chat-model agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Config overrides, repeatable: section.field=value (lists comma-split).
    #[arg(long = "override", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid and write transcripts plus a manifest.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (defaults to experiment.out_dir from config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Backend: live | mock:<policy> | replay:<call_log path>.
        #[arg(long, default_value = "live")]
        backend: String,
        /// Worker pool size; defaults to the logical core count.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Zero wall-clock fields for byte-reproducible runs.
        #[arg(long)]
        deterministic: bool,
    },
    /// Aggregate a finished run and emit report.md plus the CSV files.
    Report {
        /// Run directory (or its manifest.jsonl).
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Re-execute a recorded run against the replay backend and diff the
    /// transcripts.
    Replay {
        /// Run directory (or its manifest.jsonl).
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render the full template grid and compare to the golden files.
    ValidatePrompts {
        /// Golden directory (defaults to the committed catalog goldens).
        #[arg(long)]
        goldens: Option<PathBuf>,
    },
    /// Print the expanded configuration matrix, one line per match.
    ListGrid {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn parse_override(raw: &str) -> Result<(String, String), String> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .ok_or_else(|| format!("override '{raw}' is not key=value"))
}

struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            code: 1,
        }
    }

    fn usage(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            code: 2,
        }
    }
}

impl From<match_runner::RunnerError> for CliError {
    fn from(err: match_runner::RunnerError) -> Self {
        match &err {
            match_runner::RunnerError::Config(_) => CliError::usage("ConfigError", err.to_string()),
            match_runner::RunnerError::UnknownOverride(_) => {
                CliError::usage("UnknownOverride", err.to_string())
            }
            _ => CliError::new("RunError", err.to_string()),
        }
    }
}

impl From<metrics_report::MetricsError> for CliError {
    fn from(err: metrics_report::MetricsError) -> Self {
        CliError::new("ReportError", err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-parsable line on stderr.
            eprintln!("error: {}: {}", err.kind, err.message.replace('\n', " | "));
            ExitCode::from(err.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            backend,
            jobs,
            deterministic,
        } => run(config, out, &backend, jobs, deterministic),
        Command::Report { manifest } => report(&manifest),
        Command::Replay { manifest } => replay(&manifest),
        Command::ValidatePrompts { goldens } => validate_prompts(goldens),
        Command::ListGrid { config } => list_grid(config),
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::usage("ConfigError", format!("{}: {e}", args.config.display())))?;
    Ok(ExperimentConfig::from_toml_with_overrides(
        &text,
        &args.overrides,
    )?)
}

fn build_gateway(spec: &str, config: &ExperimentConfig) -> Result<Box<dyn Gateway>, CliError> {
    if spec == "live" {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| {
            CliError::usage(
                "ConfigError",
                format!("live backend needs the {API_KEY_ENV} environment variable"),
            )
        })?;
        let endpoint = std::env::var(ENDPOINT_ENV)
            .ok()
            .or_else(|| config.gateway.endpoint.clone())
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
        return Ok(Box::new(LiveGateway::new(endpoint, api_key)));
    }
    if let Some(policy) = spec.strip_prefix("mock:") {
        return Ok(Box::new(
            MockGateway::from_spec(policy).map_err(|e| CliError::usage("ConfigError", e))?,
        ));
    }
    if let Some(path) = spec.strip_prefix("replay:") {
        return Ok(Box::new(ReplayGateway::from_log(Path::new(path)).map_err(
            |e| CliError::usage("ConfigError", format!("replay log {path}: {e}")),
        )?));
    }
    Err(CliError::usage(
        "ConfigError",
        format!("unknown backend '{spec}' (expected live, mock:<policy>, or replay:<path>)"),
    ))
}

fn run(
    config_args: ConfigArgs,
    out: Option<PathBuf>,
    backend: &str,
    jobs: usize,
    deterministic: bool,
) -> Result<(), CliError> {
    let config = load_config(&config_args)?;
    let out_dir = out
        .or_else(|| config.experiment.out_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            CliError::usage(
                "ConfigError",
                "no output directory (--out or experiment.out_dir)",
            )
        })?;
    let gateway = build_gateway(backend, &config)?;
    let options = ExperimentOptions {
        jobs,
        deterministic,
        argv: std::env::args().collect(),
    };
    let manifest = run_experiment(&config, gateway.as_ref(), &out_dir, &options)?;
    println!(
        "ran {} matches: {} completed, {} aborted; manifest {}",
        manifest.entries.len(),
        manifest.completed(),
        manifest.aborted(),
        out_dir.join("manifest.jsonl").display()
    );
    Ok(())
}

fn manifest_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf()
    }
}

fn report(manifest_path: &Path) -> Result<(), CliError> {
    let manifest = read_manifest(&manifest_dir(manifest_path))?;
    let files = metrics_report::emit_report(&manifest)?;
    println!(
        "report over {} matches ({} aborted): {}, {}, {}",
        manifest.entries.len(),
        manifest.aborted(),
        files.report_md.display(),
        files.metrics_csv.display(),
        files.acceptance_csv.display()
    );
    Ok(())
}

fn replay(manifest_path: &Path) -> Result<(), CliError> {
    let dir = manifest_dir(manifest_path);
    let manifest = read_manifest(&dir)?;
    let gateway = ReplayGateway::from_log(&dir.join("call_log.jsonl"))
        .map_err(|e| CliError::new("ReplayDivergence", format!("call log: {e}")))?;
    let mut divergences = 0usize;
    for entry in &manifest.entries {
        let original_path = manifest.transcript_path(entry);
        let original = read_transcript(&original_path)?;
        let config = MatchConfig {
            params: original.config.clone(),
            repetition: entry.repetition,
        };
        if config.match_key() != entry.match_key {
            divergences += 1;
            eprintln!(
                "replay: {} no longer hashes to its manifest key",
                entry.match_key
            );
            continue;
        }
        let mut session = gateway.session(&entry.match_key);
        let replayed = match match_runner::run_match(&config, session.as_mut()) {
            Ok(t) => t,
            Err(e) => {
                divergences += 1;
                eprintln!("replay: {} failed: {e}", entry.match_key);
                continue;
            }
        };
        let original_bytes = std::fs::read(&original_path)
            .map_err(|e| CliError::new("RunError", format!("{}: {e}", original_path.display())))?;
        if transcript_to_jsonl(&replayed).as_bytes() != original_bytes.as_slice() {
            divergences += 1;
            eprintln!("replay: {} diverged", entry.match_key);
        }
    }
    if divergences > 0 {
        return Err(CliError::new(
            "ReplayDivergence",
            format!(
                "{divergences} of {} matches diverged",
                manifest.entries.len()
            ),
        ));
    }
    println!(
        "replayed {} matches: zero divergence",
        manifest.entries.len()
    );
    Ok(())
}

fn validate_prompts(goldens: Option<PathBuf>) -> Result<(), CliError> {
    let dir = goldens.unwrap_or_else(prompt_kit::goldens::default_golden_dir);
    let mismatches = prompt_kit::goldens::check_goldens(&dir)
        .map_err(|e| CliError::new("GoldenMismatch", e.to_string()))?;
    if !mismatches.is_empty() {
        for m in &mismatches {
            eprintln!("golden mismatch: {}: {}", m.name, m.reason);
        }
        return Err(CliError::new(
            "GoldenMismatch",
            format!(
                "{} template(s) diverge from the golden files",
                mismatches.len()
            ),
        ));
    }
    let count = prompt_kit::goldens::golden_grid()
        .map_err(|e| CliError::new("GoldenMismatch", e.to_string()))?
        .len();
    println!(
        "validated {count} rendered templates against {}",
        dir.display()
    );
    Ok(())
}

fn list_grid(config_args: ConfigArgs) -> Result<(), CliError> {
    let config = load_config(&config_args)?;
    // Exactly one stdout line per match so `list-grid | wc -l` equals the
    // manifest length.
    for m in config.expand_grid()? {
        let p = &m.params;
        let opponent = match &p.opponent {
            match_runner::OpponentSpec::Strategy { strategy } => strategy.to_string(),
            match_runner::OpponentSpec::ScriptedResponder { accept_threshold } => {
                format!("responder>={accept_threshold}")
            }
            match_runner::OpponentSpec::Offer { keep, give } => format!("offer:{keep},{give}"),
            match_runner::OpponentSpec::None => "-".to_string(),
        };
        println!(
            "{} game={} opponent={} emotion={} strategy={} relation={} model={} rep={}",
            m.match_key(),
            p.game,
            opponent,
            p.emotion,
            p.emotion_strategy.key(),
            p.relation.key(),
            p.model_id,
            m.repetition
        );
    }
    Ok(())
}
