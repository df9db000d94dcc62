use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psirec::data::{load_csv, preprocess, read_split, stepwise_split, write_split, Schema};
use psirec::harness::{
    aggregate, read_reports, run_experiment, summary_to_csv, summary_to_json, write_plot_data, REPORTS_CSV,
};
use psirec::{Error, ErrorKind, ExperimentConfig, ModelKind, StepReport, SvdOptions};

/// Stepwise evaluation of full PureSVD retraining against incremental
/// projector-splitting updates.
#[derive(Debug, Parser)]
#[command(name = "psirec", version, about)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter a ratings file and split it into initial data and time steps.
    Prepare(PrepareArgs),
    /// Run the stepwise experiment on a prepared split.
    Run(RunArgs),
    /// Summarize one or more runs and write plot-ready tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[arg(long)]
    input: PathBuf,
    /// `movielens`, `amazon`, or `key=value` pairs such as
    /// `delim=tab,header=true,user=0,item=1,rating=2,ts=3`.
    #[arg(long, default_value = "movielens", value_parser = parse_schema)]
    schema: Schema,
    #[arg(long, default_value_t = 4.0)]
    min_rating: f64,
    #[arg(long, default_value_t = 1)]
    min_user_items: usize,
    /// Span held back from initial training, e.g. `240days` or seconds.
    #[arg(long, default_value = "240days", value_parser = parse_duration)]
    holdback: Duration,
    #[arg(long, default_value_t = 8)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    split: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "puresvd,psi", value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80,160")]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    top_n: usize,
    #[arg(long, default_value_t = SvdOptions::DEFAULT.seed)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also store the final factors of every (model, rank).
    #[arg(long)]
    checkpoints: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A run directory, or a directory of run directories.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn parse_schema(s: &str) -> Result<Schema, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    match s.trim().parse::<u64>() {
        Ok(secs) => Ok(Duration::from_secs(secs)),
        Err(_) => humantime::parse_duration(s).map_err(|e| e.to_string()),
    }
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> psirec::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Data(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn prepare(args: &PrepareArgs) -> psirec::Result<()> {
    let loaded = load_csv(&args.input, &args.schema)?;
    if loaded.skipped > 0 {
        log::warn!("skipped {} malformed lines", loaded.skipped);
    }
    let log = preprocess(&loaded.log, args.min_rating, args.min_user_items)?;
    emit(&format!(
        "{} interactions, {} users, {} items, density {:.4}%\n",
        log.len(),
        log.n_users(),
        log.n_items(),
        log.density() * 100.0
    ))?;
    let holdback =
        i64::try_from(args.holdback.as_secs()).map_err(|_| Error::Config("holdback duration too large".into()))?;
    let split = stepwise_split(&log, holdback, args.steps)?;
    let config = serde_json::json!({
        "input": args.input,
        "schema": args.schema,
        "min_rating": args.min_rating,
        "min_user_items": args.min_user_items,
        "holdback_secs": holdback,
        "steps": args.steps,
    });
    let manifest = write_split(&args.out, &split, config)?;
    let mut text = format!(
        "initial matrix {}x{} with {} entries\n",
        manifest.n_users, manifest.n_items, manifest.initial_nnz
    );
    for w in &manifest.windows {
        text += &format!(
            "step {}: [{}, {}) delta {} holdout users {} dropped {}\n",
            w.step, w.start, w.end, w.delta_nnz, w.holdout_users, w.dropped_unknown
        );
    }
    emit(&text)
}

fn run(args: &RunArgs) -> psirec::Result<()> {
    let (split, _) = read_split(&args.split)?;
    let config = ExperimentConfig {
        ranks: args.ranks.clone(),
        top_n: args.top_n,
        models: args.models.clone(),
        seed: args.seed,
        out_dir: Some(args.out.clone()),
        save_checkpoints: args.checkpoints,
    };
    let reports = run_experiment(&split, &config)?;
    emit(&summary_to_csv(&aggregate(&reports)))
}

/// `dir` itself when it holds reports, otherwise its immediate children
/// that do, in name order.
fn run_dirs(dir: &Path) -> psirec::Result<Vec<PathBuf>> {
    if dir.join(REPORTS_CSV).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(REPORTS_CSV).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Data(format!("no {REPORTS_CSV} under {}", dir.display())));
    }
    Ok(dirs)
}

fn report(args: &ReportArgs) -> psirec::Result<()> {
    let mut reports: Vec<StepReport> = Vec::new();
    for dir in run_dirs(&args.runs)? {
        reports.extend(read_reports(&dir.join(REPORTS_CSV))?);
    }
    if reports.is_empty() {
        return Err(Error::Data("runs contain no report rows".into()));
    }
    for path in write_plot_data(&args.runs, &reports)? {
        log::info!("wrote {}", path.display());
    }
    let summary = aggregate(&reports);
    match args.format {
        Format::Csv => emit(&summary_to_csv(&summary)),
        Format::Json => emit(&(summary_to_json(&summary) + "\n")),
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Prepare(args) => prepare(args),
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
