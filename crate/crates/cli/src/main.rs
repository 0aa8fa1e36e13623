//! `attrib`: generate keyword data, train a classifier, explain it, distill
//! an empirical explainer, trace convergence curves and render heatmaps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use attrib_core::data::Split;
use attrib_core::{Accounting, Method, Normalization};
use clap::{Parser, Subcommand};

use config::RunConfig;

/// Bad flags, missing inputs or inconsistent files; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "attrib", version, about = "Feature attribution and explainer distillation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true)]
    student: Option<PathBuf>,
    /// Target attribution JSONL (distill, render, objective).
    #[arg(long, global = true)]
    targets: Option<PathBuf>,
    /// Empirical attribution JSONL (render, objective).
    #[arg(long, global = true)]
    empirical: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// ig | svs | exact_shapley | empirical
    #[arg(long, global = true)]
    method: Option<Method>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// raw | unit_interval | signed_max
    #[arg(long, global = true)]
    normalization: Option<Normalization>,
    /// actual | paper
    #[arg(long, global = true)]
    accounting: Option<Accounting>,
    /// train | validation | test
    #[arg(long, global = true)]
    split: Option<Split>,
    /// Only the first N instances of the split.
    #[arg(long, global = true)]
    limit: Option<usize>,
    /// Comma-separated sample counts for the curve.
    #[arg(long, global = true, value_delimiter = ',')]
    s_values: Option<Vec<usize>>,
    #[arg(long, global = true)]
    s_reference: Option<usize>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate the synthetic keyword-count dataset.
    GenData,
    TrainClassifier,
    /// Attribution maps for every instance of a split.
    Explain,
    /// Fit a student explainer to target maps.
    Distill,
    /// Convergence curve of an expensive explainer against a high-s reference.
    Curve,
    /// Accuracy/efficiency objective of candidate maps against targets.
    Objective,
    /// HTML heatmaps, one document per line.
    Render,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::TrainClassifier => "train-classifier",
            Command::Explain => "explain",
            Command::Distill => "distill",
            Command::Curve => "curve",
            Command::Objective => "objective",
            Command::Render => "render",
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.command = cli.command.name().to_string();
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &cli.$field {
                cfg.$field = v.clone();
            }
        )*};
    }
    macro_rules! set_opt {
        ($($field:ident),*) => {$(
            if cli.$field.is_some() {
                cfg.$field = cli.$field.clone();
            }
        )*};
    }
    set!(method, samples, seed, alpha, normalization, accounting, split, s_values, s_reference, repeats);
    set_opt!(dataset, model, student, targets, empirical, out, limit);
    cfg.sync_seeds();
    Ok(cfg)
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("ATTRIB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("ATTRIB_THREADS must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::GenData => commands::gen_data(&cfg),
        Command::TrainClassifier => commands::train_classifier(&cfg),
        Command::Explain => commands::explain(&cfg),
        Command::Distill => commands::distill(&cfg),
        Command::Curve => commands::curve(&cfg),
        Command::Objective => commands::objective(&cfg),
        Command::Render => commands::render(&cfg),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<attrib_core::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

/// The error chain joined with `: `, skipping causes whose text the
/// previous message already ends with.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if msg.ends_with(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
