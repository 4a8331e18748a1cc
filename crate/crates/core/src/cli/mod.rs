//! Command-line front end for the `ect` binary.
//!
//! Exit codes: 0 when every asserted check passes, 1 on a check failure,
//! 2 on usage or input errors, 3 when a search refuses an instance as too
//! large.

mod commands;
pub mod config;
pub mod report;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
pub use config::Config;
pub use report::{Format, Metadata, Report, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "ect", version, about = "Filter trees and error-correcting tournaments for multiclass reductions")]
pub struct Cli {
    /// Master seed. Overrides ECT_SEED and the config file.
    #[arg(long, global = true, env = "ECT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and benchmarks.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Format printed on stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write <name>.json, <name>.csv and <name>.md into this directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare tree, filter tree, all-pairs and APFT test error on datasets.
    Bench(BenchArgs),
    /// Play one tournament against an adversary and summarize it.
    Simulate(SimulateArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Depth bounds next to measured depths for one (k, m).
    Depth(DepthArgs),
    /// Train a reduction on a dataset and save the model.
    Train(TrainArgs),
    /// Predict labels for a CSV with a saved model.
    Predict(PredictArgs),
}

#[derive(Debug, Args, Default)]
pub struct LearnerArgs {
    /// logistic_sgd, decision_stump, constant or bayes_oracle.
    #[arg(long)]
    pub learner: Option<String>,
    /// SGD step size.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Passes over the training data.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Seed for the learner's shuffling.
    #[arg(long)]
    pub learner_seed: Option<u64>,
}

impl LearnerArgs {
    pub fn resolve(&self, cfg: &Config) -> Result<LearnerSpec> {
        let kind: String = cfg.pick(self.learner.clone(), "learner.kind", "logistic_sgd".into())?;
        let spec = match kind.as_str() {
            "logistic_sgd" | "logistic" => {
                let LearnerSpec::LogisticSgd { lr, epochs, seed } = LearnerSpec::default() else {
                    unreachable!("default learner is logistic")
                };
                LearnerSpec::LogisticSgd {
                    lr: cfg.pick(self.lr, "learner.lr", lr)?,
                    epochs: cfg.pick(self.epochs, "learner.epochs", epochs)?,
                    seed: cfg.pick(self.learner_seed, "learner.seed", seed)?,
                }
            }
            "decision_stump" | "stump" => LearnerSpec::DecisionStump,
            "constant" => LearnerSpec::Constant { bit: 0 },
            "bayes_oracle" => LearnerSpec::bayes_oracle(),
            other => return Err(Error::InvalidArgument(format!("unknown learner '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// CSV dataset; repeatable.
    #[arg(long)]
    pub data: Vec<PathBuf>,
    /// Bundled generator (noise3, blobs8, ring6, binary2); repeatable.
    /// With neither --data nor --generator all generators are used.
    #[arg(long)]
    pub generator: Vec<String>,
    /// Name of the label column (default `label`).
    #[arg(long)]
    pub label_column: Option<String>,
    /// Random train/test splits per dataset.
    #[arg(long)]
    pub splits: Option<usize>,
    /// Share of rows used for training in each split.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AdversaryName {
    None,
    BudgetFullLie,
    BudgetHalfLie,
    RateRandom,
    Parity,
    Staged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchName {
    None,
    Exhaustive,
    Stochastic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of labels (default 8).
    #[arg(short = 'k')]
    pub k: Option<usize>,
    /// Number of first-phase tournaments (default 3).
    #[arg(short = 'm')]
    pub m: Option<usize>,
    /// complete or pool.
    #[arg(long)]
    pub semantics: Option<String>,
    #[arg(long, value_enum, default_value = "none")]
    pub adversary: AdversaryName,
    /// Weighted error budget for the lying adversaries.
    #[arg(long)]
    pub budget: Option<u32>,
    /// Restrict a full-lie adversary to these first-phase tournaments (1-based).
    #[arg(long, value_delimiter = ',')]
    pub tournaments: Option<Vec<usize>>,
    /// Flip probability for rate_random.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Parity pair `i,j`; by default every pair is tried and the worst kept.
    #[arg(long, value_delimiter = ',', value_name = "I,J")]
    pub pair: Option<Vec<usize>>,
    /// Play final-phase comparisons as repeated unit games.
    #[arg(long)]
    pub repeated: bool,
    /// JSON-lines transcript destination.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Also search for the minimum dethroning cost.
    #[arg(long, value_enum)]
    pub search: Option<SearchName>,
    /// Random schedules tried by the stochastic search (default 10000).
    #[arg(long)]
    pub samples: Option<u64>,
    /// States the exhaustive search may explore before refusing.
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Filter,
    Lemma1,
    Tightness,
    Inconsistency,
    Depth,
    Tournament,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Filter => "filter",
            Suite::Lemma1 => "lemma1",
            Suite::Tightness => "tightness",
            Suite::Inconsistency => "inconsistency",
            Suite::Depth => "depth",
            Suite::Tournament => "tournament",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// filter: random cost distributions per k (default 256).
    #[arg(long)]
    pub distributions: Option<usize>,
    /// lemma1: random draws per k (default 10000).
    #[arg(long)]
    pub draws: Option<u64>,
    /// inconsistency: sample size for the logistic run (default 50000).
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Number of labels.
    #[arg(short = 'k')]
    pub k: Option<usize>,
    /// Number of first-phase tournaments.
    #[arg(short = 'm')]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// CSV dataset to train on.
    #[arg(long, conflicts_with = "generator", required_unless_present = "generator")]
    pub data: Option<PathBuf>,
    /// Built-in synthetic generator to train on instead.
    #[arg(long)]
    pub generator: Option<String>,
    /// Name of the label column (default `label`).
    #[arg(long)]
    pub label_column: Option<String>,
    /// tree, filter_tree, cs_filter_tree, all_pairs or apft.
    #[arg(long)]
    pub kind: Option<String>,
    /// balanced, paired, or an explicit shape such as ((0,1),2).
    #[arg(long)]
    pub tree: Option<String>,
    /// One classifier for all nodes, with a node indicator appended to the features.
    #[arg(long)]
    pub shared: bool,
    /// Train node learners on costing resamples instead of weights.
    #[arg(long)]
    pub costing: bool,
    /// Destination of the model file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `ect train`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV to predict; the label column is optional.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column (default `label`).
    #[arg(long)]
    pub label_column: Option<String>,
    /// Write `row,prediction` CSV here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// Settings shared by every command after flags, environment and config
/// file are merged.
pub struct Context {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub config: Config,
    pub command: String,
}

impl Context {
    pub fn metadata(&self) -> Metadata {
        Metadata::new(&self.command, self.seed, self.jobs)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SearchLimit { .. } => EXIT_REFUSED,
        Error::HarnessFault(_) | Error::UndefinedWeightedError => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Bench(_) => "bench".into(),
        Command::Simulate(_) => "simulate".into(),
        Command::Verify(v) => format!("verify {}", v.suite.name()),
        Command::Depth(_) => "depth".into(),
        Command::Train(_) => "train".into(),
        Command::Predict(_) => "predict".into(),
    }
}

/// Runs a parsed command line and returns the report plus the output settings.
pub fn execute(cli: &Cli) -> Result<(Report, Format, Option<PathBuf>)> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let ctx = Context {
        seed: config.pick(cli.seed, "seed", DEFAULT_SEED)?,
        jobs: match cli.jobs {
            Some(j) => Some(j),
            None => config.get("jobs")?,
        },
        command: command_name(&cli.command),
        config,
    };
    let format = match cli.format {
        Some(f) => f,
        None => match ctx.config.raw("format") {
            None => Format::Md,
            Some(s) => Format::from_str(s, true).map_err(|_| Error::InvalidArgument(format!("unknown format '{s}'")))?,
        },
    };
    let out = cli.out.clone().or_else(|| ctx.config.raw("out").map(PathBuf::from));
    let started = Instant::now();
    let run = || match &cli.command {
        Command::Bench(a) => commands::bench(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a, out.as_deref()),
        Command::Verify(a) => verify::run(&ctx, a),
        Command::Depth(a) => commands::depth(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
    };
    let mut report = match ctx.jobs {
        Some(0) => return Err(Error::InvalidArgument("--jobs must be positive".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    report.metadata.elapsed_ms = started.elapsed().as_millis();
    Ok((report, format, out))
}

/// Full binary behavior: parse, run, print, and return the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let level = match cli.verbose {
        0 => "error",
        1 => "warn",
        2 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
    let (report, format, out) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let rendered = match report.render(format) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let _ = write!(stdout, "{rendered}");
    if !rendered.ends_with('\n') {
        let _ = writeln!(stdout);
    }
    if let Some(dir) = out {
        if let Err(e) = report.write_to(&dir) {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    }
    if report.failed() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}
