use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tempowic_cli::{commands, CliError, RunConfig};
use tempowic_core::{Mode, Objective, TieBreak};

#[derive(Parser)]
#[command(name = "tempowic", version, about = "Temporal word-in-context disambiguation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a pairs file (and labels); print dataset statistics.
    Validate(Flags),
    /// Sweep decision thresholds on labeled pairs; write calibration.json.
    Calibrate(Flags),
    /// Score pairs and apply a threshold; write predictions.tsv.
    Predict(Flags),
    /// Compare a predictions file with gold labels; print a metric report.
    Evaluate(Flags),
    /// Train a contrastive projection head; write head.json and calibration.json.
    TrainHead(Flags),
    /// Resolve the encoder for a date, or for every tweet of a pairs file.
    Route(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cosine,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    MacroF1,
    PositiveF1,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Lowest,
    PlateauCenter,
}

#[derive(Args)]
struct Flags {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Validation pairs used to calibrate after train-head.
    #[arg(long)]
    val_pairs: Option<PathBuf>,
    #[arg(long)]
    val_labels: Option<PathBuf>,
    #[arg(long)]
    emb_index: Option<PathBuf>,
    #[arg(long)]
    emb_blob: Option<PathBuf>,
    #[arg(long)]
    route: Option<PathBuf>,
    /// Date to route, YYYY-MM.
    #[arg(long)]
    date: Option<String>,
    /// Trained head file; scores become projected Euclidean distances.
    #[arg(long)]
    head: Option<PathBuf>,
    /// calibration.json whose threshold predict should use.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Predictions TSV for evaluate.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    #[arg(long, value_enum)]
    tie_break: Option<TieBreakArg>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    proj_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing; defaults to the current one).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            pairs: self.pairs,
            labels: self.labels,
            val_pairs: self.val_pairs,
            val_labels: self.val_labels,
            emb_index: self.emb_index,
            emb_blob: self.emb_blob,
            route: self.route,
            head: self.head,
            calibration: self.calibration,
            pred: self.pred,
            out: self.out,
            date: self.date,
            mode: self.mode.map(|m| match m {
                ModeArg::Cosine => Mode::CosineSim,
                ModeArg::Euclidean => Mode::Euclidean,
            }),
            lo: self.lo,
            hi: self.hi,
            step: self.step,
            threshold: self.threshold,
            objective: self.objective.map(|o| match o {
                ObjectiveArg::MacroF1 => Objective::MacroF1,
                ObjectiveArg::PositiveF1 => Objective::PositiveF1,
            }),
            tie_break: self.tie_break.map(|t| match t {
                TieBreakArg::Lowest => TieBreak::Lowest,
                TieBreakArg::PlateauCenter => TieBreak::PlateauCenter,
            }),
            batch_size: self.batch_size,
            epochs: self.epochs,
            lr: self.lr,
            margin: self.margin,
            proj_dim: self.proj_dim,
            seed: self.seed,
        };
        Ok(base.overlay(flags))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::internal(e.to_string())),
        _ => Ok(()),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(flags) => {
            let stats = commands::cmd_validate(&flags.resolve()?)?;
            emit(&(to_json(&stats)? + "\n"))?;
        }
        Command::Calibrate(flags) => {
            let done = commands::cmd_calibrate(&flags.resolve()?)?;
            let r = &done.result;
            eprint!(
                "{} mode, grid ({}, {}, {}): best threshold {} with {} {:.4}",
                r.mode, r.grid.lo, r.grid.hi, r.grid.step, r.best_threshold, r.objective, r.best_metric
            );
            if r.mode == Mode::CosineSim {
                eprint!(" (cosine distance {:.6})", 1.0 - r.best_threshold);
            }
            eprintln!("\nwrote {}", done.path.display());
        }
        Command::Predict(flags) => {
            let done = commands::cmd_predict(&flags.resolve()?)?;
            eprintln!(
                "{} pairs scored in {} mode at threshold {}; wrote {}",
                done.rows,
                done.mode,
                done.threshold,
                done.path.display()
            );
        }
        Command::Evaluate(flags) => {
            let report = commands::cmd_evaluate(&flags.resolve()?)?;
            emit(&(to_json(&report)? + "\n"))?;
        }
        Command::TrainHead(flags) => {
            let done = commands::cmd_train_head(&flags.resolve()?)?;
            if let (Some(first), Some(last)) = (done.epoch_losses.first(), done.epoch_losses.last()) {
                eprintln!("epoch loss {first:.6} -> {last:.6} over {} epochs", done.epoch_losses.len());
            }
            eprintln!(
                "euclidean threshold {} with {} {:.4}; wrote {}",
                done.calibration.best_threshold,
                done.calibration.objective,
                done.calibration.best_metric,
                done.out_dir.display()
            );
        }
        Command::Route(flags) => {
            emit(&commands::cmd_route(&flags.resolve()?)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
