use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualpath::report::commands::{
    cmd_ablate, cmd_canonical, cmd_cv, cmd_encode, cmd_report, cmd_sweep, cmd_synth,
    cmd_validate, resolve_config,
};
use dualpath::report::{CliError, CommandOutput, Overrides};

/// Dual-path (intuition + deliberation) models of syllogistic response
/// distributions.
///
/// Exit codes: 0 success, 1 data error, 2 config error, 3 runtime failure.
/// DUALPATH_OUT, when set, overrides the output directory.
#[derive(Parser)]
#[command(name = "dualpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Response table (CSV).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Output directory (`synth`: output file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// cv: model seed; canonical/ablate: split and init seed; synth: table seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of CV folds.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Intuition and deliberation loss weights, e.g. `0.5,0.5`.
    #[arg(long, global = true, value_parser = parse_weights)]
    loss_weights: Option<(f64, f64)>,
    /// Bootstrap resamples.
    #[arg(long, global = true)]
    resamples: Option<usize>,
    /// Comma-separated sweep seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a response table and print its summary.
    Validate,
    /// k-fold cross-validation of all three models on one shared fold plan.
    Cv,
    /// 80:20 interpretability run: gate winners, probes, ablation, figures.
    Canonical,
    /// Inference-time single-state ablation on the canonical split.
    Ablate {
        /// Use a saved model instead of retraining.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Repeated 80:20 runs over several seeds.
    Sweep,
    /// Write the 64 x 29 feature matrix.
    Encode,
    /// Re-render figures from archived tables in the output directory.
    Report,
    /// Write a synthetic table in the input schema (not human data).
    Synth,
}

fn parse_weights(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|_| format!("bad weight {a:?}"))?,
            b.parse().map_err(|_| format!("bad weight {b:?}"))?,
        )),
        _ => Err("expected two comma-separated weights".into()),
    }
}

fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    let o = cli.opts;
    let overrides = Overrides {
        data: o.data,
        out: o.out.clone(),
        seed: o.seed,
        k: o.k,
        epochs: o.epochs,
        lr: o.lr,
        loss_weights: o.loss_weights,
        resamples: o.resamples,
        seeds: o.seeds,
    };
    let name = match &cli.command {
        Command::Validate => "validate",
        Command::Cv => "cv",
        Command::Canonical => "canonical",
        Command::Ablate { .. } => "ablate",
        Command::Sweep => "sweep",
        Command::Encode => "encode",
        Command::Report => "report",
        Command::Synth => "synth",
    };
    let cfg = resolve_config(o.config.as_deref(), &overrides, name)?;
    match cli.command {
        Command::Validate => cmd_validate(&cfg.data),
        Command::Cv => cmd_cv(&cfg),
        Command::Canonical => cmd_canonical(&cfg),
        Command::Ablate { checkpoint } => cmd_ablate(&cfg, checkpoint.as_deref()),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Encode => cmd_encode(&cfg),
        Command::Report => cmd_report(&cfg),
        Command::Synth => {
            let path = o.out.unwrap_or_else(|| PathBuf::from("synthetic_responses.csv"));
            cmd_synth(o.seed.unwrap_or(1), &path)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            for line in out.lines {
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
