use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use samos::workflow::{resolve_config, run, Command, Invocation};

/// MOS prediction from SSL features and a 48 kHz log-spectrogram.
///
/// Set SAMOS_THREADS to cap the number of worker threads and RUST_LOG to
/// control log verbosity (default: info).
#[derive(Parser)]
#[command(name = "samos", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config: JSON, or `key.path = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set pretrain.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Root seed; every random stream is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WithModel {
    #[command(flatten)]
    common: Common,
    /// Model checkpoint to load.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Manifest to score (defaults to `eval_manifest`).
    #[arg(short, long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate SSL feature files and cache log-spectrograms for a manifest.
    Featurize {
        #[command(flatten)]
        common: Common,
        /// Manifest to featurize (defaults to every manifest in the config).
        #[arg(short, long)]
        manifest: Option<PathBuf>,
    },
    /// Generate a synthetic corpus (WAVs, SSL features, manifest.csv).
    SynthData {
        #[command(flatten)]
        common: Common,
    },
    /// Train from scratch on `pretrain_data` with the `pretrain` settings.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Continue training a checkpoint on `finetune_data`.
    Finetune {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to start from.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Pretrain then fine-tune; writes both stage checkpoints.
    TwoStep {
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint: report.json, report.txt and predictions.csv.
    Evaluate(WithModel),
    /// Write predictions.csv (utterance_id, mu, sigma2) for a manifest.
    Predict(WithModel),
    /// Aggregate report.json files from repeated runs into mean ± std.
    ExportReport {
        #[command(flatten)]
        common: Common,
        /// report.json files to aggregate.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn invocation(cli: Cli) -> samos::Result<Invocation> {
    let (command, common, checkpoint, manifest) = match cli.command {
        Cmd::Featurize { common, manifest } => (Command::Featurize, common, None, manifest),
        Cmd::SynthData { common } => (Command::SynthData, common, None, None),
        Cmd::Train { common } => (Command::Train, common, None, None),
        Cmd::Finetune { common, checkpoint } => (Command::Finetune, common, Some(checkpoint), None),
        Cmd::TwoStep { common } => (Command::TwoStep, common, None, None),
        Cmd::Evaluate(m) => (Command::Evaluate, m.common, Some(m.checkpoint), m.manifest),
        Cmd::Predict(m) => (Command::Predict, m.common, Some(m.checkpoint), m.manifest),
        Cmd::ExportReport { common, reports } => (Command::ExportReport { reports }, common, None, None),
    };
    let mut config = resolve_config(common.config.as_deref(), &common.overrides, common.seed)?;
    if let Some(out) = common.out {
        config.output_dir = out;
    }
    Ok(Invocation {
        command,
        config,
        checkpoint,
        manifest,
    })
}

fn init_threads() -> samos::Result<()> {
    let Ok(raw) = std::env::var("SAMOS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| samos::Error::Config(format!("SAMOS_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| samos::Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|()| invocation(cli)).and_then(|inv| run(&inv)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
