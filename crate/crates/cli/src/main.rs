//! `polarosd` command line.
//!
//! Exit status: 0 on success, 2 for an invalid configuration or usage, 3
//! when a configured artifact file does not exist, 1 for anything else.

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use polarosd::pcm::build_pruned_pcm;
use polarosd::sim::{self, CodeConfig, ExperimentConfig, Format, SimError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polarosd", version, about = "Pruned-PCM polar decoders and Monte Carlo runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(clap::Args)]
struct RunOpts {
    /// Override `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Build the pruned PCM of a config's `[code]` section and save it.
    BuildPcm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one decoder over the configured channel points.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Paired comparison of two decoders on identical noise.
    Compare {
        /// Exactly two configs, differing only in the decoder (and trial
        /// budget, taken from the first).
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        opts: RunOpts,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SimError>() {
        Some(SimError::InvalidConfig(_) | SimError::ConfigMismatch(_)) => 2,
        Some(SimError::MissingArtifact(_)) => 3,
        _ => 1,
    }
}

fn load(path: &Path, opts: &RunOpts) -> Result<ExperimentConfig, SimError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn code_section(path: &Path) -> Result<CodeConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let code = table
        .remove("code")
        .ok_or_else(|| SimError::InvalidConfig("config has no [code] section".into()))?;
    code.try_into().map_err(|e: toml::de::Error| SimError::InvalidConfig(e.to_string()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildPcm { config, out } => {
            let code = code_section(&config)?;
            let spec = code.build_spec()?;
            let pcm = build_pruned_pcm(&spec, &code.prune);
            pcm.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "N = {}, K = {}, r = {}: {} rows x {} columns ({} hidden), density {:.4}",
                pcm.block_len(),
                pcm.k(),
                pcm.r_crc(),
                pcm.n_rows(),
                pcm.n_cols(),
                pcm.n_hidden(),
                pcm.density()
            );
        }
        Command::Run { config, opts } => {
            let cfg = load(&config, &opts)?;
            let res = sim::run_experiment(&cfg)?;
            write_out(&sim::emit(&res, opts.format.into()), opts.out.as_deref())?;
        }
        Command::Compare { config, opts } => {
            let [a, b] = config.as_slice() else {
                return Err(SimError::InvalidConfig(format!("compare needs two --config files, got {}", config.len())).into());
            };
            let (a, b) = (load(a, &opts)?, load(b, &opts)?);
            let rep = sim::paired_compare(&a, &b)?;
            write_out(&sim::emit_paired(&rep, opts.format.into()), opts.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
