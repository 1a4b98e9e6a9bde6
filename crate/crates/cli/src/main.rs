use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finesdf_cli::stages::{cmd_downstream, cmd_gen, cmd_pretrain, cmd_probe, cmd_recon, cmd_report, cmd_sdf};
use finesdf_cli::{thread_count, CliError, PipelineConfig};

#[derive(Parser)]
#[command(name = "finesdf", version, about = "Fine-scale SDF pretraining pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to FINESDF_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate meshes, B-Rep graphs and the design-grid manifest.
    Gen(Common),
    /// Precompute signed distance samples per geometry.
    Sdf(Common),
    /// Train encoder and decoder.
    Pretrain(Common),
    /// Fit the linear probe from latent codes to design parameters.
    Probe(Common),
    /// Reconstruct meshes from latent codes.
    Recon {
        #[command(flatten)]
        common: Common,
        /// Grid indices to reconstruct (repeatable).
        #[arg(long = "geometry")]
        geometry: Vec<usize>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the few-shot sweep.
    Downstream(Common),
    /// Write the consolidated summary.
    Report(Common),
}

fn setup(c: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.apply_seed(seed);
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    if let Some(n) = thread_count(c.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen(c) => cmd_gen(&setup(&c)?).map(drop),
        Command::Sdf(c) => cmd_sdf(&setup(&c)?).map(drop),
        Command::Pretrain(c) => cmd_pretrain(&setup(&c)?).map(drop),
        Command::Probe(c) => cmd_probe(&setup(&c)?).map(drop),
        Command::Recon {
            common,
            geometry,
            resolution,
        } => {
            let ids = (!geometry.is_empty()).then_some(geometry);
            cmd_recon(&setup(&common)?, ids, resolution).map(drop)
        }
        Command::Downstream(c) => cmd_downstream(&setup(&c)?).map(drop),
        Command::Report(c) => {
            let dir = cmd_report(&setup(&c)?)?;
            println!("{}", dir.join("summary.md").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
