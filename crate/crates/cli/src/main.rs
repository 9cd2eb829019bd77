use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfad_core::config::{RunConfig, TrainingMode};
use qfad_core::detector::Averaging;
use qfad_core::pipeline::{self, Layout};
use qfad_core::{Error, Result};

/// Federated quantum-autoencoder anomaly detection on simulated IoT traffic.
///
/// Settings resolve as: built-in defaults, then `--config`, then
/// `QFAD_OUTPUT_ROOT`, then command-line flags.
#[derive(Parser, Debug)]
#[command(name = "qfad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the train, validation and test sessions and write packet logs.
    Simulate,
    /// Extract per-router feature windows from the packet logs.
    Features,
    /// Train a model in the configured mode and write the artifact and loss traces.
    Train,
    /// Score the test sessions with a trained artifact.
    Detect {
        /// Artifact to apply; defaults to the one trained for `--mode`.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Merge per-mode outputs into coordinator-level tables.
    Report,
}

#[derive(Args, Debug)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "QFAD_OUTPUT_ROOT")]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Session-length multiplier.
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Topology TOML replacing the built-in testbed.
    #[arg(long, global = true)]
    topology: Option<PathBuf>,
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    rounds: Option<usize>,
    #[arg(long, global = true)]
    local_iters: Option<usize>,
    #[arg(long, global = true)]
    central_iters: Option<usize>,
    #[arg(long, global = true)]
    rho_begin: Option<f64>,
    #[arg(long, global = true)]
    rho_end: Option<f64>,
    #[arg(long, global = true)]
    optimizer: Option<String>,
    /// Aggregation tree, e.g. `((R1,R2),R3)`.
    #[arg(long, global = true)]
    tree: Option<String>,
    #[arg(long, global = true)]
    averaging: Option<Avg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Centralized,
    Fedavg,
    Hierarchical,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Avg {
    Weighted,
    Macro,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(output_dir, seed, scale, rounds, local_iters, central_iters, rho_begin, rho_end, optimizer, tree);
        if let Some(t) = &self.topology {
            cfg.topology = Some(t.clone());
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                Mode::Centralized => TrainingMode::Centralized,
                Mode::Fedavg => TrainingMode::Fedavg,
                Mode::Hierarchical => TrainingMode::Hierarchical,
            };
        }
        if let Some(a) = self.averaging {
            cfg.averaging = match a {
                Avg::Weighted => Averaging::Weighted,
                Avg::Macro => Averaging::Macro,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    let layout = Layout::new(&cfg.output_dir);
    match &cli.command {
        Command::Simulate => {
            for p in pipeline::stage_simulate(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Features => {
            let data = pipeline::stage_features(&cfg)?;
            for (r, sessions) in &data.routers {
                let windows: usize = sessions.iter().map(|s| s.windows.len()).sum();
                println!("{r}: {windows} windows over {} sessions", sessions.len());
            }
        }
        Command::Train => {
            let artifact = pipeline::stage_train(&cfg)?;
            for m in &artifact.models {
                let t = &m.threshold;
                println!(
                    "{}: mu {:.6} sigma {:.6} tau {:.6} ({} validation windows)",
                    m.routers.join("+"),
                    t.mu,
                    t.sigma,
                    t.tau,
                    t.num_validation_samples
                );
            }
            println!("artifact: {}", layout.artifact(cfg.mode).display());
            println!("traces: {}", layout.traces(cfg.mode).display());
        }
        Command::Detect { artifact } => {
            let reports = pipeline::stage_detect(&cfg, artifact.as_deref())?;
            for r in &reports {
                let m = &r.metrics;
                println!(
                    "{} {}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
                    r.router, r.method, m.accuracy, m.precision, m.recall, m.f1
                );
            }
        }
        Command::Report => {
            print!("{}", pipeline::stage_report(&cfg)?);
            println!("tables: {}", layout.coordinator().display());
        }
    }
    Ok(())
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            report_chain(&e);
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}

fn report_chain(e: &Error) {
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}
