use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elaa_velocity::experiments::{self, ConfigError, Settings, Table};

/// Velocity CRLB sweeps and ML Monte Carlo for extremely large linear arrays.
#[derive(Parser, Debug)]
#[command(name = "elaa-velocity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `key = value` config file; unspecified keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base RNG seed for Monte Carlo runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override a config key, e.g. `--set carrier=6GHz`. Repeatable; applied
    /// after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Every bound for the configured scenario.
    Crlb,
    /// One-dimensional sweep or x-y grid selected by `sweep`.
    Sweep,
    /// Radial bound vs distance for several apertures.
    Fig1,
    /// Transverse bound vs distance for several apertures and angles.
    Fig2,
    /// Radial and transverse bounds for several carriers.
    Fig3,
    /// Transverse bound heat map with link-budget SNR.
    Fig4,
    /// ML estimator MSE against the bound over an SNR list.
    Montecarlo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Crlb => "crlb",
            Command::Sweep => "sweep",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Montecarlo => "montecarlo",
        }
    }
}

enum Failure {
    Config(ConfigError),
    Io(String, io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { path, source } => Failure::Io(path, source),
            other => Failure::Config(other),
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings, ConfigError> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("--set expects KEY=VALUE, got `{item}`")))?;
        s.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn produce(cli: &Cli, s: &Settings) -> Result<Table, ConfigError> {
    match cli.command {
        Command::Crlb => experiments::run_crlb(s),
        Command::Sweep => experiments::run_sweep(s),
        Command::Fig1 => experiments::run_fig1(s),
        Command::Fig2 => experiments::run_fig2(s),
        Command::Fig3 => experiments::run_fig3(s),
        Command::Fig4 => experiments::run_fig4(s),
        Command::Montecarlo => experiments::run_montecarlo(s),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let s = settings(cli)?;
    log::info!("{}: {}", cli.command.name(), s.summary());
    let table = match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Config(ConfigError::Invalid(format!("threads: {e}"))))?;
            pool.install(|| produce(cli, &s))?
        }
        None => produce(cli, &s)?,
    };
    match &cli.out {
        Some(path) => {
            let shown = path.display().to_string();
            let file = File::create(path).map_err(|e| Failure::Io(shown.clone(), e))?;
            let mut w = BufWriter::new(file);
            table
                .write_csv(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::Io(shown, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table
                .write_csv(&mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| Failure::Io("<stdout>".into(), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {path}: {e}");
            ExitCode::from(2)
        }
    }
}
