use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcs_cli::{parse_config, parse_config_text, run, Command, ConfigError};

#[derive(Parser)]
#[command(name = "fcs", version, about = "Forward-curve space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Singular values of the embedding H_gamma -> L2_beta
    Spectrum(Flags),
    /// Fourier identity and bound checks
    FourierVerify(Flags),
    /// Simulate HJMM paths
    Simulate(Flags),
    /// Audit finite-rank approximations along simulated paths
    Approximate(Flags),
    /// Run every acceptance check
    VerifyAll(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat key = value file; flags take precedence
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// uniform, geometric or stretched
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    cells: Option<String>,
    #[arg(long = "x-max")]
    x_max: Option<String>,
    #[arg(long = "vol-c")]
    vol_c: Option<String>,
    #[arg(long = "vol-a")]
    vol_a: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-max")]
    t_max: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "h0-file")]
    h0_file: Option<String>,
    #[arg(long = "x-probe")]
    x_probe: Option<String>,
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "threshold-K", alias = "threshold-k")]
    threshold_k: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("grid", &self.grid),
            ("cells", &self.cells),
            ("x-max", &self.x_max),
            ("vol-c", &self.vol_c),
            ("vol-a", &self.vol_a),
            ("dt", &self.dt),
            ("t-max", &self.t_max),
            ("paths", &self.paths),
            ("seed", &self.seed),
            ("h0-file", &self.h0_file),
            ("x-probe", &self.x_probe),
            ("snapshots", &self.snapshots),
            ("rank", &self.rank),
            ("eps", &self.eps),
            ("threshold-k", &self.threshold_k),
            ("out", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("FCS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or(ConfigError::BadValue {
        key: "FCS_THREADS".into(),
        expected: "a positive integer",
        found: raw.clone(),
    })?;
    // only fails if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load(command: Command, flags: &Flags) -> Result<fcs_cli::RunConfig, ConfigError> {
    configure_threads()?;
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            Some(parse_config_text(&text)?)
        }
        None => None,
    };
    parse_config(command, &flags.pairs(), file.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Sub::Spectrum(f) => (Command::Spectrum, f),
        Sub::FourierVerify(f) => (Command::FourierVerify, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Approximate(f) => (Command::Approximate, f),
        Sub::VerifyAll(f) => (Command::VerifyAll, f),
    };
    let cfg = match load(command, flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("fcs {}: configuration error: {e}", command.name());
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(manifest) => {
            for c in &manifest.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!("{verdict} [{}] {}: {:.6e}", c.section, c.name, c.measured);
            }
            println!("outputs written to {}", cfg.out.display());
            if manifest.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("fcs {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
