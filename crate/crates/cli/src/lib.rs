//! Command-line harness: dataset simulation, sampler runs, diagnostics and
//! the cross-sampler comparison study.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::Config;
use exdiff_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "exdiff",
    version,
    about = "Exact data augmentation MCMC for discretely observed diffusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    scheme: Option<String>,
    /// Dataset to condition on instead of simulating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output file, or directory for `compare`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset.
    Simulate(Common),
    /// Run one sampler and write its chain.
    Run(Common),
    /// Summarise a chain file.
    Diagnose {
        /// Chain CSV written by `run`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
    },
    /// Run every sampler on one dataset and tabulate them.
    Compare(Common),
}

fn build_config(c: &Common) -> exdiff_core::Result<Config> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let pairs = [
        ("model", c.model.clone()),
        ("n", c.n.map(|v| v.to_string())),
        ("dt", c.dt.map(|v| v.to_string())),
        ("seed", c.seed.map(|v| v.to_string())),
        ("iterations", c.iterations.map(|v| v.to_string())),
        ("scheme", c.scheme.clone()),
        ("data", c.data.as_ref().map(|p| p.display().to_string())),
        ("out", c.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &c.set {
        cfg.apply_override(kv)?;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

fn dispatch(cmd: Command) -> exdiff_core::Result<String> {
    match cmd {
        Command::Simulate(c) => {
            let p = commands::simulate(&build_config(&c)?)?;
            Ok(format!("wrote {}\n", p.display()))
        }
        Command::Run(c) => {
            let (p, rec) = commands::run(&build_config(&c)?)?;
            Ok(format!(
                "wrote {} ({} rows, acceptance {:.3})\n",
                p.display(),
                rec.draws.len(),
                rec.counters.theta_acceptance()
            ))
        }
        Command::Diagnose { input, out, max_lag } => commands::diagnose(&input, out.as_deref(), max_lag),
        Command::Compare(c) => {
            let cfg = build_config(&c)?;
            commands::compare(&cfg)?;
            let dir = cfg.out.unwrap_or_else(|| PathBuf::from("compare"));
            Ok(format!("wrote {}\n", dir.join("summary.csv").display()))
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(msg) => {
            print!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("exdiff: {e}");
            exit_code(&e)
        }
    }
}
