use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ltm_cli::{parse_config, run, Command};

#[derive(Parser)]
#[command(name = "ltm", version, about = "Linked twist map certificate and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// key=value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra key=value settings, applied after the file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    kappa: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    runs: Option<String>,
    #[arg(long, global = true)]
    budget: Option<String>,
    #[arg(long, global = true)]
    pairs: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Write the CSV here instead of standard output
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the inequality ledger for the critical shear
    Certify {
        /// Exit with 2 unless the critical shear lies in [3.46, 3.48]
        #[arg(long)]
        assert: bool,
    },
    /// Compare computed thresholds with the published list
    Thresholds,
    /// Lyapunov and equidistribution statistics of random orbits
    Simulate,
    /// Trace segments in S
    Segments {
        #[arg(long)]
        svg: bool,
        /// rectangle or growth
        #[arg(long)]
        trace: Option<String>,
    },
    /// Stable/unstable segment intersection experiment on random pairs
    Intersect,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut flags: Vec<(String, String)> = Vec::new();
    for s in &cli.set {
        match s.split_once('=') {
            Some((k, v)) => flags.push((k.trim().into(), v.trim().into())),
            None => {
                eprintln!("error: --set expects KEY=VALUE, got {s:?}");
                return ExitCode::from(1);
            }
        }
    }
    let named = [
        ("alpha", &cli.alpha),
        ("beta", &cli.beta),
        ("k", &cli.k),
        ("m", &cli.m),
        ("delta", &cli.delta),
        ("kappa", &cli.kappa),
        ("n", &cli.n),
        ("grid", &cli.grid),
        ("runs", &cli.runs),
        ("budget", &cli.budget),
        ("pairs", &cli.pairs),
        ("steps", &cli.steps),
        ("seed", &cli.seed),
        ("out", &cli.out),
    ];
    flags.extend(named.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))));
    let command = match &cli.command {
        Cmd::Certify { assert } => {
            if *assert {
                flags.push(("assert".into(), "true".into()));
            }
            Command::Certify
        }
        Cmd::Thresholds => Command::Thresholds,
        Cmd::Simulate => Command::Simulate,
        Cmd::Segments { svg, trace } => {
            if *svg {
                flags.push(("svg".into(), "true".into()));
            }
            if let Some(t) = trace {
                flags.push(("trace".into(), t.clone()));
            }
            Command::Segments
        }
        Cmd::Intersect => Command::Intersect,
    };
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(1);
            }
        },
        None => None,
    };
    let env_seed = std::env::var("LTM_SEED").ok();
    match parse_config(command, text.as_deref(), &flags, env_seed.as_deref()) {
        Ok(cfg) => ExitCode::from(run(&cfg) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
