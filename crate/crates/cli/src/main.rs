use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hetsched::experiment::{run_experiment, summary_csv};
use hetsched::{parse_config, RunConfig, SchedulerChoice};

/// Uplink RB-scheduling simulator for two-tier small-cell networks.
///
/// Runs every selected scheduler on every seed and writes delays.csv,
/// convergence.csv and summary.csv to the output directory. Flags override
/// values from the config file.
#[derive(Debug, Parser)]
#[command(name = "hetsched", version)]
struct Args {
    /// TOML run config; omitted keys take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed count `n` (runs seeds 1..=n) or an explicit list such as `3,8,21`.
    #[arg(long, value_name = "N|LIST", value_parser = parse_seeds)]
    seeds: Option<Seeds>,

    /// rr, qtab, dmdq or all.
    #[arg(long)]
    scheduler: Option<SchedulerChoice>,

    /// Output directory for the CSV files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Subframes per run.
    #[arg(long, value_name = "T")]
    horizon: Option<u64>,

    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    if s.contains(',') {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed {p:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(Seeds)
    } else {
        let n: u64 = s.trim().parse().map_err(|e| format!("bad seed count {s:?}: {e}"))?;
        if n == 0 {
            return Err("seed count must be at least 1".into());
        }
        Ok(Seeds((1..=n).collect()))
    }
}

fn effective_config(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.0.clone();
    }
    if let Some(choice) = args.scheduler {
        cfg.scheduler = choice;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), String> {
    let cfg = effective_config(args)?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    print!("{}", summary_csv(&out.reports).map_err(|e| e.to_string())?);
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
