use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hawkes_epi::analysis::ScanParam;
use hawkes_epi_cli::commands::provenance_notes;
use hawkes_epi_cli::{parse_config, parse_config_with_provenance, run, serialize, Command, RunConfig};

/// Simulation and threshold analysis for the Hawkes-driven human-rodent
/// epidemic model.
#[derive(Debug, Parser)]
#[command(name = "hawkes-epi", version)]
struct Cli {
    /// TOML configuration; omitted keys take baseline values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `simulation.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of paths (overrides `simulation.n_paths`).
    #[arg(long, global = true)]
    paths: Option<u64>,
    /// Horizon in days (overrides `simulation.horizon`).
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Grid step in days (overrides `simulation.dt`).
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Print R0 with its summands and the extinction exponent.
    R0,
    /// Print R0, extinction exponent and persistence constants.
    Thresholds,
    /// Simulate one path.
    Simulate,
    /// Simulate an ensemble and its mean path.
    Ensemble,
    /// Scan R0 over two parameters.
    Scan(ScanArgs),
    /// Check a Hawkes channel against its moments, LLN and time rescaling.
    ValidateHawkes,
}

#[derive(Debug, clap::Args)]
struct ScanArgs {
    /// First axis (mu_h, mu_r, delta_h, delta_r, eta1_plus_eta2, p, lambda0_joint, alpha2, alpha3).
    #[arg(long)]
    x: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    /// Second axis.
    #[arg(long)]
    y: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y_max: Option<f64>,
    /// Points per axis.
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("error: {failed} path(s) failed; see failures.log");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<usize> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?,
        None => String::new(),
    };
    let (mut config, defaulted) = parse_config_with_provenance(&text)?;
    let mut notes = provenance_notes(&defaulted);

    let mut set = |key: &str, value: String| notes.push(format!("{key} = {value} (set on the command line)"));
    if let Some(dir) = cli.out {
        set("output.dir", dir.display().to_string());
        config.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        set("simulation.seed", seed.to_string());
        config.sim.master_seed = seed;
    }
    if let Some(n) = cli.paths {
        set("simulation.n_paths", n.to_string());
        config.sim.n_paths = n as usize;
    }
    if let Some(h) = cli.horizon {
        set("simulation.horizon", h.to_string());
        config.sim.horizon = h;
    }
    if let Some(dt) = cli.dt {
        set("simulation.dt", dt.to_string());
        config.sim.dt = dt;
    }
    if let Sub::Scan(args) = &cli.command {
        if let Some(x) = &args.x {
            set("scan.x", x.clone());
            config.scan.x = x.parse::<ScanParam>()?;
        }
        if let Some(y) = &args.y {
            set("scan.y", y.clone());
            config.scan.y = y.parse::<ScanParam>()?;
        }
        for (key, value, slot) in [
            ("scan.x_min", args.x_min, &mut config.scan.x_range.0),
            ("scan.x_max", args.x_max, &mut config.scan.x_range.1),
            ("scan.y_min", args.y_min, &mut config.scan.y_range.0),
            ("scan.y_max", args.y_max, &mut config.scan.y_range.1),
        ] {
            if let Some(v) = value {
                set(key, v.to_string());
                *slot = v;
            }
        }
        if let Some(r) = args.resolution {
            set("scan.resolution", r.to_string());
            config.scan.resolution = r;
        }
    }
    let config = revalidate(&config)?;

    let command = match cli.command {
        Sub::R0 => Command::R0,
        Sub::Thresholds => Command::Thresholds,
        Sub::Simulate => Command::Simulate,
        Sub::Ensemble => Command::Ensemble,
        Sub::Scan(_) => Command::Scan,
        Sub::ValidateHawkes => Command::ValidateHawkes,
    };
    let outcome = run(command, &config, &notes)?;
    print!("{}", outcome.report);
    Ok(outcome.failed_paths)
}

/// Re-checks a configuration after command-line overrides.
fn revalidate(config: &RunConfig) -> Result<RunConfig> {
    if config.sim.master_seed > i64::MAX as u64 {
        anyhow::bail!("--seed must be <= {} so the manifest can record it", i64::MAX);
    }
    parse_config(&serialize(config)).map_err(|mut e| {
        e.line = None;
        anyhow::anyhow!("{e} (after command-line overrides)")
    })
}
