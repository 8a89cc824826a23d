use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use credit_growth_cli::emit::{render_table, write_outputs};
use credit_growth_cli::run::{run, StatusKind};
use credit_growth_cli::scenario::{apply_overrides, parse_scenario_for, Command, Format, Overrides};

#[derive(Parser)]
#[command(name = "credit-growth", version, about = "Steady states, dynamics and sign checks for the credit-growth model")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Steady state and diagnostics at one point
    Steady(Flags),
    /// Steady states along one parameter axis
    Sweep(Flags),
    /// Forward simulation of the reduced system with level paths
    Simulate(Flags),
    /// Permanent rise in land productivity against a baseline
    Shock(Flags),
    /// Sign checks of the comparative-statics claims
    Verify(Flags),
    /// Two-sector labour extension
    Labor(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Scenario file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output.dir`
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Sampler seed, overriding `seed`
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Residual tolerance, overriding `tolerances.residual`
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

impl Cmd {
    fn split(self) -> (Command, Flags) {
        match self {
            Cmd::Steady(f) => (Command::Steady, f),
            Cmd::Sweep(f) => (Command::Sweep, f),
            Cmd::Simulate(f) => (Command::Simulate, f),
            Cmd::Shock(f) => (Command::Shock, f),
            Cmd::Verify(f) => (Command::Verify, f),
            Cmd::Labor(f) => (Command::Labor, f),
        }
    }
}

fn fail(kind: StatusKind, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(kind.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    let text = match std::fs::read_to_string(&flags.config) {
        Ok(t) => t,
        Err(e) => return fail(StatusKind::InvalidConfig, format!("{}: {e}", flags.config.display())),
    };
    let overrides = Overrides {
        out: flags.out.map(|p| p.to_string_lossy().into_owned()),
        format: flags.format,
        seed: flags.seed,
        tol: flags.tol,
    };
    let cfg = match parse_scenario_for(&text, Some(command)).and_then(|c| apply_overrides(c, &overrides)) {
        Ok(c) => c,
        Err(e) => return fail(StatusKind::InvalidConfig, format!("{}: {e}", flags.config.display())),
    };
    let report = run(&cfg);
    print!("{}", render_table(&report));
    match write_outputs(&report, Path::new(&cfg.output.dir)) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(StatusKind::InvalidConfig, format!("writing outputs: {e}")),
    }
    eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
    ExitCode::from(report.exit_code() as u8)
}
