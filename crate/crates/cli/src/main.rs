//! `llep`: command-line front end for the two-body Lieb-Liniger continuation
//! library. Every command writes one export record (CSV table or JSON
//! document) tagged with the hash of the effective configuration.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use llep_core::io::KEYS;
use llep_core::RunConfig;

use commands::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "llep", version, about = "Riemann sheets, exceptional points and holonomies of two Lieb-Liniger bosons")]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output path, `-` for stdout. Same as `--output`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Bethe equation for level n at real coupling g.
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        /// Total momentum quantum number; adds the energy when given.
        #[arg(long, allow_hyphen_values = true)]
        kbar: Option<i64>,
    },
    /// Table of exceptional points of the configured parity family.
    Eps {
        /// Largest excited level to include.
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Riemann sheet of level n over the configured grid.
    Sheet {
        #[arg(long)]
        n: usize,
        /// Export the detected branch cuts instead of the grid values.
        #[arg(long)]
        cuts: bool,
    },
    /// Transport the gauge connection around a closed contour.
    Holonomy(HolonomyArgs),
    /// Hermitian cycle: adiabatic to +∞, flip to -∞, adiabatic back.
    Cycle {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        g0: f64,
        #[arg(long, allow_hyphen_values = true)]
        kbar: Option<i64>,
    },
    /// Compare the closed-form connection with the quadrature oracle.
    OracleCheck {
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        /// Imaginary part of the coupling.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        g_im: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

#[derive(Debug, Args)]
struct HolonomyArgs {
    /// Real base point of the contour.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true, global = true)]
    g0: f64,
    #[command(subcommand)]
    contour: ContourKind,
}

#[derive(Debug, Clone, Subcommand)]
enum ContourKind {
    /// One clockwise keyhole around the EP of level n.
    EpLoop {
        #[arg(long)]
        n: usize,
    },
    /// Keyholes around the EPs of the first m excited levels, in order.
    Chain {
        #[arg(long)]
        m: usize,
    },
    /// Chain contour around the first `count` EPs of the family.
    NEp {
        #[arg(long)]
        count: usize,
    },
    /// The trivial contour at the base point.
    Empty,
}

/// Every configuration key also works as a `--kebab-case` flag.
fn command_with_config_flags() -> clap::Command {
    let mut cmd = Cli::command();
    for key in KEYS {
        let id: &'static str = key;
        cmd = cmd.arg(
            Arg::new(id)
                .long(key.replace('_', "-"))
                .value_name("VALUE")
                .global(true)
                .allow_hyphen_values(true)
                .help_heading("Configuration")
                .help(format!("Override `{key}`")),
        );
    }
    cmd
}

fn config_from(cli: &Cli, matches: &ArgMatches) -> llep_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut m = Some(matches);
    while let Some(cur) = m {
        for key in KEYS {
            if let Ok(Some(v)) = cur.try_get_one::<String>(key) {
                if !overrides.iter().any(|(k, _)| k == key) {
                    overrides.push((key, v.clone()));
                }
            }
        }
        m = cur.subcommand().map(|(_, sub)| sub);
    }
    for (k, v) in overrides {
        cfg.set(k, &v)?;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(cfg: &RunConfig, text: &str) -> std::io::Result<()> {
    if cfg.output == "-" {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(&cfg.output, text)
    }
}

fn main() -> ExitCode {
    let matches = match command_with_config_flags().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let cfg = match config_from(&cli, &matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Solve { n, g, kbar } => commands::solve(&cfg, *n, *g, *kbar),
        Command::Eps { n_max } => commands::eps(&cfg, *n_max),
        Command::Sheet { n, cuts } => commands::sheet(&cfg, *n, *cuts),
        Command::Holonomy(h) => {
            let kind = match &h.contour {
                ContourKind::EpLoop { n } => commands::Contour::EpLoop(*n),
                ContourKind::Chain { m } => commands::Contour::Chain(*m),
                ContourKind::NEp { count } => commands::Contour::NEp(*count),
                ContourKind::Empty => commands::Contour::Empty,
            };
            commands::holonomy(&cfg, h.g0, kind)
        }
        Command::Cycle { g0, kbar } => commands::cycle(&cfg, *g0, *kbar),
        Command::OracleCheck { g, g_im, tolerance } => commands::oracle_check(&cfg, *g, *g_im, *tolerance),
    };
    let Outcome { record, code, notes } = match result {
        Ok(o) => o,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            return ExitCode::from(code);
        }
    };
    for note in notes {
        eprintln!("warning: {note}");
    }
    let text = match record.render() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_output(&cfg, &text) {
        eprintln!("error: cannot write {}: {e}", cfg.output);
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
