use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use torus_shape::poincare::DEFAULT_ITERATES;
use torus_shape::shape_derivative::Method;

mod commands;
mod config;
mod error;
mod report;

use commands::{CohomologyArgs, RotationArgs, ShapeArgs, GOLDEN};
use config::{parse_deformation, Defaults, FileConfig, Overrides, RunConfig, SurfaceSource, DEFAULT_GRID};
use error::CliError;

/// Harmonic fields, boundary Poincaré maps and their shape derivatives on toroidal domains.
#[derive(Parser, Debug)]
#[command(name = "torus-shape", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $TORUS_SHAPE_OUT, then ./torus-shape-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `axisym`, `perturbed`, or a surface TOML file.
    #[arg(long, global = true)]
    surface: Option<String>,
    /// Grid size N of the N x N (phi, theta) grid.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for finite-difference sweeps (0: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative residual bound of the boundary integral solve.
    #[arg(long = "solver-tol", global = true)]
    solver_tol: Option<f64>,
    /// Number of Poincaré section points (default: the theta grid size).
    #[arg(long = "section-samples", global = true)]
    section_samples: Option<usize>,
    /// Major radius of the built-in tori.
    #[arg(long = "RT", global = true)]
    rt: Option<f64>,
    /// Minor radius of the built-in tori.
    #[arg(long = "rp", global = true)]
    rp: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Duhamel,
    Linearized,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boundary harmonic field, circulation and admissibility.
    Harmonic,
    /// Poincaré return map on the section phi = 0.
    Poincare,
    /// Rotation number of the surface map, or of an Arnold circle map with --omega.
    Rotation {
        #[arg(long)]
        omega: Option<f64>,
        /// Arnold coupling k in x + omega + k sin(2 pi x) / (2 pi).
        #[arg(long, default_value_t = 0.0)]
        coupling: f64,
        #[arg(long, default_value_t = DEFAULT_ITERATES)]
        iterates: usize,
    },
    /// Shape derivative of the return map for one or more deformations.
    ShapeDerivative {
        /// `ez`, `const:x,y,z`, `rotation`, `random:SEED`, `normal-bump:M,N,AMP`,
        /// `radial-bump:CX,CY,CZ,WIDTH,AMP`, or a TOML file; repeatable.
        #[arg(long)]
        deformation: Vec<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Duhamel)]
        method: MethodArg,
        /// Also compute central finite differences over the configured steps.
        #[arg(long)]
        fd: bool,
    },
    /// Closed-form checks on the axisymmetric torus.
    ValidateAxisym,
    /// Finite-difference validation of the analytic shape derivative.
    ValidateFd {
        #[arg(long)]
        deformation: Vec<String>,
        /// Number of seeded random deformations when none is given.
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Diophantine check, cohomological equation and synthetic surjectivity.
    Cohomology {
        #[arg(long, default_value_t = GOLDEN)]
        omega: f64,
        /// Zero-mean target as cos/sin pairs `a1,b1,a2,b2,...`; random if omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Option<Vec<f64>>,
        /// Band of the random target.
        #[arg(long, default_value_t = 16)]
        band: usize,
        #[arg(long = "C", default_value_t = 0.3)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long = "q-max", default_value_t = 10_000)]
        q_max: u64,
    },
}

impl Command {
    fn defaults(&self) -> Defaults {
        match self {
            Command::ValidateFd { .. } => Defaults {
                surface: SurfaceSource::Perturbed,
                ..Defaults::default()
            },
            Command::Cohomology { band, .. } => Defaults {
                grid: (4 * band).max(DEFAULT_GRID),
                ..Defaults::default()
            },
            _ => Defaults::default(),
        }
    }
}

fn parse_all(args: &[String]) -> Result<Vec<torus_shape::deformation::DeformationSpec>, CliError> {
    let mut out = Vec::new();
    for a in args {
        out.extend(parse_deformation(a)?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        surface: g.surface,
        grid: g.grid,
        seed: g.seed,
        out: g.out,
        threads: g.threads,
        solver_tol: g.solver_tol,
        section_samples: g.section_samples,
        rt: g.rt,
        rp: g.rp,
    };
    let cfg = RunConfig::resolve(file, overrides, cli.command.defaults())?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut summary = match &cli.command {
        Command::Harmonic => commands::harmonic(&cfg)?,
        Command::Poincare => commands::poincare(&cfg)?,
        Command::Rotation {
            omega,
            coupling,
            iterates,
        } => commands::rotation(
            &cfg,
            &RotationArgs {
                omega: *omega,
                coupling: *coupling,
                iterates: *iterates,
            },
        )?,
        Command::ShapeDerivative { deformation, method, fd } => commands::shape_derivative(
            &cfg,
            &ShapeArgs {
                deformations: parse_all(deformation)?,
                method: match method {
                    MethodArg::Duhamel => Method::Duhamel,
                    MethodArg::Linearized => Method::Linearized,
                },
                fd: *fd,
            },
        )?,
        Command::ValidateAxisym => commands::validate_axisym(&cfg)?,
        Command::ValidateFd { deformation, count } => commands::validate_fd(&cfg, &parse_all(deformation)?, *count)?,
        Command::Cohomology {
            omega,
            mu,
            band,
            c,
            tau,
            q_max,
        } => commands::cohomology(
            &cfg,
            &CohomologyArgs {
                omega: *omega,
                mu: mu.clone(),
                band: *band,
                c: *c,
                tau: *tau,
                q_max: *q_max,
            },
        )?,
    };
    summary.print_table();
    let path = summary.write(&cfg.out)?;
    eprintln!("summary written to {}", path.display());
    Ok(summary.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            let e = CliError::Acceptance("one or more checks failed".into());
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
