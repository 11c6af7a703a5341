//! Run configuration: TOML config file, command-line overrides and surface files.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use torus_shape::axisym::AxisymTorus;
use torus_shape::deformation::DeformationSpec;
use torus_shape::harmonic::CIRCULATION_TOL;
use torus_shape::neumann::NeumannOptions;
use torus_shape::pipeline::PipelineOptions;
use torus_shape::surface::{build_surface, tori, FourierMode, FourierSurface};

use crate::error::CliError;

pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_SEED: u64 = 20240917;
/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TORUS_SHAPE_OUT";
pub const DEFAULT_FD_STEPS: [f64; 3] = [4e-3, 2e-3, 1e-3];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub patch_radius: Option<f64>,
    pub radial_nodes: Option<usize>,
    pub angular_nodes: Option<usize>,
    pub stencil: Option<usize>,
    pub condition_bound: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub nodes_per_panel: Option<usize>,
}

/// Bounds of the validation checks. The defaults are the pinned acceptance
/// tolerances.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub circulation: f64,
    pub field: f64,
    pub map_identity: f64,
    pub rotation: f64,
    pub pi_prime: f64,
    pub agreement: f64,
    pub flux_average: f64,
    pub averaging: f64,
    /// Lower bound on the observed finite-difference order.
    pub fd_order: f64,
    pub fd_discrepancy: f64,
    pub synthetic_pi_prime: f64,
    pub cohomological: f64,
    pub round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            circulation: CIRCULATION_TOL,
            field: 1e-8,
            map_identity: 1e-10,
            rotation: 1e-8,
            pi_prime: 1e-4,
            agreement: 1e-8,
            flux_average: 1e-6,
            averaging: 1e-5,
            fd_order: 1.9,
            fd_discrepancy: 1e-3,
            synthetic_pi_prime: 1e-9,
            cohomological: 1e-10,
            round_trip: 1e-12,
        }
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub surface: Option<String>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub section_samples: Option<usize>,
    pub major_radius: Option<f64>,
    pub minor_radius: Option<f64>,
    pub fd_steps: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub deformation: Vec<DeformationSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }
}

/// Command-line values that override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub surface: Option<String>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub solver_tol: Option<f64>,
    pub section_samples: Option<usize>,
    pub rt: Option<f64>,
    pub rp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSource {
    Axisymmetric,
    /// Axisymmetric torus plus `0.1 cos(2 pi (2 phi + theta))` on the minor radius.
    Perturbed,
    File(PathBuf),
}

impl SurfaceSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "axisym" | "axisymmetric" => Self::Axisymmetric,
            "perturbed" => Self::Perturbed,
            path => Self::File(PathBuf::from(path)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Axisymmetric => "axisym".into(),
            Self::Perturbed => "perturbed".into(),
            Self::File(p) => p.display().to_string(),
        }
    }
}

/// Per-command fallbacks used when neither the command line nor the config
/// file sets a value.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub surface: SurfaceSource,
    pub grid: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            surface: SurfaceSource::Axisymmetric,
            grid: DEFAULT_GRID,
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub surface: SurfaceSource,
    pub grid: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
    pub rt: f64,
    pub rp: f64,
    pub pipeline: PipelineOptions,
    pub fd_steps: Vec<f64>,
    pub tolerances: Tolerances,
    pub deformations: Vec<DeformationSpec>,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive (got {v})")))
    }
}

impl RunConfig {
    pub fn resolve(file: FileConfig, cli: Overrides, defaults: Defaults) -> Result<Self, CliError> {
        let surface = cli
            .surface
            .or(file.surface)
            .map(|s| SurfaceSource::parse(&s))
            .unwrap_or(defaults.surface);
        let grid = cli.grid.or(file.grid).unwrap_or(defaults.grid);
        if grid < 16 || grid % 2 != 0 {
            return Err(CliError::Config(format!("grid must be even and at least 16 (got {grid})")));
        }
        let mut neumann = NeumannOptions::default();
        let s = &file.solver;
        if let Some(v) = s.patch_radius {
            neumann.patch_radius = positive("solver.patch_radius", v)?;
        }
        if let Some(v) = s.radial_nodes {
            neumann.radial_nodes = v;
        }
        if let Some(v) = s.angular_nodes {
            neumann.angular_nodes = v;
        }
        if let Some(v) = s.stencil {
            neumann.stencil = v;
        }
        if let Some(v) = s.condition_bound {
            neumann.condition_bound = positive("solver.condition_bound", v)?;
        }
        if let Some(v) = cli.solver_tol.or(s.tol) {
            neumann.solver_tol = positive("solver tolerance", v)?;
        }
        let mut pipeline = PipelineOptions {
            neumann,
            ..PipelineOptions::default()
        };
        let i = &file.integrator;
        if let Some(v) = i.rtol {
            pipeline.poincare.ode.rtol = positive("integrator.rtol", v)?;
        }
        if let Some(v) = i.atol {
            pipeline.poincare.ode.atol = positive("integrator.atol", v)?;
        }
        if let Some(v) = i.nodes_per_panel {
            pipeline.poincare.nodes_per_panel = v.max(1);
        }
        pipeline.section_samples = cli.section_samples.or(file.section_samples);
        if pipeline.section_samples == Some(0) {
            return Err(CliError::Config("section samples must be positive".into()));
        }
        let fd_steps = file.fd_steps.unwrap_or_else(|| DEFAULT_FD_STEPS.to_vec());
        if fd_steps.len() < 2 {
            return Err(CliError::Config("fd_steps needs at least two steps".into()));
        }
        for t in &fd_steps {
            positive("fd step", *t)?;
        }
        let rt = cli.rt.or(file.major_radius).unwrap_or(2.0);
        let rp = cli.rp.or(file.minor_radius).unwrap_or(1.0);
        AxisymTorus::new(rt, rp).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            surface,
            grid,
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: cli
                .out
                .or(file.out)
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("torus-shape-out")),
            threads: cli.threads.or(file.threads).unwrap_or(0),
            rt,
            rp,
            pipeline,
            fd_steps,
            tolerances: file.tolerances,
            deformations: file.deformation,
        })
    }

    pub fn grid_size(&self) -> (usize, usize) {
        (self.grid, self.grid)
    }

    pub fn torus(&self) -> AxisymTorus {
        AxisymTorus::new(self.rt, self.rp).expect("validated on resolve")
    }

    pub fn build_surface(&self) -> Result<FourierSurface, CliError> {
        let grid = self.grid_size();
        let s = match &self.surface {
            SurfaceSource::Axisymmetric => tori::axisymmetric(self.rt, self.rp, grid),
            SurfaceSource::Perturbed => tori::perturbed(self.rt, self.rp, 0.1, (2, 1), grid),
            SurfaceSource::File(path) => build_surface(SurfaceFile::load(path)?.mode, grid),
        };
        Ok(s?)
    }
}

/// Surface file: a list of `[[mode]]` tables with `m`, `n`, `cos` and `sin`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub mode: Vec<FourierMode>,
}

impl SurfaceFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read surface {}: {e}", path.display())))?;
        let file: Self =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("surface {}: {e}", path.display())))?;
        if file.mode.is_empty() {
            return Err(CliError::Config(format!("surface {} has no modes", path.display())));
        }
        Ok(file)
    }
}

/// Parses a `--deformation` argument: a TOML file with `[[deformation]]`
/// tables, or one of `ez`, `const:x,y,z`, `rotation`, `random:SEED`,
/// `normal-bump:M,N,AMP`, `radial-bump:CX,CY,CZ,WIDTH,AMP`.
pub fn parse_deformation(arg: &str) -> Result<Vec<DeformationSpec>, CliError> {
    let (head, rest) = arg.split_once(':').unwrap_or((arg, ""));
    let nums = |n: usize| -> Result<Vec<f64>, CliError> {
        let v: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("deformation `{arg}`: {e}")))?;
        if v.len() != n {
            return Err(CliError::Config(format!("deformation `{arg}` expects {n} numbers")));
        }
        Ok(v)
    };
    let spec = match head {
        "ez" => DeformationSpec::Constant { vector: [0.0, 0.0, 1.0] },
        "const" => {
            let v = nums(3)?;
            DeformationSpec::Constant { vector: [v[0], v[1], v[2]] }
        }
        "rotation" => DeformationSpec::RigidRotation { rate: 1.0 },
        "random" => DeformationSpec::Random {
            seed: rest
                .parse()
                .map_err(|e| CliError::Config(format!("deformation `{arg}`: {e}")))?,
            waves: 6,
            amplitude: 1.0,
        },
        "normal-bump" => {
            let v = nums(3)?;
            DeformationSpec::FourierNormalBump {
                m: v[0] as i32,
                n: v[1] as i32,
                amplitude: v[2],
            }
        }
        "radial-bump" => {
            let v = nums(5)?;
            DeformationSpec::RadialBump {
                center: [v[0], v[1], v[2]],
                width: v[3],
                amplitude: v[4],
            }
        }
        _ => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct DeformationFile {
                deformation: Vec<DeformationSpec>,
            }
            let path = Path::new(arg);
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("unknown deformation `{arg}` and no such file ({e})")))?;
            let file: DeformationFile =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("deformation file {arg}: {e}")))?;
            return Ok(file.deformation);
        }
    };
    Ok(vec![spec])
}
