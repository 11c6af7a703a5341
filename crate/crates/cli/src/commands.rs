//! The subcommands. Each returns a summary; acceptance failures are raised by
//! the caller after the summary has been written.

use std::f64::consts::PI;

use torus_shape::axisym::{
    reduced_pi_prime, toroidal_averaging_residual, toroidal_averaging_test_functions, toroidal_flux_average,
};
use torus_shape::cohomology::{
    averaging_operator, check_diophantine, cohomological_residual, mu_to_phi, solve_cohomological,
    tangential_deformation_from_mu, CircleFunction, SMALL_DIVISOR_FLOOR,
};
use torus_shape::deformation::DeformationSpec;
use torus_shape::harmonic::{
    check_admissible, compute_harmonic, detect_linearized, linearization_spread, normalize_toroidal, NormalizedField,
};
use torus_shape::neumann::NeumannOperator;
use torus_shape::pipeline::{fd_pi_prime, BoundaryState};
use torus_shape::poincare::{
    poincare_map, rotation_number_of, transition_factor, CircleMap, PoincareOptions, DEFAULT_ITERATES,
};
use torus_shape::shape_derivative::{pi_prime_duhamel, pi_prime_linearized, x_prime_theta, Method};
use torus_shape::spectral::{Grid, SpectralOps};
use torus_shape::surface::{compute_metric, MetricData, TangentField};

use crate::config::{RunConfig, SurfaceSource};
use crate::error::CliError;
use crate::report::{Summary, Table};

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn grid_sup(g: &Grid) -> f64 {
    g.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn thetas(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

fn deformations(cfg: &RunConfig, extra: &[DeformationSpec], count: usize) -> Vec<DeformationSpec> {
    let mut out = cfg.deformations.clone();
    out.extend_from_slice(extra);
    if out.is_empty() {
        out = DeformationSpec::random_family(cfg.seed, count, 1.0);
    }
    out
}

pub fn harmonic(cfg: &RunConfig) -> Result<Summary, CliError> {
    let mut summary = Summary::new("harmonic", cfg);
    let surface = cfg.build_surface()?;
    let metric = compute_metric(&surface);
    let op = NeumannOperator::new(&surface, &metric, cfg.pipeline.neumann)?;
    let h = compute_harmonic(&surface, &metric, &op)?;
    let report = check_admissible(&h);
    summary.scalar("condition_estimate", op.condition_estimate());
    summary.scalar("b_phi_min", report.b_phi_min);
    summary.scalar("b_phi_min_phi", report.location.0);
    summary.scalar("b_phi_min_theta", report.location.1);
    summary.check_max("circulation_error", h.max_circulation_error(), cfg.tolerances.circulation);
    summary.check_min("b_phi_min", report.b_phi_min, f64::MIN_POSITIVE);
    let normalized = if report.admissible {
        let x = normalize_toroidal(&h)?;
        summary.scalar("linearization_spread", linearization_spread(&x));
        if let Some(lin) = detect_linearized(&x, cfg.pipeline.linearized_tol) {
            summary.scalar("linearized_omega", lin.omega);
        }
        Some(x)
    } else {
        None
    };
    let mut table = Table::create(
        &cfg.out,
        "harmonic_field.csv",
        &[
            "phi[turn]",
            "theta[turn]",
            "x[L]",
            "y[L]",
            "z[L]",
            "B_phi[1/L^2]",
            "B_theta[1/L^2]",
            "X_theta[1]",
        ],
        &mut summary,
    )?;
    let (np, nt) = cfg.grid_size();
    for i in 0..np {
        for j in 0..nt {
            let p = surface.point(i, j);
            let x = normalized.as_ref().map_or(f64::NAN, |x| x.x_theta[[i, j]]);
            table.row(&[
                i as f64 / np as f64,
                j as f64 / nt as f64,
                p[0],
                p[1],
                p[2],
                h.b.phi[[i, j]],
                h.b.theta[[i, j]],
                x,
            ])?;
        }
    }
    table.finish()?;
    Ok(summary)
}

pub fn poincare(cfg: &RunConfig) -> Result<Summary, CliError> {
    let mut summary = Summary::new("poincare", cfg);
    let st = BoundaryState::new(cfg.build_surface()?, cfg.pipeline)?;
    let disp = st.map.displacement();
    summary.scalar("rotation_number", st.map.rotation_number(DEFAULT_ITERATES));
    summary.scalar("max_abs_displacement", sup(&disp));
    summary.scalar("b_phi_min", st.harmonic.b_phi_min);
    summary.scalar("linearization_spread", linearization_spread(&st.normalized));
    let mut table = Table::create(
        &cfg.out,
        "poincare_map.csv",
        &["theta[turn]", "Pi[turn]", "Pi_minus_theta[turn]"],
        &mut summary,
    )?;
    for ((t, p), d) in st.map.thetas().iter().zip(st.map.samples()).zip(&disp) {
        table.row(&[*t, *p, *d])?;
    }
    table.finish()?;
    Ok(summary)
}

pub struct RotationArgs {
    pub omega: Option<f64>,
    pub coupling: f64,
    pub iterates: usize,
}

pub fn rotation(cfg: &RunConfig, args: &RotationArgs) -> Result<Summary, CliError> {
    let mut summary = Summary::new("rotation", cfg);
    if args.iterates == 0 {
        return Err(CliError::Config("iterates must be positive".into()));
    }
    summary.scalar("iterates", args.iterates as f64);
    let rho = match args.omega {
        Some(omega) => {
            let k = args.coupling;
            if k.abs() >= 1.0 {
                return Err(CliError::Config(format!("coupling |k| < 1 keeps the map invertible (got {k})")));
            }
            summary.scalar("omega", omega);
            summary.scalar("coupling", k);
            rotation_number_of(|x| x + omega + k * (2.0 * PI * x).sin() / (2.0 * PI), 0.0, args.iterates)
        }
        None => BoundaryState::new(cfg.build_surface()?, cfg.pipeline)?
            .map
            .rotation_number(args.iterates),
    };
    summary.scalar("rotation_number", rho);
    println!("rotation number {rho:.12}");
    Ok(summary)
}

pub struct ShapeArgs {
    pub deformations: Vec<DeformationSpec>,
    pub method: Method,
    pub fd: bool,
}

pub fn shape_derivative(cfg: &RunConfig, args: &ShapeArgs) -> Result<Summary, CliError> {
    let mut summary = Summary::new("shape-derivative", cfg);
    let st = BoundaryState::new(cfg.build_surface()?, cfg.pipeline)?;
    let specs = deformations(cfg, &args.deformations, 1);
    for (k, spec) in specs.iter().enumerate() {
        let r = st.shape_derivative_of(spec, args.method)?;
        summary.scalar(format!("pi_prime_sup_{k}"), sup(&r.pi_prime));
        let fd = if args.fd {
            if !spec.is_ambient() {
                return Err(CliError::Config(format!("finite differences need an ambient field (deformation {k})")));
            }
            let rep = fd_pi_prime(&st.surface, spec, &cfg.fd_steps, &cfg.pipeline, cfg.threads)?;
            summary.scalar(format!("fd_order_{k}"), rep.observed_order.unwrap_or(f64::NAN));
            summary.scalar(format!("fd_discrepancy_{k}"), rep.extrapolated_discrepancy(&r.pi_prime));
            Some(rep.richardson)
        } else {
            None
        };
        let name = format!("shape_derivative_{k}.csv");
        let mut header = vec!["theta[turn]", "pi_prime[turn]"];
        if fd.is_some() {
            header.extend(["fd_richardson[turn]", "difference[turn]"]);
        }
        let mut table = Table::create(&cfg.out, &name, &header, &mut summary)?;
        for (j, t) in thetas(r.pi_prime.len()).iter().enumerate() {
            let a = r.pi_prime[j];
            match &fd {
                Some(f) => table.row(&[*t, a, f[j], f[j] - a])?,
                None => table.row(&[*t, a])?,
            }
        }
        table.finish()?;
    }
    Ok(summary)
}


pub fn validate_axisym(cfg: &RunConfig) -> Result<Summary, CliError> {
    let t = &cfg.tolerances;
    if cfg.surface != SurfaceSource::Axisymmetric {
        return Err(CliError::Config("validate-axisym runs on the axisymmetric torus only".into()));
    }
    let mut summary = Summary::new("validate-axisym", cfg);
    let torus = cfg.torus();
    let grid = cfg.grid_size();
    let st = BoundaryState::new(torus.surface(grid)?, cfg.pipeline)?;
    let exact = torus.exact_field(grid);
    let scale = grid_sup(&exact.phi);
    let field_err = grid_sup(&(&st.harmonic.b.phi - &exact.phi)).max(grid_sup(&st.harmonic.b.theta)) / scale;
    summary.check_max("field_sup_relative_error", field_err, t.field);
    let n = st.map.len();
    summary.check_max("map_minus_identity", st.map.distance(&CircleMap::identity(n)), t.map_identity);
    summary.check_max("rotation_number", st.map.rotation_number(DEFAULT_ITERATES).abs(), t.rotation);

    let specs = deformations(cfg, &[], 5);
    let (mut general, mut reduced, mut agreement) = (0.0f64, 0.0f64, 0.0f64);
    for spec in &specs {
        let r = st.shape_derivative_of(spec, Method::Duhamel)?;
        let c = reduced_pi_prime(&torus, &r.uv.trace);
        general = general.max(sup(&r.pi_prime));
        reduced = reduced.max(sup(&c));
        agreement = agreement.max(sup_diff(&r.pi_prime, &c));
    }
    summary.check_max("pi_prime_general", general, t.pi_prime);
    summary.check_max("pi_prime_reduced", reduced, t.pi_prime);
    summary.check_max("pi_prime_agreement", agreement, t.agreement);

    let mut probes = vec![DeformationSpec::Constant { vector: [0.0, 0.0, 1.0] }];
    probes.extend(DeformationSpec::random_family(cfg.seed.wrapping_add(1), 3, 1.0));
    let tests = toroidal_averaging_test_functions(&torus, grid);
    let mut flux = 0.0f64;
    let mut averaging = vec![0.0f64; tests.len()];
    for spec in &probes {
        let r = st.shape_derivative_of(spec, Method::Duhamel)?;
        flux = flux.max(toroidal_flux_average(&st.operator, &r.uv));
        for (k, (_, f)) in tests.iter().enumerate() {
            averaging[k] = averaging[k].max(toroidal_averaging_residual(&st.metric, &r.uv.trace, f));
        }
    }
    summary.check_max("normal_derivative_toroidal_average", flux, t.flux_average);
    for ((name, _), v) in tests.iter().zip(&averaging) {
        summary.check_max(format!("averaging_residual[{name}]"), *v, t.averaging);
    }
    write_checks(cfg, &mut summary, "validate_axisym.csv")?;
    Ok(summary)
}

fn write_checks(cfg: &RunConfig, summary: &mut Summary, name: &str) -> Result<(), CliError> {
    let checks = summary.checks.clone();
    let mut table = Table::create(&cfg.out, name, &["check", "value", "bound", "kind", "pass"], summary)?;
    for c in checks {
        table.text_row(&[
            c.name,
            c.value.map_or("nan".into(), |v| format!("{v:e}")),
            format!("{:e}", c.tolerance),
            if c.lower_bound { "min" } else { "max" }.into(),
            c.pass.to_string(),
        ])?;
    }
    table.finish()?;
    Ok(())
}

pub fn validate_fd(cfg: &RunConfig, extra: &[DeformationSpec], count: usize) -> Result<Summary, CliError> {
    let t = &cfg.tolerances;
    let mut summary = Summary::new("validate-fd", cfg);
    let st = BoundaryState::new(cfg.build_surface()?, cfg.pipeline)?;
    let specs = deformations(cfg, extra, count);
    for (k, spec) in specs.iter().enumerate() {
        if !spec.is_ambient() {
            return Err(CliError::Config(format!("finite differences need an ambient field (deformation {k})")));
        }
        let analytic = st.shape_derivative_of(spec, Method::Duhamel)?.pi_prime;
        let rep = fd_pi_prime(&st.surface, spec, &cfg.fd_steps, &cfg.pipeline, cfg.threads)?;
        summary.scalar(format!("pi_prime_sup_{k}"), sup(&analytic));
        for (t, d) in rep.ts.iter().zip(rep.discrepancies(&analytic)) {
            summary.scalar(format!("discrepancy_{k}_t{t:e}"), d);
        }
        summary.check_min(format!("observed_order_{k}"), rep.observed_order.unwrap_or(f64::NAN), t.fd_order);
        summary.check_max(
            format!("extrapolated_discrepancy_{k}"),
            rep.extrapolated_discrepancy(&analytic),
            t.fd_discrepancy,
        );
        let mut header = vec!["theta[turn]".to_string(), "analytic[turn]".to_string()];
        header.extend(rep.ts.iter().map(|t| format!("fd_t{t:e}[turn]")));
        header.extend(["fd_richardson[turn]".to_string(), "difference[turn]".to_string()]);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut table = Table::create(&cfg.out, &format!("validate_fd_{k}.csv"), &header, &mut summary)?;
        for (j, t) in thetas(analytic.len()).iter().enumerate() {
            let mut row = vec![*t, analytic[j]];
            row.extend(rep.estimates.iter().map(|e| e[j]));
            row.extend([rep.richardson[j], rep.richardson[j] - analytic[j]]);
            table.row(&row)?;
        }
        table.finish()?;
    }
    write_checks(cfg, &mut summary, "validate_fd.csv")?;
    Ok(summary)
}

pub struct CohomologyArgs {
    pub omega: f64,
    pub mu: Option<Vec<f64>>,
    pub band: usize,
    pub c: f64,
    pub tau: f64,
    pub q_max: u64,
}

/// Flat unit-metric surface data; only `sqrt(g)` and the frame enter the
/// synthetic derivative.
fn flat_metric(n: usize) -> MetricData {
    let z = Grid::zeros((n, n));
    let o = Grid::ones((n, n));
    MetricData::from_parts(
        [o.clone(), z.clone(), z.clone()],
        [z.clone(), o.clone(), z.clone()],
        [z.clone(), z.clone(), o],
        (z.clone(), z.clone(), z),
    )
}

fn random_mu(seed: u64, band: usize) -> CircleFunction {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cos: Vec<f64> = (0..band).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sin: Vec<f64> = (0..band).map(|_| rng.random_range(-1.0..1.0)).collect();
    CircleFunction::from_cos_sin(0.0, &cos, &sin)
}

pub fn cohomology(cfg: &RunConfig, args: &CohomologyArgs) -> Result<Summary, CliError> {
    let t = &cfg.tolerances;
    let mut summary = Summary::new("cohomology", cfg);
    let witness = check_diophantine(args.omega, args.c, args.tau, args.q_max)?;
    summary.scalar("omega", args.omega);
    summary.scalar("discrete_constant", witness.discrete_c);
    summary.scalar("q_max", args.q_max as f64);
    let mu = match &args.mu {
        Some(v) => {
            if v.len() % 2 != 0 {
                return Err(CliError::Config("--mu takes cos/sin pairs a1,b1,a2,b2,...".into()));
            }
            let cos: Vec<f64> = v.iter().step_by(2).cloned().collect();
            let sin: Vec<f64> = v.iter().skip(1).step_by(2).cloned().collect();
            CircleFunction::from_cos_sin(0.0, &cos, &sin)
        }
        None => random_mu(cfg.seed, args.band),
    };
    let n = cfg.grid;
    if 2 * mu.band() >= n {
        return Err(CliError::Config(format!("grid {n} does not resolve band {}", mu.band())));
    }
    let phi = mu_to_phi(&mu, args.omega)?;
    let psi = solve_cohomological(&phi, args.omega, SMALL_DIVISOR_FLOOR)?;
    let averaged = averaging_operator(&phi, args.omega);
    summary.check_max("cohomological_residual", cohomological_residual(&psi, &phi, args.omega, n), t.cohomological);
    summary.check_max("averaging_round_trip", averaged.max_abs_diff(&mu), t.round_trip);

    let deformation = tangential_deformation_from_mu((n, n), &mu, &witness)?;
    let ops = SpectralOps::new(n, n);
    let chi = ops.from_fn(|p, t| 1.0 + 0.3 * (2.0 * PI * (p + 2.0 * t)).cos());
    let b = TangentField::new(chi.clone(), &chi * args.omega);
    let xp = x_prime_theta(&flat_metric(n), &b, &deformation, &Grid::zeros((n, n)))?;
    let linearized = pi_prime_linearized(args.omega, &xp);
    let normalized = NormalizedField::from_b(&b, &ops)?;
    let (_, flow) = poincare_map(&normalized, n, &PoincareOptions::default())?;
    let duhamel = pi_prime_duhamel(&flow, &transition_factor(&flow), &xp);
    let target = mu.sample(n);
    summary.check_max("synthetic_pi_prime_linearized", sup_diff(&linearized, &target), t.synthetic_pi_prime);
    summary.check_max("synthetic_pi_prime_duhamel", sup_diff(&duhamel, &target), t.synthetic_pi_prime);

    let mut table = Table::create(
        &cfg.out,
        "cohomology.csv",
        &[
            "theta[turn]",
            "mu[turn]",
            "averaged_phi[turn]",
            "pi_prime_linearized[turn]",
            "pi_prime_duhamel[turn]",
        ],
        &mut summary,
    )?;
    let avg = averaged.sample(n);
    for (j, t) in thetas(n).iter().enumerate() {
        table.row(&[*t, target[j], avg[j], linearized[j], duhamel[j]])?;
    }
    table.finish()?;
    Ok(summary)
}
