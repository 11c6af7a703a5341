//! Interior Laplace-Neumann solver on the toroidal domain.
//!
//! The potential is represented as a single-layer potential `u = S sigma`
//! with `G(x, y) = 1 / (4 pi |x - y|)`. Its interior normal derivative gives
//! the second-kind equation `sigma / 2 + K' sigma = g`, discretized by
//! Nyström collocation on the `(phi, theta)` grid.
//!
//! Weakly singular integrals use a floating partition of unity: the part of
//! the kernel multiplied by `1 - eta(rho / a)` is smooth and integrated with
//! the periodic trapezoid rule; the part multiplied by `eta` is integrated in
//! polar coordinates `(rho, alpha)` centred on the target, where the `rho`
//! Jacobian cancels the singularity. Densities and geometry at polar nodes
//! come from local tensor Lagrange interpolation on the grid. The polar node
//! pattern is the same for every target, so interpolation weights are built
//! once.
//!
//! The constant nullspace is removed by bordering the system with a
//! zero-mean row for `sigma` and a multiplier column.

use std::f64::consts::PI;

use faer::prelude::*;
use faer::linalg::solvers::PartialPivLu;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{gauss_legendre_unit, Grid};
use crate::surface::{at, dot, FourierSurface, MetricData, TangentField, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions {
    /// Radius of the polar patch in parameter units (period 1).
    pub patch_radius: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Points per direction of the Lagrange interpolation stencil.
    pub stencil: usize,
    pub condition_bound: f64,
    /// Maximum relative residual of the discrete linear system.
    pub solver_tol: f64,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            patch_radius: 0.3,
            radial_nodes: 24,
            angular_nodes: 48,
            stencil: 10,
            condition_bound: 1e10,
            solver_tol: 1e-10,
        }
    }
}

/// Partition-of-unity bump: 1 at 0, 0 from 1 on, smooth in between.
fn cutoff(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        (2.0 * (-1.0 / s).exp() / (s - 1.0)).exp()
    }
}

fn wrap_unit(x: f64) -> f64 {
    x - x.round()
}

#[derive(Debug, Clone)]
struct PatchNode {
    base_phi: i64,
    base_theta: i64,
    l_phi: Vec<f64>,
    l_theta: Vec<f64>,
    weight: f64,
}

fn lagrange_weights(u: f64, p: usize) -> (i64, Vec<f64>) {
    let base = u.floor() as i64 - (p as i64 / 2 - 1);
    let mut w = vec![0.0; p];
    for (a, wa) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        for b in 0..p {
            if b != a {
                v *= (u - (base + b as i64) as f64) / (a as f64 - b as f64);
            }
        }
        *wa = v;
    }
    (base, w)
}

fn patch_nodes(opts: &NeumannOptions, nphi: usize, ntheta: usize) -> Vec<PatchNode> {
    let (xr, wr) = gauss_legendre_unit(opts.radial_nodes);
    let a = opts.patch_radius;
    let dalpha = 2.0 * PI / opts.angular_nodes as f64;
    let mut nodes = Vec::with_capacity(opts.radial_nodes * opts.angular_nodes);
    for (x, w) in xr.iter().zip(&wr) {
        let rho = a * x;
        let radial = a * w * rho * cutoff(*x);
        for s in 0..opts.angular_nodes {
            let alpha = (s as f64 + 0.5) * dalpha;
            let (bp, lp) = lagrange_weights(rho * alpha.cos() * nphi as f64, opts.stencil);
            let (bt, lt) = lagrange_weights(rho * alpha.sin() * ntheta as f64, opts.stencil);
            nodes.push(PatchNode {
                base_phi: bp,
                base_theta: bt,
                l_phi: lp,
                l_theta: lt,
                weight: radial * dalpha,
            });
        }
    }
    nodes
}

/// Assembled and factorized boundary integral operator for one surface.
pub struct NeumannOperator {
    shape: (usize, usize),
    metric: MetricData,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    single_layer: Vec<f64>,
    flux: Vec<f64>,
    lu: PartialPivLu<f64>,
    area: f64,
    spacing: f64,
    condition_estimate: f64,
    opts: NeumannOptions,
}

impl std::fmt::Debug for NeumannOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NeumannOperator")
            .field("shape", &self.shape)
            .field("condition_estimate", &self.condition_estimate)
            .field("opts", &self.opts)
            .finish()
    }
}

/// A compatible Neumann datum on a given surface.
#[derive(Debug, Clone)]
pub struct NeumannProblem {
    datum: Grid,
}

impl NeumannProblem {
    /// Checks `|int g dA| <= 1e-10 * max|g| * area`.
    pub fn new(metric: &MetricData, datum: Grid) -> Result<Self> {
        let residual = metric.integrate(&datum).abs();
        let gmax = datum.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = 1e-10 * gmax * metric.area();
        if residual > bound {
            return Err(Error::IncompatibleDatum { residual, bound });
        }
        Ok(Self { datum })
    }

    /// Removes the weighted mean, absorbing flux defects due to quadrature.
    pub fn projected(metric: &MetricData, datum: Grid) -> Self {
        let mean = metric.integrate(&datum) / metric.area();
        Self {
            datum: datum - mean,
        }
    }

    pub fn datum(&self) -> &Grid {
        &self.datum
    }
}

#[derive(Debug, Clone)]
pub struct NeumannSolution {
    /// Single-layer density.
    pub density: Grid,
    /// Boundary trace with zero weighted mean.
    pub trace: Grid,
    /// Surface gradient of the trace.
    pub grad_tangential: TangentField,
    /// Constant removed from `S sigma` to normalize the trace.
    pub offset: f64,
    /// Relative residual of the bordered linear system.
    pub residual: f64,
}

impl NeumannOperator {
    pub fn new(surface: &FourierSurface, metric: &MetricData, opts: NeumannOptions) -> Result<Self> {
        let (np, nt) = surface.grid_size();
        if opts.stencil > np.min(nt) || opts.patch_radius >= 0.4 || opts.patch_radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature options {opts:?} do not fit a {np}x{nt} grid"
            )));
        }
        let n = np * nt;
        let points: Vec<Vec3> = (0..n).map(|q| surface.point(q / nt, q % nt)).collect();
        let normals: Vec<Vec3> = (0..n).map(|q| metric.normal_at(q / nt, q % nt)).collect();
        let weights: Vec<f64> = metric.area_weights().iter().cloned().collect();
        let geom: Vec<[f64; 4]> = (0..n)
            .map(|q| {
                let p = points[q];
                [p[0], p[1], p[2], metric.sqrt_g[[q / nt, q % nt]]]
            })
            .collect();
        let nodes = patch_nodes(&opts, np, nt);
        let a = opts.patch_radius;
        let dphi: Vec<f64> = (0..np).map(|k| wrap_unit(k as f64 / np as f64)).collect();
        let dtheta: Vec<f64> = (0..nt).map(|k| wrap_unit(k as f64 / nt as f64)).collect();
        let quarter_pi = 1.0 / (4.0 * PI);

        let mut single_layer = vec![0.0; n * n];
        let mut flux = vec![0.0; n * n];
        single_layer
            .par_chunks_mut(n)
            .zip(flux.par_chunks_mut(n))
            .enumerate()
            .for_each(|(p, (srow, krow))| {
                let (i, j) = (p / nt, p % nt);
                let x = points[p];
                let nx = normals[p];
                // smooth part
                for k in 0..np {
                    let fp = dphi[(k + np - i) % np];
                    for l in 0..nt {
                        let q = k * nt + l;
                        if q == p {
                            continue;
                        }
                        let ft = dtheta[(l + nt - j) % nt];
                        let rho = (fp * fp + ft * ft).sqrt();
                        let blend = 1.0 - cutoff(rho / a);
                        if blend == 0.0 {
                            continue;
                        }
                        let y = points[q];
                        let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                        let r2 = dot(d, d);
                        let r = r2.sqrt();
                        let w = blend * weights[q] * quarter_pi;
                        srow[q] += w / r;
                        krow[q] -= w * dot(d, nx) / (r2 * r);
                    }
                }
                // polar patch
                let wrap_i = |o: i64| (i as i64 + o).rem_euclid(np as i64) as usize;
                let wrap_j = |o: i64| (j as i64 + o).rem_euclid(nt as i64) as usize;
                let ps = opts.stencil;
                let mut cols = vec![0usize; ps];
                let mut rows = vec![0usize; ps];
                for node in &nodes {
                    for b in 0..ps {
                        cols[b] = wrap_j(node.base_theta + b as i64);
                    }
                    for a_ in 0..ps {
                        rows[a_] = wrap_i(node.base_phi + a_ as i64) * nt;
                    }
                    let mut g = [0.0; 4];
                    for a_ in 0..ps {
                        let mut acc = [0.0; 4];
                        let r0 = rows[a_];
                        for b in 0..ps {
                            let v = &geom[r0 + cols[b]];
                            let lb = node.l_theta[b];
                            acc[0] += lb * v[0];
                            acc[1] += lb * v[1];
                            acc[2] += lb * v[2];
                            acc[3] += lb * v[3];
                        }
                        let la = node.l_phi[a_];
                        for c in 0..4 {
                            g[c] += la * acc[c];
                        }
                    }
                    let d = [x[0] - g[0], x[1] - g[1], x[2] - g[2]];
                    let r2 = dot(d, d);
                    let r = r2.sqrt();
                    let w = node.weight * g[3] * quarter_pi;
                    let cs = w / r;
                    let ck = -w * dot(d, nx) / (r2 * r);
                    for a_ in 0..ps {
                        let la = node.l_phi[a_];
                        let (ss, kk) = (cs * la, ck * la);
                        let r0 = rows[a_];
                        for b in 0..ps {
                            let lb = node.l_theta[b];
                            let q = r0 + cols[b];
                            srow[q] += ss * lb;
                            krow[q] += kk * lb;
                        }
                    }
                }
                krow[p] += 0.5;
            });

        let area: f64 = weights.iter().sum();
        let scale = n as f64 / area;
        let bordered = Mat::<f64>::from_fn(n + 1, n + 1, |r, c| match (r < n, c < n) {
            (true, true) => flux[r * n + c],
            (true, false) => 1.0,
            (false, true) => weights[c] * scale,
            (false, false) => 0.0,
        });
        let lu = bordered.partial_piv_lu();
        drop(bordered);
        let u = lu.U();
        let mut umax = 0.0f64;
        let mut umin = f64::INFINITY;
        for k in 0..=n {
            let v = u[(k, k)].abs();
            umax = umax.max(v);
            umin = umin.min(v);
        }
        let condition_estimate = umax / umin;
        if !(condition_estimate <= opts.condition_bound) {
            return Err(Error::IllConditioned {
                estimate: condition_estimate,
                bound: opts.condition_bound,
            });
        }

        let mut spacing = 0.0f64;
        for i in 0..np {
            for j in 0..nt {
                let ep = at(&metric.e_phi, i, j);
                let et = at(&metric.e_theta, i, j);
                spacing = spacing.max(dot(ep, ep).sqrt() / np as f64);
                spacing = spacing.max(dot(et, et).sqrt() / nt as f64);
            }
        }

        Ok(Self {
            shape: (np, nt),
            metric: metric.clone(),
            points,
            weights,
            single_layer,
            flux,
            lu,
            area,
            spacing,
            condition_estimate,
            opts,
        })
    }

    pub fn options(&self) -> &NeumannOptions {
        &self.opts
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn metric(&self) -> &MetricData {
        &self.metric
    }

    fn n(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    fn matvec(matrix: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        matrix
            .par_chunks(n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn bordered_apply(&self, sol: &[f64]) -> Vec<f64> {
        let n = self.n();
        let scale = n as f64 / self.area;
        let (sigma, lambda) = (&sol[..n], sol[n]);
        let mut out = Self::matvec(&self.flux, sigma);
        out.iter_mut().for_each(|v| *v += lambda);
        out.push(sigma.iter().zip(&self.weights).map(|(s, w)| s * w * scale).sum());
        out
    }

    fn lu_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::<f64>::from_fn(rhs.len(), 1, |r, _| rhs[r]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|r| x[(r, 0)]).collect()
    }

    /// Solves the interior Neumann problem for a compatible datum.
    pub fn solve(&self, problem: &NeumannProblem) -> Result<NeumannSolution> {
        let n = self.n();
        let (np, nt) = self.shape;
        if problem.datum.dim() != self.shape {
            return Err(Error::Shape(format!(
                "datum {:?} on a {:?} operator",
                problem.datum.dim(),
                self.shape
            )));
        }
        let mut rhs: Vec<f64> = problem.datum.iter().cloned().collect();
        rhs.push(0.0);
        let bnorm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if bnorm == 0.0 {
            let zero = Grid::zeros(self.shape);
            return Ok(NeumannSolution {
                density: zero.clone(),
                trace: zero.clone(),
                grad_tangential: TangentField::zeros(self.shape),
                offset: 0.0,
                residual: 0.0,
            });
        }
        let mut sol = self.lu_solve(&rhs);
        let residual_of = |sol: &[f64]| -> (Vec<f64>, f64) {
            let r: Vec<f64> = self
                .bordered_apply(sol)
                .iter()
                .zip(&rhs)
                .map(|(a, b)| b - a)
                .collect();
            let m = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / bnorm;
            (r, m)
        };
        let (mut r, mut residual) = residual_of(&sol);
        // one step of iterative refinement
        if residual > 0.1 * self.opts.solver_tol {
            let dx = self.lu_solve(&r);
            sol.iter_mut().zip(&dx).for_each(|(s, d)| *s += d);
            (r, residual) = residual_of(&sol);
        }
        let _ = r;
        if residual > self.opts.solver_tol {
            return Err(Error::SolverResidual {
                residual,
                tol: self.opts.solver_tol,
            });
        }
        let sigma = &sol[..n];
        let raw = Self::matvec(&self.single_layer, sigma);
        let offset = raw.iter().zip(&self.weights).map(|(u, w)| u * w).sum::<f64>() / self.area;
        let trace = Grid::from_shape_vec((np, nt), raw.iter().map(|u| u - offset).collect())
            .expect("grid shape");
        let density = Grid::from_shape_vec((np, nt), sigma.to_vec()).expect("grid shape");
        let grad_tangential = self.metric.surface_gradient(&trace);
        Ok(NeumannSolution {
            density,
            trace,
            grad_tangential,
            offset,
            residual,
        })
    }

    /// Interior normal derivative `sigma / 2 + K' sigma` of the potential.
    pub fn normal_derivative(&self, solution: &NeumannSolution) -> Grid {
        let sigma: Vec<f64> = solution.density.iter().cloned().collect();
        let v = Self::matvec(&self.flux, &sigma);
        Grid::from_shape_vec(self.shape, v).expect("grid shape")
    }

    /// Potential at an interior point, consistent with the trace normalization.
    pub fn evaluate_interior(&self, solution: &NeumannSolution, x: Vec3) -> Result<f64> {
        let dmin = self
            .points
            .iter()
            .map(|y| {
                let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                dot(d, d)
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let required = 2.0 * self.spacing;
        if dmin < required {
            return Err(Error::TooCloseToBoundary {
                distance: dmin,
                required,
            });
        }
        let mut u = 0.0;
        for (q, y) in self.points.iter().enumerate() {
            let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            u += solution.density.as_slice().expect("contiguous")[q] * self.weights[q]
                / (4.0 * PI * dot(d, d).sqrt());
        }
        Ok(u - solution.offset)
    }
}

/// Solves one Neumann problem, assembling the operator on the fly.
pub fn solve_neumann(
    surface: &FourierSurface,
    metric: &MetricData,
    problem: &NeumannProblem,
    opts: NeumannOptions,
) -> Result<NeumannSolution> {
    NeumannOperator::new(surface, metric, opts)?.solve(problem)
}
