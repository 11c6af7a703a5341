//! Toroidal boundary surfaces given by double Fourier series, and the
//! first/second order geometry derived from them.

use std::f64::consts::PI;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{bin, frequency, is_nyquist, Grid, SpectralOps};

pub type Vec3 = [f64; 3];
pub type VecGrid = [Grid; 3];

pub const MIN_GRID: usize = 16;

/// One term `cos * cos(2 pi (m phi + n theta)) + sin * sin(2 pi (m phi + n theta))`
/// of the Cartesian embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: i32,
    pub n: i32,
    pub cos: Vec3,
    pub sin: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOptions {
    /// Minimum axis clearance as a fraction of the mean cylindrical radius.
    pub axis_fraction: f64,
    /// Relative threshold below which `|E_phi x E_theta|` counts as degenerate.
    pub immersion_tol: f64,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            axis_fraction: 0.05,
            immersion_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FourierSurface {
    modes: Vec<FourierMode>,
    nphi: usize,
    ntheta: usize,
    points: VecGrid,
    axis_clearance: f64,
    delta_axis: f64,
    flipped: bool,
    ops: SpectralOps,
}

/// Checks grid-size preconditions shared by every grid-based constructor.
pub fn check_grid(nphi: usize, ntheta: usize) -> Result<()> {
    if nphi % 2 != 0 || ntheta % 2 != 0 || nphi < MIN_GRID || ntheta < MIN_GRID {
        return Err(Error::InvalidGrid {
            nphi,
            ntheta,
            min: MIN_GRID,
        });
    }
    Ok(())
}

/// Builds a surface with default options.
pub fn build_surface(modes: Vec<FourierMode>, grid: (usize, usize)) -> Result<FourierSurface> {
    FourierSurface::new(modes, grid, SurfaceOptions::default())
}

fn eval_modes_on_grid(modes: &[FourierMode], nphi: usize, ntheta: usize) -> VecGrid {
    let mut out = [
        Grid::zeros((nphi, ntheta)),
        Grid::zeros((nphi, ntheta)),
        Grid::zeros((nphi, ntheta)),
    ];
    for mode in modes {
        for i in 0..nphi {
            let a = 2.0 * PI * (mode.m as i64 * i as i64).rem_euclid(nphi as i64) as f64 / nphi as f64;
            for j in 0..ntheta {
                let b = 2.0 * PI * (mode.n as i64 * j as i64).rem_euclid(ntheta as i64) as f64
                    / ntheta as f64;
                let (s, c) = (a + b).sin_cos();
                for d in 0..3 {
                    out[d][[i, j]] += mode.cos[d] * c + mode.sin[d] * s;
                }
            }
        }
    }
    out
}

impl FourierSurface {
    pub fn new(modes: Vec<FourierMode>, grid: (usize, usize), opts: SurfaceOptions) -> Result<Self> {
        let (nphi, ntheta) = grid;
        check_grid(nphi, ntheta)?;
        for md in &modes {
            if md.cos.iter().chain(md.sin.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCoefficient { m: md.m, n: md.n });
            }
        }
        let ops = SpectralOps::new(nphi, ntheta);
        let mut points = eval_modes_on_grid(&modes, nphi, ntheta);
        let mut modes = modes;

        let (ep, et) = tangents(&ops, &points);
        let mut min_cross = f64::INFINITY;
        let mut scale = 0.0;
        let mut volume = 0.0;
        for i in 0..nphi {
            for j in 0..ntheta {
                let a = [ep[0][[i, j]], ep[1][[i, j]], ep[2][[i, j]]];
                let b = [et[0][[i, j]], et[1][[i, j]], et[2][[i, j]]];
                let c = cross(a, b);
                min_cross = min_cross.min(norm(c));
                scale += norm(a) * norm(b);
                let e = [points[0][[i, j]], points[1][[i, j]], points[2][[i, j]]];
                volume += dot(e, c);
            }
        }
        scale /= (nphi * ntheta) as f64;
        if !(min_cross > opts.immersion_tol * scale) {
            return Err(Error::ImmersionFailure { min: min_cross });
        }

        // Orientation: E_phi x E_theta must point outward, i.e. the enclosed
        // volume (1/3) \int E . N must come out positive.
        let flipped = volume < 0.0;
        if flipped {
            for md in &mut modes {
                md.n = -md.n;
            }
            points = eval_modes_on_grid(&modes, nphi, ntheta);
        }

        let rho = Zip::from(&points[0])
            .and(&points[1])
            .map_collect(|x, y| x.hypot(*y));
        let axis_clearance = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean_radius = rho.mean().unwrap_or(0.0);
        let delta_axis = opts.axis_fraction * mean_radius;
        if !(axis_clearance > delta_axis) {
            return Err(Error::AxisIntersection {
                clearance: axis_clearance,
                required: delta_axis,
            });
        }

        Ok(Self {
            modes,
            nphi,
            ntheta,
            points,
            axis_clearance,
            delta_axis,
            flipped,
            ops,
        })
    }

    /// Fits Fourier modes to grid samples of the embedding (spectral
    /// projection, Nyquist content dropped) and builds the surface.
    pub fn from_samples(points: &VecGrid, opts: SurfaceOptions) -> Result<Self> {
        let (nphi, ntheta) = points[0].dim();
        check_grid(nphi, ntheta)?;
        let ops = SpectralOps::new(nphi, ntheta);
        let coeffs: Vec<_> = points.iter().map(|g| ops.forward(g)).collect();
        let scale = points
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let mut modes = Vec::new();
        for i in 0..nphi {
            for j in 0..ntheta {
                if is_nyquist(i, nphi) || is_nyquist(j, ntheta) {
                    continue;
                }
                let (m, n) = (frequency(i, nphi), frequency(j, ntheta));
                let upper = m > 0 || (m == 0 && n >= 0);
                if !upper {
                    continue;
                }
                let factor = if m == 0 && n == 0 { 1.0 } else { 2.0 };
                let mut cos = [0.0; 3];
                let mut sin = [0.0; 3];
                for d in 0..3 {
                    let c = coeffs[d][[i, j]];
                    cos[d] = factor * c.re;
                    sin[d] = -factor * c.im;
                }
                let size = cos.iter().chain(sin.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
                if size > 1e-15 * scale {
                    modes.push(FourierMode {
                        m: m as i32,
                        n: n as i32,
                        cos,
                        sin,
                    });
                }
            }
        }
        Self::new(modes, (nphi, ntheta), opts)
    }

    /// Samples an analytic embedding on the grid and fits its modes.
    pub fn from_fn(
        grid: (usize, usize),
        opts: SurfaceOptions,
        f: impl Fn(f64, f64) -> Vec3,
    ) -> Result<Self> {
        let (nphi, ntheta) = grid;
        check_grid(nphi, ntheta)?;
        let mut pts = [
            Grid::zeros(grid),
            Grid::zeros(grid),
            Grid::zeros(grid),
        ];
        for i in 0..nphi {
            for j in 0..ntheta {
                let p = f(i as f64 / nphi as f64, j as f64 / ntheta as f64);
                for d in 0..3 {
                    pts[d][[i, j]] = p[d];
                }
            }
        }
        Self::from_samples(&pts, opts)
    }

    /// The same modes resampled on another grid.
    pub fn with_grid(&self, grid: (usize, usize)) -> Result<Self> {
        // Modes are already normalized; no second flip can occur.
        Self::new(
            self.modes.clone(),
            grid,
            SurfaceOptions {
                axis_fraction: self.delta_axis / self.mean_radius(),
                immersion_tol: SurfaceOptions::default().immersion_tol,
            },
        )
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn grid_size(&self) -> (usize, usize) {
        (self.nphi, self.ntheta)
    }

    pub fn points(&self) -> &VecGrid {
        &self.points
    }

    pub fn point(&self, i: usize, j: usize) -> Vec3 {
        [
            self.points[0][[i, j]],
            self.points[1][[i, j]],
            self.points[2][[i, j]],
        ]
    }

    pub fn axis_clearance(&self) -> f64 {
        self.axis_clearance
    }

    pub fn delta_axis(&self) -> f64 {
        self.delta_axis
    }

    pub fn mean_radius(&self) -> f64 {
        let n = (self.nphi * self.ntheta) as f64;
        Zip::from(&self.points[0])
            .and(&self.points[1])
            .fold(0.0, |a, x, y| a + x.hypot(*y))
            / n
    }

    /// Whether theta was reversed at construction to fix the orientation.
    pub fn orientation_flipped(&self) -> bool {
        self.flipped
    }

    pub fn spectral(&self) -> &SpectralOps {
        &self.ops
    }

    /// Exact evaluation of the embedding from its modes.
    pub fn evaluate(&self, phi: f64, theta: f64) -> Vec3 {
        let mut out = [0.0; 3];
        for md in &self.modes {
            let (s, c) = (2.0 * PI * (md.m as f64 * phi + md.n as f64 * theta)).sin_cos();
            for d in 0..3 {
                out[d] += md.cos[d] * c + md.sin[d] * s;
            }
        }
        out
    }

    /// Whether every mode fits below the Nyquist frequency of the grid.
    pub fn is_resolved(&self) -> bool {
        self.modes.iter().all(|md| {
            bin(md.m as i64, self.nphi).is_some_and(|k| !is_nyquist(k, self.nphi))
                && bin(md.n as i64, self.ntheta).is_some_and(|k| !is_nyquist(k, self.ntheta))
        })
    }
}

fn tangents(ops: &SpectralOps, points: &VecGrid) -> (VecGrid, VecGrid) {
    let (a0, b0) = ops.gradient(&points[0]);
    let (a1, b1) = ops.gradient(&points[1]);
    let (a2, b2) = ops.gradient(&points[2]);
    ([a0, a1, a2], [b0, b1, b2])
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn at(g: &VecGrid, i: usize, j: usize) -> Vec3 {
    [g[0][[i, j]], g[1][[i, j]], g[2][[i, j]]]
}

/// A tangent vector field stored by its contravariant `(phi, theta)` components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    pub phi: Grid,
    pub theta: Grid,
}

impl TangentField {
    pub fn new(phi: Grid, theta: Grid) -> Self {
        assert_eq!(phi.dim(), theta.dim(), "component grids must match");
        Self { phi, theta }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self::new(Grid::zeros(shape), Grid::zeros(shape))
    }

    pub fn coordinate_phi(shape: (usize, usize)) -> Self {
        Self::new(Grid::ones(shape), Grid::zeros(shape))
    }

    pub fn coordinate_theta(shape: (usize, usize)) -> Self {
        Self::new(Grid::zeros(shape), Grid::ones(shape))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.phi.dim()
    }

    pub fn scaled(&self, s: &Grid) -> Self {
        Self::new(&self.phi * s, &self.theta * s)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(&self.phi * s, &self.theta * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.phi + &other.phi, &self.theta + &other.theta)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.phi - &other.phi, &self.theta - &other.theta)
    }

    pub fn max_abs(&self) -> f64 {
        self.phi
            .iter()
            .chain(self.theta.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(self.theta.iter()).all(|v| v.is_finite())
    }
}

/// Metric, normal and second fundamental form on the surface grid.
#[derive(Debug, Clone)]
pub struct MetricData {
    pub e_phi: VecGrid,
    pub e_theta: VecGrid,
    pub g_pp: Grid,
    pub g_pt: Grid,
    pub g_tt: Grid,
    pub sqrt_g: Grid,
    pub normal: VecGrid,
    pub ii_pp: Grid,
    pub ii_pt: Grid,
    pub ii_tt: Grid,
    ops: SpectralOps,
}

pub fn compute_metric(surface: &FourierSurface) -> MetricData {
    let ops = surface.spectral().clone();
    let (e_phi, e_theta) = tangents(&ops, surface.points());
    let shape = surface.grid_size();
    let mut e_pp: Vec<Grid> = Vec::with_capacity(3);
    let mut e_pt: Vec<Grid> = Vec::with_capacity(3);
    let mut e_tt: Vec<Grid> = Vec::with_capacity(3);
    for d in 0..3 {
        let (pp, pt) = ops.gradient(&e_phi[d]);
        e_pp.push(pp);
        e_pt.push(pt);
        e_tt.push(ops.d_theta(&e_theta[d]));
    }
    let mut g_pp = Grid::zeros(shape);
    let mut g_pt = Grid::zeros(shape);
    let mut g_tt = Grid::zeros(shape);
    let mut sqrt_g = Grid::zeros(shape);
    let mut normal = [Grid::zeros(shape), Grid::zeros(shape), Grid::zeros(shape)];
    let mut ii_pp = Grid::zeros(shape);
    let mut ii_pt = Grid::zeros(shape);
    let mut ii_tt = Grid::zeros(shape);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let a = at(&e_phi, i, j);
            let b = at(&e_theta, i, j);
            let c = cross(a, b);
            let len = norm(c);
            let n = [c[0] / len, c[1] / len, c[2] / len];
            g_pp[[i, j]] = dot(a, a);
            g_pt[[i, j]] = dot(a, b);
            g_tt[[i, j]] = dot(b, b);
            sqrt_g[[i, j]] = len;
            for d in 0..3 {
                normal[d][[i, j]] = n[d];
            }
            let pp = [e_pp[0][[i, j]], e_pp[1][[i, j]], e_pp[2][[i, j]]];
            let pt = [e_pt[0][[i, j]], e_pt[1][[i, j]], e_pt[2][[i, j]]];
            let tt = [e_tt[0][[i, j]], e_tt[1][[i, j]], e_tt[2][[i, j]]];
            ii_pp[[i, j]] = dot(pp, n);
            ii_pt[[i, j]] = dot(pt, n);
            ii_tt[[i, j]] = dot(tt, n);
        }
    }
    MetricData {
        e_phi,
        e_theta,
        g_pp,
        g_pt,
        g_tt,
        sqrt_g,
        normal,
        ii_pp,
        ii_pt,
        ii_tt,
        ops,
    }
}

impl MetricData {
    /// Assembles metric data from explicit grids (closed-form or synthetic data).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        e_phi: VecGrid,
        e_theta: VecGrid,
        normal: VecGrid,
        ii: (Grid, Grid, Grid),
    ) -> Self {
        let shape = e_phi[0].dim();
        let ops = SpectralOps::new(shape.0, shape.1);
        let dotg = |a: &VecGrid, b: &VecGrid| &(&a[0] * &b[0]) + &(&(&a[1] * &b[1]) + &(&a[2] * &b[2]));
        let g_pp = dotg(&e_phi, &e_phi);
        let g_pt = dotg(&e_phi, &e_theta);
        let g_tt = dotg(&e_theta, &e_theta);
        let sqrt_g = Zip::from(&g_pp)
            .and(&g_pt)
            .and(&g_tt)
            .map_collect(|a, b, c| (a * c - b * b).sqrt());
        Self {
            e_phi,
            e_theta,
            g_pp,
            g_pt,
            g_tt,
            sqrt_g,
            normal,
            ii_pp: ii.0,
            ii_pt: ii.1,
            ii_tt: ii.2,
            ops,
        }
    }

    pub fn spectral(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn shape(&self) -> (usize, usize) {
        self.g_pp.dim()
    }

    /// Integral of `f` against the area form (periodic trapezoid rule).
    pub fn integrate(&self, f: &Grid) -> f64 {
        let (np, nt) = self.shape();
        Zip::from(f).and(&self.sqrt_g).fold(0.0, |a, f, s| a + f * s) / (np * nt) as f64
    }

    pub fn area(&self) -> f64 {
        let (np, nt) = self.shape();
        self.sqrt_g.sum() / (np * nt) as f64
    }

    /// Quadrature weights `sqrt(g) dphi dtheta` at the grid points.
    pub fn area_weights(&self) -> Grid {
        let (np, nt) = self.shape();
        &self.sqrt_g / (np * nt) as f64
    }

    /// Inverse metric components `(g^pp, g^pt, g^tt)`.
    pub fn inverse(&self) -> (Grid, Grid, Grid) {
        let det = &self.sqrt_g * &self.sqrt_g;
        (&self.g_tt / &det, -(&self.g_pt / &det), &self.g_pp / &det)
    }

    /// Surface gradient `g^{ij} d_j u` of a scalar grid.
    pub fn surface_gradient(&self, u: &Grid) -> TangentField {
        let (up, ut) = self.ops.gradient(u);
        self.raise(&up, &ut)
    }

    /// Raises a covector `(a_phi, a_theta)` to a tangent field.
    pub fn raise(&self, a_phi: &Grid, a_theta: &Grid) -> TangentField {
        let (ipp, ipt, itt) = self.inverse();
        TangentField::new(
            &(&ipp * a_phi) + &(&ipt * a_theta),
            &(&ipt * a_phi) + &(&itt * a_theta),
        )
    }

    /// Lowers a tangent field: `(u . E_phi, u . E_theta)`.
    pub fn lower(&self, u: &TangentField) -> (Grid, Grid) {
        (
            &(&self.g_pp * &u.phi) + &(&self.g_pt * &u.theta),
            &(&self.g_pt * &u.phi) + &(&self.g_tt * &u.theta),
        )
    }

    pub fn inner(&self, u: &TangentField, v: &TangentField) -> Grid {
        let (lp, lt) = self.lower(u);
        &(&lp * &v.phi) + &(&lt * &v.theta)
    }

    /// `n x u` for a tangent field, in components.
    pub fn perp(&self, u: &TangentField) -> TangentField {
        perp(u, self)
    }

    pub fn ii_bilinear(&self, u: &TangentField, v: &TangentField) -> Grid {
        ii_bilinear(self, u, v)
    }

    pub fn surface_divergence(&self, field: &TangentField) -> Grid {
        surface_divergence(self, field)
    }

    /// Ambient 3-vectors of a tangent field, `u^phi E_phi + u^theta E_theta`.
    pub fn to_ambient(&self, u: &TangentField) -> VecGrid {
        let c = |d: usize| &(&u.phi * &self.e_phi[d]) + &(&u.theta * &self.e_theta[d]);
        [c(0), c(1), c(2)]
    }

    pub fn normal_at(&self, i: usize, j: usize) -> Vec3 {
        at(&self.normal, i, j)
    }

    /// Splits an ambient vector grid into normal part `v . n` and tangential
    /// components from the 2x2 Gram system.
    pub fn split(&self, v: &VecGrid) -> Result<(Grid, TangentField)> {
        let shape = self.shape();
        let mut f = Grid::zeros(shape);
        let mut tp = Grid::zeros(shape);
        let mut tt = Grid::zeros(shape);
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let w = at(v, i, j);
                f[[i, j]] = dot(w, self.normal_at(i, j));
                let bp = dot(w, at(&self.e_phi, i, j));
                let bt = dot(w, at(&self.e_theta, i, j));
                let (a, b, c) = (self.g_pp[[i, j]], self.g_pt[[i, j]], self.g_tt[[i, j]]);
                let det = a * c - b * b;
                if !(det > 1e-14 * a * c) {
                    return Err(Error::SingularFrame { det });
                }
                tp[[i, j]] = (c * bp - b * bt) / det;
                tt[[i, j]] = (a * bt - b * bp) / det;
            }
        }
        Ok((f, TangentField::new(tp, tt)))
    }
}

/// Rotation by +90 degrees in each tangent plane, `u -> n x u`, using
/// `d_phi^perp = sqrt(g) grad theta` and `d_theta^perp = -sqrt(g) grad phi`.
pub fn perp(u: &TangentField, metric: &MetricData) -> TangentField {
    let s = &metric.sqrt_g;
    let phi = -(&(&(&metric.g_pt * &u.phi) + &(&metric.g_tt * &u.theta)) / s);
    let theta = &(&(&metric.g_pp * &u.phi) + &(&metric.g_pt * &u.theta)) / s;
    TangentField::new(phi, theta)
}

/// `II(u, v)` in the coordinate frame.
pub fn ii_bilinear(metric: &MetricData, u: &TangentField, v: &TangentField) -> Grid {
    let row_phi = &(&metric.ii_pp * &u.phi) + &(&metric.ii_pt * &u.theta);
    let row_theta = &(&metric.ii_pt * &u.phi) + &(&metric.ii_tt * &u.theta);
    &(&row_phi * &v.phi) + &(&row_theta * &v.theta)
}

/// `(1/sqrt g)(d_phi(sqrt g v^phi) + d_theta(sqrt g v^theta))`.
pub fn surface_divergence(metric: &MetricData, field: &TangentField) -> Grid {
    let ops = metric.spectral();
    let a = ops.d_phi(&(&metric.sqrt_g * &field.phi));
    let b = ops.d_theta(&(&metric.sqrt_g * &field.theta));
    &(&a + &b) / &metric.sqrt_g
}

/// Convenience constructors for the standard and perturbed tori.
pub mod tori {
    use super::*;

    /// Modes of the circular-section torus of major radius `rt` and minor radius `rp`.
    pub fn axisymmetric_modes(rt: f64, rp: f64) -> Vec<FourierMode> {
        vec![
            FourierMode { m: 1, n: 0, cos: [rt, 0.0, 0.0], sin: [0.0, rt, 0.0] },
            FourierMode { m: 1, n: 1, cos: [rp / 2.0, 0.0, 0.0], sin: [0.0, rp / 2.0, 0.0] },
            FourierMode { m: 1, n: -1, cos: [rp / 2.0, 0.0, 0.0], sin: [0.0, rp / 2.0, 0.0] },
            FourierMode { m: 0, n: 1, cos: [0.0; 3], sin: [0.0, 0.0, rp] },
        ]
    }

    pub fn axisymmetric(rt: f64, rp: f64, grid: (usize, usize)) -> Result<FourierSurface> {
        build_surface(axisymmetric_modes(rt, rp), grid)
    }

    /// Circular torus whose minor radius is modulated by
    /// `amplitude * cos(2 pi (m phi + n theta))`.
    pub fn perturbed(
        rt: f64,
        rp: f64,
        amplitude: f64,
        mode: (i32, i32),
        grid: (usize, usize),
    ) -> Result<FourierSurface> {
        let (m, n) = (mode.0 as f64, mode.1 as f64);
        FourierSurface::from_fn(grid, SurfaceOptions::default(), |p, t| {
            let r = rp + amplitude * (2.0 * PI * (m * p + n * t)).cos();
            let big = rt + r * (2.0 * PI * t).cos();
            [
                big * (2.0 * PI * p).cos(),
                big * (2.0 * PI * p).sin(),
                r * (2.0 * PI * t).sin(),
            ]
        })
    }
}
