//! Closed forms for the circular-section axisymmetric torus and the checks
//! built on them: vanishing of the shape derivative, its reduced formula,
//! and the two averaging identities of the potential `u_V`.
//!
//! With `R(theta) = R_T + r_P cos(2 pi theta)`:
//! `sqrt(g) = 4 pi^2 r_P R`, `II = diag(-4 pi^2 R cos(2 pi theta), -4 pi^2 r_P)`,
//! `B = d_phi / (4 pi^2 R^2)`, and `Pi' = (R^2 / r_P^2) int_0^1 d_theta u_V dphi`.

use std::f64::consts::PI;

use crate::deformation::DeformationField;
use crate::error::{Error, Result};
use crate::neumann::{NeumannOperator, NeumannSolution};
use crate::spectral::{Grid, SpectralOps};
use crate::surface::{tori, FourierSurface, MetricData, TangentField, VecGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisymTorus {
    pub rt: f64,
    pub rp: f64,
}

impl AxisymTorus {
    pub fn new(rt: f64, rp: f64) -> Result<Self> {
        if !(rp > 0.0 && rp < rt) {
            return Err(Error::InvalidArgument(format!(
                "axisymmetric torus needs 0 < r_P < R_T (got R_T = {rt}, r_P = {rp})"
            )));
        }
        Ok(Self { rt, rp })
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.rt + self.rp * (2.0 * PI * theta).cos()
    }

    pub fn surface(&self, grid: (usize, usize)) -> Result<FourierSurface> {
        tori::axisymmetric(self.rt, self.rp, grid)
    }

    fn grid(&self, grid: (usize, usize), f: impl Fn(f64, f64) -> f64) -> Grid {
        SpectralOps::new(grid.0, grid.1).from_fn(f)
    }

    /// Closed-form metric data.
    pub fn exact_metric(&self, grid: (usize, usize)) -> MetricData {
        let (rt, rp) = (self.rt, self.rp);
        let tp = 2.0 * PI;
        let r = |t: f64| rt + rp * (tp * t).cos();
        let e_phi: VecGrid = [
            self.grid(grid, |p, t| -tp * r(t) * (tp * p).sin()),
            self.grid(grid, |p, t| tp * r(t) * (tp * p).cos()),
            Grid::zeros(grid),
        ];
        let e_theta: VecGrid = [
            self.grid(grid, |p, t| -tp * rp * (tp * t).sin() * (tp * p).cos()),
            self.grid(grid, |p, t| -tp * rp * (tp * t).sin() * (tp * p).sin()),
            self.grid(grid, |_, t| tp * rp * (tp * t).cos()),
        ];
        let normal: VecGrid = [
            self.grid(grid, |p, t| (tp * t).cos() * (tp * p).cos()),
            self.grid(grid, |p, t| (tp * t).cos() * (tp * p).sin()),
            self.grid(grid, |_, t| (tp * t).sin()),
        ];
        let ii = (
            self.grid(grid, |_, t| -tp * tp * r(t) * (tp * t).cos()),
            Grid::zeros(grid),
            Grid::from_elem(grid, -tp * tp * rp),
        );
        MetricData::from_parts(e_phi, e_theta, normal, ii)
    }

    /// `B = d_phi / (4 pi^2 R^2)`.
    pub fn exact_field(&self, grid: (usize, usize)) -> TangentField {
        TangentField::new(
            self.grid(grid, |_, t| 1.0 / (4.0 * PI * PI * self.radius(t).powi(2))),
            Grid::zeros(grid),
        )
    }

    /// `R(theta)^2 / r_P^2` on the grid.
    pub fn gain(&self, grid: (usize, usize)) -> Grid {
        self.grid(grid, |_, t| (self.radius(t) / self.rp).powi(2))
    }
}

pub fn exact_fields(torus: &AxisymTorus, grid: (usize, usize)) -> (MetricData, TangentField) {
    (torus.exact_metric(grid), torus.exact_field(grid))
}

/// Reduced formula `Pi'(theta_j) = (R^2 / r_P^2) int_0^1 d_theta u_V dphi`.
pub fn reduced_pi_prime(torus: &AxisymTorus, uv_trace: &Grid) -> Vec<f64> {
    let (np, nt) = uv_trace.dim();
    let du = SpectralOps::new(np, nt).d_theta(uv_trace);
    (0..nt)
        .map(|j| {
            let t = j as f64 / nt as f64;
            (torus.radius(t) / torus.rp).powi(2) * du.column(j).sum() / np as f64
        })
        .collect()
}

/// Independent assembly `(X')^theta = -d_phi V^theta + (R^2 / r_P^2) d_theta u_V`.
pub fn x_prime_axisym(torus: &AxisymTorus, deformation: &DeformationField, uv_trace: &Grid) -> Grid {
    let (np, nt) = uv_trace.dim();
    let ops = SpectralOps::new(np, nt);
    let gain = torus.gain((np, nt));
    &(&gain * &ops.d_theta(uv_trace)) - &ops.d_phi(&deformation.vg.theta)
}

/// `max_theta |int_0^1 d_n u_V dphi|` from the layer density.
pub fn toroidal_flux_average(op: &NeumannOperator, uv: &NeumannSolution) -> f64 {
    let flux = op.normal_derivative(uv);
    let np = flux.nrows() as f64;
    flux.columns()
        .into_iter()
        .map(|c| (c.sum() / np).abs())
        .fold(0.0, f64::max)
}

/// Norm floor for `u_V` in the averaging residual, so that a potential at
/// roundoff level (vanishing datum) is not normalized by its own noise.
pub const AVERAGING_NORM_FLOOR: f64 = 1e-8;

/// `|int f u - avg(f) int u| / (|f|_2 max(|u|_2, AVERAGING_NORM_FLOOR))` over the surface.
pub fn toroidal_averaging_residual(metric: &MetricData, uv_trace: &Grid, f: &Grid) -> f64 {
    let area = metric.area();
    let lhs = metric.integrate(&(f * uv_trace));
    let rhs = metric.integrate(f) / area * metric.integrate(uv_trace);
    let nf = metric.integrate(&(f * f)).sqrt();
    let nu = metric.integrate(&(uv_trace * uv_trace)).sqrt();
    if nf == 0.0 {
        return 0.0;
    }
    (lhs - rhs).abs() / (nf * nu.max(AVERAGING_NORM_FLOOR))
}

/// Peaked test function `f(theta)` with `4 pi^2 r_P R f` a normalized
/// periodized Gaussian of width `eps` centred at `theta0`.
pub fn peaked_test_function(torus: &AxisymTorus, theta0: f64, eps: f64, grid: (usize, usize)) -> Grid {
    let gauss = |t: f64| -> f64 {
        (-6..=6)
            .map(|k| {
                let d = t - theta0 - k as f64;
                (-d * d / (2.0 * eps * eps)).exp()
            })
            .sum()
    };
    // the Gaussian sum integrates to eps sqrt(2 pi) over one period
    let c = 1.0 / (eps * (2.0 * PI).sqrt());
    SpectralOps::new(grid.0, grid.1)
        .from_fn(|_, t| c * gauss(t) / (4.0 * PI * PI * torus.rp * torus.radius(t)))
}

/// Named theta-only test functions used for the averaging identity.
pub fn toroidal_averaging_test_functions(torus: &AxisymTorus, grid: (usize, usize)) -> Vec<(String, Grid)> {
    let ops = SpectralOps::new(grid.0, grid.1);
    let mut out = vec![
        ("cos(2 pi theta)".to_string(), ops.from_fn(|_, t| (2.0 * PI * t).cos())),
        ("sin(4 pi theta)".to_string(), ops.from_fn(|_, t| (4.0 * PI * t).sin())),
    ];
    for eps in [0.5, 0.2, 0.1] {
        out.push((format!("gaussian eps={eps}"), peaked_test_function(torus, 0.3, eps, grid)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::compute_metric;

    #[test]
    fn closed_form_values() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let (m, b) = exact_fields(&t, (16, 16));
        assert!((b.phi[[0, 0]] - 1.0 / (36.0 * PI * PI)).abs() < 1e-16);
        // theta = 1/4 is column 4
        assert!(m.ii_pp[[3, 4]].abs() < 1e-12);
        assert!((m.sqrt_g[[0, 8]] - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_spectral_metric() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let s = t.surface((32, 32)).unwrap();
        let m = compute_metric(&s);
        let e = t.exact_metric((32, 32));
        let close = |a: &Grid, b: &Grid| (a - b).iter().all(|v| v.abs() < 1e-10);
        assert!(close(&m.sqrt_g, &e.sqrt_g));
        assert!(close(&m.ii_pp, &e.ii_pp));
        assert!(close(&m.ii_pt, &e.ii_pt));
        assert!(close(&m.ii_tt, &e.ii_tt));
        for d in 0..3 {
            assert!(close(&m.normal[d], &e.normal[d]));
        }
    }

    #[test]
    fn invalid_torus() {
        assert!(AxisymTorus::new(1.0, 1.0).is_err());
        assert!(AxisymTorus::new(2.0, 0.0).is_err());
    }

    #[test]
    fn constant_potential_gives_zero_reduced_derivative() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let p = reduced_pi_prime(&t, &Grid::from_elem((16, 16), 3.0));
        assert!(p.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn peaked_functions_are_normalized() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let m = t.exact_metric((64, 64));
        for eps in [0.5, 0.2, 0.1] {
            let f = peaked_test_function(&t, 0.3, eps, (64, 64));
            assert!((m.integrate(&f) - 1.0).abs() < 1e-10, "{eps}");
        }
    }

    #[test]
    fn roundoff_potential_is_not_self_normalized() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let m = t.exact_metric((16, 16));
        let ops = SpectralOps::new(16, 16);
        let noise = ops.from_fn(|p, th| 1e-16 * (2.0 * PI * (3.0 * p + 5.0 * th)).sin() + 1e-16 * (2.0 * PI * th).cos());
        let f = ops.from_fn(|_, th| (2.0 * PI * th).cos());
        assert!(toroidal_averaging_residual(&m, &noise, &f) < 1e-7);
    }

    #[test]
    fn constant_test_function_has_zero_residual() {
        let t = AxisymTorus::new(2.0, 1.0).unwrap();
        let m = t.exact_metric((16, 16));
        let u = SpectralOps::new(16, 16).from_fn(|p, th| (2.0 * PI * (p + th)).sin());
        assert!(toroidal_averaging_residual(&m, &u, &Grid::from_elem((16, 16), 2.0)) < 1e-15);
    }
}
