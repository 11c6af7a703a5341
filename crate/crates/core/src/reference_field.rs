//! Closed-form curl- and divergence-free field circulating once around the z-axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::surface::{FourierSurface, MetricData, Vec3};

/// Field of a unit line current on the z-axis, normalized to unit circulation:
/// `B_w = (1 / 2 pi) (-y, x, 0) / (x^2 + y^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireField {
    /// Minimum admissible cylindrical radius of evaluation points.
    pub delta_axis: f64,
}

impl WireField {
    pub fn new(delta_axis: f64) -> Self {
        Self { delta_axis }
    }

    pub fn eval(&self, p: Vec3) -> Result<Vec3> {
        eval_wire(p, self.delta_axis)
    }
}

pub fn eval_wire(p: Vec3, delta_axis: f64) -> Result<Vec3> {
    let rho2 = p[0] * p[0] + p[1] * p[1];
    let rho = rho2.sqrt();
    if !(rho >= delta_axis) || rho == 0.0 {
        return Err(Error::AxisProximity {
            rho,
            delta: delta_axis,
        });
    }
    let s = 1.0 / (2.0 * PI * rho2);
    Ok([-p[1] * s, p[0] * s, 0.0])
}

/// Wire field sampled at the surface points.
pub fn wire_on_surface(surface: &FourierSurface) -> Result<[Grid; 3]> {
    let shape = surface.grid_size();
    let mut out = [Grid::zeros(shape), Grid::zeros(shape), Grid::zeros(shape)];
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let b = eval_wire(surface.point(i, j), surface.delta_axis())?;
            for d in 0..3 {
                out[d][[i, j]] = b[d];
            }
        }
    }
    Ok(out)
}

/// Normal trace `B_w . n` on the surface grid.
pub fn wire_normal_trace(surface: &FourierSurface, metric: &MetricData) -> Result<Grid> {
    let b = wire_on_surface(surface)?;
    Ok(&(&(&b[0] * &metric.normal[0]) + &(&b[1] * &metric.normal[1])) + &(&b[2] * &metric.normal[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{compute_metric, tori, FourierSurface, SurfaceOptions};
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_values() {
        let b = eval_wire([2.0, 0.0, 0.0], 0.1).unwrap();
        assert_abs_diff_eq!(b[0], 0.0);
        assert_abs_diff_eq!(b[1], 1.0 / (4.0 * PI), epsilon = 1e-16);
        let b = eval_wire([0.0, 3.0, 5.0], 0.1).unwrap();
        assert_abs_diff_eq!(b[0], -1.0 / (6.0 * PI), epsilon = 1e-16);
        assert_abs_diff_eq!(b[1], 0.0);
        assert_abs_diff_eq!(b[2], 0.0);
    }

    #[test]
    fn magnitude_is_inverse_radius() {
        let p = [0.3, -1.2, 0.7];
        let b = eval_wire(p, 0.1).unwrap();
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        assert_abs_diff_eq!(crate::surface::norm(b), 1.0 / (2.0 * PI * rho), epsilon = 1e-15);
    }

    #[test]
    fn axis_proximity_is_rejected() {
        assert!(matches!(
            eval_wire([0.01, 0.0, 1.0], 0.05),
            Err(Error::AxisProximity { .. })
        ));
    }

    #[test]
    fn unit_circulation_on_a_circle() {
        let n = 256;
        let mut c = 0.0;
        for k in 0..n {
            let a = 2.0 * PI * k as f64 / n as f64;
            let b = eval_wire([2.0 * a.cos(), 2.0 * a.sin(), 0.0], 0.1).unwrap();
            let dl = [-2.0 * a.sin(), 2.0 * a.cos(), 0.0];
            c += (b[0] * dl[0] + b[1] * dl[1]) * 2.0 * PI / n as f64;
        }
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn finite_difference_curl_and_divergence_vanish() {
        let h = 1e-5;
        let f = |p: Vec3| eval_wire(p, 0.01).unwrap();
        for p in [[1.3, 0.4, -0.2], [-0.7, 2.1, 1.5], [0.5, -0.5, 0.0]] {
            let mut jac = [[0.0; 3]; 3];
            for k in 0..3 {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let (fa, fb) = (f(a), f(b));
                for d in 0..3 {
                    jac[d][k] = (fa[d] - fb[d]) / (2.0 * h);
                }
            }
            let div = jac[0][0] + jac[1][1] + jac[2][2];
            let curl = [
                jac[2][1] - jac[1][2],
                jac[0][2] - jac[2][0],
                jac[1][0] - jac[0][1],
            ];
            assert!(div.abs() < 1e-8);
            assert!(curl.iter().all(|c| c.abs() < 1e-8));
        }
    }

    #[test]
    fn trace_vanishes_on_axisymmetric_torus() {
        let s = tori::axisymmetric(2.0, 1.0, (32, 32)).unwrap();
        let m = compute_metric(&s);
        let t = wire_normal_trace(&s, &m).unwrap();
        assert!(t.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn trace_has_zero_flux_on_perturbed_torus() {
        let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (64, 64)).unwrap();
        let m = compute_metric(&s);
        let t = wire_normal_trace(&s, &m).unwrap();
        assert!(t.iter().any(|v| v.abs() > 1e-3));
        assert!(m.integrate(&t).abs() < 1e-10);
    }

    #[test]
    fn trace_is_invariant_under_vertical_translation() {
        let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (32, 32)).unwrap();
        let shifted = FourierSurface::from_fn((32, 32), SurfaceOptions::default(), |p, t| {
            let e = s.evaluate(p, t);
            [e[0], e[1], e[2] + 0.7]
        })
        .unwrap();
        let a = wire_normal_trace(&s, &compute_metric(&s)).unwrap();
        let b = wire_normal_trace(&shifted, &compute_metric(&shifted)).unwrap();
        assert!((&a - &b).iter().all(|v| v.abs() < 1e-12));
    }
}
