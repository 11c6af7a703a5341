//! Poincaré return map of the normalized field, partial flows, Duhamel
//! transition factors and rotation numbers.
//!
//! Trajectories solve `dtheta/dphi = X^theta(phi, theta)` for `phi` in
//! `[0, 1]`, with `X^theta` interpolated trigonometrically in both angles.
//! The lift is accumulated continuously, which realizes the homotopy of the
//! return map to the identity. Alongside each trajectory the integrator
//! carries `L(phi) = int_0^phi d_theta X^theta` so that transition factors
//! `T(phi) = exp(L(1) - L(phi))` come for free.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::harmonic::NormalizedField;
use crate::ode::{integrate_to, OdeOptions};
use crate::spectral::{gauss_legendre_unit, CircleSeries, Grid, SpectralOps};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareOptions {
    pub ode: OdeOptions,
    /// Number of Gauss-Legendre panels in phi; `None` picks `max(4, nphi / 4)`.
    pub panels: Option<usize>,
    pub nodes_per_panel: usize,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            panels: None,
            nodes_per_panel: 8,
        }
    }
}

/// Sampled circle diffeomorphism: lift values `F(theta_j)` at `theta_j = j / n`.
#[derive(Debug, Clone)]
pub struct CircleMap {
    samples: Vec<f64>,
    displacement: CircleSeries,
}

impl CircleMap {
    /// Checks finiteness and strict monotonicity of the lift (including the
    /// wrap-around `F(theta_0) + 1`).
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument("a circle map needs at least two samples".into()));
        }
        for (k, v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NotMonotone { index: k });
            }
        }
        for k in 0..n {
            let next = if k + 1 < n { samples[k + 1] } else { samples[0] + 1.0 };
            if !(next > samples[k]) {
                return Err(Error::NotMonotone { index: k });
            }
        }
        let disp: Vec<f64> = samples
            .iter()
            .enumerate()
            .map(|(j, v)| v - j as f64 / n as f64)
            .collect();
        Ok(Self {
            samples,
            displacement: CircleSeries::from_samples(&disp),
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::rotation(n, 0.0)
    }

    pub fn rotation(n: usize, omega: f64) -> Self {
        Self::from_fn(n, |t| t + omega).expect("rotations are monotone")
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn thetas(&self) -> Vec<f64> {
        let n = self.samples.len();
        (0..n).map(|j| j as f64 / n as f64).collect()
    }

    /// `F(theta) - theta` at the samples.
    pub fn displacement(&self) -> Vec<f64> {
        let n = self.samples.len();
        self.samples
            .iter()
            .enumerate()
            .map(|(j, v)| v - j as f64 / n as f64)
            .collect()
    }

    /// Lift evaluated anywhere through the trigonometric interpolant of the
    /// periodic displacement.
    pub fn eval(&self, x: f64) -> f64 {
        x + self.displacement.eval(x)
    }

    /// Samples of `self o other`.
    pub fn compose(&self, other: &CircleMap) -> Result<CircleMap> {
        Self::from_samples(other.samples.iter().map(|&y| self.eval(y)).collect())
    }

    /// Sup distance between the lifts at common samples.
    pub fn distance(&self, other: &CircleMap) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn rotation_number(&self, iterates: usize) -> f64 {
        rotation_number_of(|x| self.eval(x), 0.0, iterates)
    }
}

/// Default iterate count of the rotation number estimator.
pub const DEFAULT_ITERATES: usize = 1 << 14;

/// Hann-weighted Birkhoff average of the increments `F^{k+1}(x0) - F^k(x0)`.
pub fn rotation_number_of(lift: impl Fn(f64) -> f64, x0: f64, iterates: usize) -> f64 {
    let n = iterates.max(1);
    let mut x = x0;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let y = lift(x);
        let s = (PI * (k as f64 + 0.5) / n as f64).sin();
        let w = s * s;
        num += w * (y - x);
        den += w;
        // keep the orbit near the fundamental domain; increments are unaffected
        x = y - y.floor();
    }
    num / den
}

pub fn rotation_number(map: &CircleMap, iterates: usize) -> f64 {
    map.rotation_number(iterates)
}

/// Partial flows `Pi^phi(theta_k)` at the checkpoint levels `phis`.
#[derive(Debug, Clone)]
pub struct FlowTable {
    pub phis: Vec<f64>,
    /// Quadrature weights on `[0, 1]` attached to `phis` (zero at the endpoints).
    pub weights: Vec<f64>,
    pub theta0: Vec<f64>,
    /// `lift[c][k] = Pi^{phis[c]}(theta0[k])`.
    pub lift: Vec<Vec<f64>>,
    /// `log_jac[c][k] = int_0^{phis[c]} d_theta X^theta` along the trajectory.
    pub log_jac: Vec<Vec<f64>>,
}

impl FlowTable {
    pub fn final_lift(&self) -> &[f64] {
        &self.lift[self.lift.len() - 1]
    }
}

/// Checkpoint levels: 0, composite Gauss-Legendre nodes, 1.
pub fn checkpoints(panels: usize, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre_unit(nodes);
    let mut phis = vec![0.0];
    let mut weights = vec![0.0];
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            phis.push((p as f64 + xi) * h);
            weights.push(wi * h);
        }
    }
    phis.push(1.0);
    weights.push(0.0);
    (phis, weights)
}

struct FieldInterp {
    x: crate::spectral::TorusInterpolant,
    dx: crate::spectral::TorusInterpolant,
}

impl FieldInterp {
    fn new(normalized: &NormalizedField) -> Self {
        let (np, nt) = normalized.shape();
        let ops = SpectralOps::new(np, nt);
        Self {
            x: ops.interpolant(&normalized.x_theta),
            dx: ops.interpolant(&normalized.dx_theta_dtheta),
        }
    }

    fn rhs(&self, phi: f64, y: &[f64], dy: &mut [f64]) {
        let m = y.len() / 2;
        let rx = self.x.row_at(phi);
        let rd = self.dx.row_at(phi);
        for k in 0..m {
            dy[k] = rx.eval(y[k]);
            dy[m + k] = rd.eval(y[k]);
        }
    }
}

fn section(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / n as f64).collect()
}

/// Integrates all section trajectories over `[0, 1]`.
pub fn poincare_map(
    normalized: &NormalizedField,
    section_samples: usize,
    opts: &PoincareOptions,
) -> Result<(CircleMap, FlowTable)> {
    if !normalized.x_theta.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("X^theta has non-finite entries".into()));
    }
    let (np, _) = normalized.shape();
    let panels = opts.panels.unwrap_or((np / 4).max(4));
    let (phis, weights) = checkpoints(panels, opts.nodes_per_panel);
    let theta0 = section(section_samples);
    let interp = FieldInterp::new(normalized);
    let mut y0 = theta0.clone();
    y0.extend(std::iter::repeat_n(0.0, section_samples));
    let states = integrate_to(|t, y, dy| interp.rhs(t, y, dy), &y0, &phis, &opts.ode)?;
    let m = section_samples;
    let lift: Vec<Vec<f64>> = states.iter().map(|s| s[..m].to_vec()).collect();
    let log_jac: Vec<Vec<f64>> = states.iter().map(|s| s[m..].to_vec()).collect();
    let map = CircleMap::from_samples(lift[lift.len() - 1].clone())?;
    Ok((
        map,
        FlowTable {
            phis,
            weights,
            theta0,
            lift,
            log_jac,
        },
    ))
}

/// Integrates the given initial angles from `phi0` to `phi1` only.
pub fn flow_segment(
    normalized: &NormalizedField,
    start: &[f64],
    phi0: f64,
    phi1: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>> {
    let interp = FieldInterp::new(normalized);
    let mut y0 = start.to_vec();
    y0.extend(std::iter::repeat_n(0.0, start.len()));
    let states = integrate_to(|t, y, dy| interp.rhs(t, y, dy), &y0, &[phi0, phi1], opts)?;
    Ok(states[1][..start.len()].to_vec())
}

/// `T(phi_c, theta_k) = exp(int_{phi_c}^1 d_theta X^theta)` on the checkpoint grid.
pub fn transition_factor(flow: &FlowTable) -> Grid {
    let nc = flow.phis.len();
    let m = flow.theta0.len();
    let end = &flow.log_jac[nc - 1];
    Grid::from_shape_fn((nc, m), |(c, k)| (end[k] - flow.log_jac[c][k]).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, f: impl Fn(f64, f64) -> f64) -> NormalizedField {
        let ops = SpectralOps::new(n, n);
        NormalizedField::from_x_theta(ops.from_fn(f), Grid::ones((n, n)), &ops)
    }

    #[test]
    fn constant_field_is_a_rotation() {
        let x = synthetic(16, |_, _| 0.3);
        let (map, flow) = poincare_map(&x, 16, &PoincareOptions::default()).unwrap();
        for (j, v) in map.samples().iter().enumerate() {
            assert!((v - j as f64 / 16.0 - 0.3).abs() < 1e-12);
        }
        let t = transition_factor(&flow);
        assert!(t.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_average_commuting_field_returns_identity() {
        let x = synthetic(16, |p, _| 0.2 * (2.0 * PI * p).cos());
        let (map, flow) = poincare_map(&x, 16, &PoincareOptions::default()).unwrap();
        assert!(map.distance(&CircleMap::identity(16)) < 1e-12);
        // partial flow follows the closed-form primitive
        for (c, phi) in flow.phis.iter().enumerate() {
            let shift = 0.2 * (2.0 * PI * phi).sin() / (2.0 * PI);
            assert!((flow.lift[c][5] - 5.0 / 16.0 - shift).abs() < 1e-11);
        }
    }

    #[test]
    fn transition_factor_matches_variational_equation() {
        let eps = 0.15;
        let x = synthetic(32, |_, t| eps * (2.0 * PI * t).sin());
        let (_, flow) = poincare_map(&x, 8, &PoincareOptions::default()).unwrap();
        let t = transition_factor(&flow);
        for k in 0..8 {
            // RK4 on theta and the variation v with v(0) = 1, so T(0) = v(1)
            let (mut th, mut v) = (k as f64 / 8.0, 1.0);
            let steps = 20000;
            let h = 1.0 / steps as f64;
            let f = |th: f64, v: f64| (eps * (2.0 * PI * th).sin(), 2.0 * PI * eps * (2.0 * PI * th).cos() * v);
            for _ in 0..steps {
                let k1 = f(th, v);
                let k2 = f(th + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
                let k3 = f(th + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
                let k4 = f(th + h * k3.0, v + h * k3.1);
                th += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
            assert!((t[[0, k]] - v).abs() < 1e-10, "{} vs {}", t[[0, k]], v);
            assert!((t[[t.nrows() - 1, k]] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn flow_property_on_random_checkpoints() {
        let x = synthetic(16, |p, t| 0.1 * (2.0 * PI * (p + 2.0 * t)).sin() + 0.05 * (2.0 * PI * t).cos() + 0.2);
        let (_, flow) = poincare_map(&x, 16, &PoincareOptions::default()).unwrap();
        let (c1, c2) = (7, 30);
        let direct = flow_segment(&x, &flow.lift[c1], flow.phis[c1], flow.phis[c2], &OdeOptions::default()).unwrap();
        for (a, b) in direct.iter().zip(&flow.lift[c2]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn checkpoint_weights_integrate_polynomials() {
        let (p, w) = checkpoints(4, 8);
        let s: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-14);
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 1.0);
    }

    #[test]
    fn rotation_numbers() {
        let omega = (5f64.sqrt() - 1.0) / 2.0;
        assert!((CircleMap::rotation(16, omega).rotation_number(1 << 14) - omega).abs() < 1e-10);
        assert!(CircleMap::identity(16).rotation_number(1 << 14).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_lift_is_rejected() {
        let r = CircleMap::from_samples(vec![0.0, 0.3, 0.2, 0.9]);
        assert!(matches!(r, Err(Error::NotMonotone { index: 1 })));
    }

    #[test]
    fn composition_of_rotations() {
        let a = CircleMap::rotation(16, 0.1);
        let b = CircleMap::rotation(16, 0.25);
        let c = a.compose(&b).unwrap();
        assert!(c.distance(&CircleMap::rotation(16, 0.35)) < 1e-14);
    }
}
