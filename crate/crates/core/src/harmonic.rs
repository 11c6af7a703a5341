//! Boundary restriction of the unit-circulation harmonic field and its
//! toroidal normalization.
//!
//! The field is built as `B = B_w + grad chi`, where `B_w` is the wire field
//! and `chi` solves the Neumann problem with datum `-B_w . n`, so `B` is
//! tangent to the boundary, curl-free and divergence-free, and keeps the unit
//! circulation of `B_w` around the axis.

use crate::error::{Error, Result};
use crate::neumann::{NeumannOperator, NeumannProblem, NeumannSolution};
use crate::reference_field::{wire_normal_trace, wire_on_surface};
use crate::spectral::{Grid, SpectralOps};
use crate::surface::{FourierSurface, MetricData, TangentField};

/// Allowed deviation of the toroidal circulation from 1.
pub const CIRCULATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HarmonicBoundaryField {
    pub b: TangentField,
    pub chi_correction: NeumannSolution,
    pub b_phi_min: f64,
    /// Circulation along each `theta = theta_j` coordinate loop.
    pub circulation: Vec<f64>,
    ops: SpectralOps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub b_phi_min: f64,
    pub admissible: bool,
    /// Grid index `(i, j)` of the minimum.
    pub index: (usize, usize),
    /// Angles `(phi, theta)` of the minimum.
    pub location: (f64, f64),
}

/// `X = B / B^phi`; only the theta component is stored since `X^phi = 1`.
#[derive(Debug, Clone)]
pub struct NormalizedField {
    pub x_theta: Grid,
    pub dx_theta_dtheta: Grid,
    /// `B^phi`, kept so that linearized fields can report `chi`.
    pub b_phi: Grid,
}

#[derive(Debug, Clone)]
pub struct Linearized {
    pub omega: f64,
    pub chi: Grid,
}

/// Line integrals `int_0^1 B . E_phi dphi` along the theta rows.
pub fn circulation(metric: &MetricData, b: &TangentField) -> Vec<f64> {
    let (lp, _) = metric.lower(b);
    let np = lp.nrows() as f64;
    lp.columns().into_iter().map(|c| c.sum() / np).collect()
}

impl HarmonicBoundaryField {
    /// Wraps a given boundary field (closed-form or synthetic).
    pub fn from_field(metric: &MetricData, b: TangentField, chi_correction: NeumannSolution) -> Self {
        let b_phi_min = b.phi.iter().cloned().fold(f64::INFINITY, f64::min);
        let circulation = circulation(metric, &b);
        Self {
            b,
            chi_correction,
            b_phi_min,
            circulation,
            ops: metric.spectral().clone(),
        }
    }

    pub fn spectral(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn max_circulation_error(&self) -> f64 {
        self.circulation
            .iter()
            .map(|c| (c - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Assembles `B|boundary` using an operator already built for this surface.
pub fn compute_harmonic(
    surface: &FourierSurface,
    metric: &MetricData,
    op: &NeumannOperator,
) -> Result<HarmonicBoundaryField> {
    let trace = wire_normal_trace(surface, metric)?;
    let chi = op.solve(&NeumannProblem::projected(metric, -trace))?;
    let bw = wire_on_surface(surface)?;
    let proj = |e: &[Grid; 3]| &(&(&bw[0] * &e[0]) + &(&bw[1] * &e[1])) + &(&bw[2] * &e[2]);
    let wire = metric.raise(&proj(&metric.e_phi), &proj(&metric.e_theta));
    let b = wire.add(&chi.grad_tangential);
    let field = HarmonicBoundaryField::from_field(metric, b, chi);
    let drift = field
        .circulation
        .iter()
        .cloned()
        .max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
        .unwrap_or(1.0);
    if !((drift - 1.0).abs() <= CIRCULATION_TOL) {
        return Err(Error::CirculationDrift {
            value: drift,
            tol: CIRCULATION_TOL,
        });
    }
    Ok(field)
}

pub fn check_admissible(field: &HarmonicBoundaryField) -> AdmissibilityReport {
    let (np, nt) = field.b.shape();
    let mut index = (0, 0);
    let mut min = f64::INFINITY;
    for ((i, j), v) in field.b.phi.indexed_iter() {
        if *v < min {
            min = *v;
            index = (i, j);
        }
    }
    AdmissibilityReport {
        b_phi_min: min,
        admissible: min > 0.0,
        index,
        location: (index.0 as f64 / np as f64, index.1 as f64 / nt as f64),
    }
}

impl NormalizedField {
    /// `X^theta = B^theta / B^phi` for a transverse field.
    pub fn from_b(b: &TangentField, ops: &SpectralOps) -> Result<Self> {
        let min = b.phi.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NotTransverse { min });
        }
        let x_theta = &b.theta / &b.phi;
        Ok(Self::from_x_theta(x_theta, b.phi.clone(), ops))
    }

    pub fn from_x_theta(x_theta: Grid, b_phi: Grid, ops: &SpectralOps) -> Self {
        let dx_theta_dtheta = ops.d_theta(&x_theta);
        Self {
            x_theta,
            dx_theta_dtheta,
            b_phi,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x_theta.dim()
    }
}

pub fn normalize_toroidal(field: &HarmonicBoundaryField) -> Result<NormalizedField> {
    NormalizedField::from_b(&field.b, &field.ops)
}

/// Detects `B = chi (d_phi + omega d_theta)`: returns `omega = mean X^theta`
/// and `chi = B^phi` when `sup |X^theta - omega| <= tol`.
pub fn detect_linearized(normalized: &NormalizedField, tol: f64) -> Option<Linearized> {
    let omega = normalized.x_theta.mean()?;
    let spread = normalized
        .x_theta
        .iter()
        .map(|x| (x - omega).abs())
        .fold(0.0, f64::max);
    (spread <= tol).then(|| Linearized {
        omega,
        chi: normalized.b_phi.clone(),
    })
}

/// Sup deviation of `X^theta` from its mean.
pub fn linearization_spread(normalized: &NormalizedField) -> f64 {
    let omega = normalized.x_theta.mean().unwrap_or(0.0);
    normalized
        .x_theta
        .iter()
        .map(|x| (x - omega).abs())
        .fold(0.0, f64::max)
}
