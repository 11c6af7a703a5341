//! First variation of the Poincaré map under a boundary deformation.
//!
//! For `V = f n + V_Gamma` the variation of the normalized field is
//!
//! ```text
//! (X')^theta = [2 f II(B, B_perp) + B_perp . [V_Gamma, B] + B_perp . grad u_V]
//!              / (sqrt(g) (B^phi)^2)
//! ```
//!
//! where `u_V` is harmonic inside with normal derivative `div(B f)`. With
//! `B_perp . Y = sqrt(g) (B^phi Y^theta - B^theta Y^phi)` the bracket term is
//! metric-free. The variation of the map itself follows from Duhamel's
//! formula along the partial flows, or in closed form per Fourier mode when
//! `X^theta` is constant.

use num_complex::Complex64;

use crate::cohomology::averaging_factor;
use crate::deformation::DeformationField;
use crate::error::{Error, Result};
use crate::harmonic::{detect_linearized, NormalizedField};
use crate::neumann::{NeumannOperator, NeumannProblem, NeumannSolution};
use crate::poincare::FlowTable;
use crate::spectral::{frequency, is_nyquist, Grid, SpectralOps};
use crate::surface::{MetricData, TangentField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Duhamel,
    Linearized,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Duhamel => "duhamel",
            Method::Linearized => "linearized",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapeDerivativeResult {
    pub uv: NeumannSolution,
    pub x_prime_theta: Grid,
    /// `Pi'` at the section samples.
    pub pi_prime: Vec<f64>,
    pub method: Method,
}

/// The three contributions to `(X')^theta`.
#[derive(Debug, Clone)]
pub struct XPrimeTerms {
    pub normal: Grid,
    pub bracket: Grid,
    pub gradient: Grid,
}

impl XPrimeTerms {
    pub fn total(&self) -> Grid {
        &(&self.normal + &self.bracket) + &self.gradient
    }
}

/// Neumann datum `div(B f)` of the potential `u_V`.
pub fn uv_datum(metric: &MetricData, b: &TangentField, f: &Grid) -> Grid {
    metric.surface_divergence(&b.scaled(f))
}

/// Solves for `u_V`; the datum is projected onto zero weighted mean, which it
/// has analytically.
pub fn solve_uv(op: &NeumannOperator, b: &TangentField, deformation: &DeformationField) -> Result<NeumannSolution> {
    let metric = op.metric();
    let g = uv_datum(metric, b, &deformation.f);
    op.solve(&NeumannProblem::projected(metric, g))
}

/// Coordinate Lie bracket `[v, w]^i = v^j d_j w^i - w^j d_j v^i`.
pub fn lie_bracket(ops: &SpectralOps, v: &TangentField, w: &TangentField) -> TangentField {
    let (wp_p, wp_t) = ops.gradient(&w.phi);
    let (wt_p, wt_t) = ops.gradient(&w.theta);
    let (vp_p, vp_t) = ops.gradient(&v.phi);
    let (vt_p, vt_t) = ops.gradient(&v.theta);
    let phi = &(&(&v.phi * &wp_p) + &(&v.theta * &wp_t)) - &(&(&w.phi * &vp_p) + &(&w.theta * &vp_t));
    let theta = &(&(&v.phi * &wt_p) + &(&v.theta * &wt_t)) - &(&(&w.phi * &vt_p) + &(&w.theta * &vt_t));
    TangentField::new(phi, theta)
}

/// `2 f II(B, B_perp) / (sqrt(g) (B^phi)^2)`.
pub fn normal_term(f: &Grid, ii_b_bperp: &Grid, sqrt_g: &Grid, b_phi: &Grid) -> Grid {
    2.0 * &(f * ii_b_bperp) / &(sqrt_g * &(b_phi * b_phi))
}

/// `(B^phi W^theta - B^theta W^phi) / (B^phi)^2` for `W = [V_Gamma, B]`.
pub fn bracket_term(b: &TangentField, w: &TangentField) -> Grid {
    &(&(&b.phi * &w.theta) - &(&b.theta * &w.phi)) / &(&b.phi * &b.phi)
}

/// `B_perp^i d_i u / (sqrt(g) (B^phi)^2)` from the covariant derivatives of `u`.
pub fn gradient_term(b_perp: &TangentField, du: (&Grid, &Grid), sqrt_g: &Grid, b_phi: &Grid) -> Grid {
    &(&(&b_perp.phi * du.0) + &(&b_perp.theta * du.1)) / &(sqrt_g * &(b_phi * b_phi))
}

pub fn x_prime_terms(
    metric: &MetricData,
    b: &TangentField,
    deformation: &DeformationField,
    uv_trace: &Grid,
) -> Result<XPrimeTerms> {
    let min = b.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotTransverse { min });
    }
    let ops = metric.spectral();
    let b_perp = metric.perp(b);
    let ii = metric.ii_bilinear(b, &b_perp);
    let w = lie_bracket(ops, &deformation.vg, b);
    let (up, ut) = ops.gradient(uv_trace);
    Ok(XPrimeTerms {
        normal: normal_term(&deformation.f, &ii, &metric.sqrt_g, &b.phi),
        bracket: bracket_term(b, &w),
        gradient: gradient_term(&b_perp, (&up, &ut), &metric.sqrt_g, &b.phi),
    })
}

pub fn x_prime_theta(
    metric: &MetricData,
    b: &TangentField,
    deformation: &DeformationField,
    uv_trace: &Grid,
) -> Result<Grid> {
    Ok(x_prime_terms(metric, b, deformation, uv_trace)?.total())
}

/// `Pi'(theta_k) = int_0^1 T(phi, theta_k) (X')^theta(phi, Pi^phi(theta_k)) dphi`.
pub fn pi_prime_duhamel(flow: &FlowTable, transition: &Grid, x_prime: &Grid) -> Vec<f64> {
    let (np, nt) = x_prime.dim();
    let interp = SpectralOps::new(np, nt).interpolant(x_prime);
    let m = flow.theta0.len();
    let mut out = vec![0.0; m];
    for (c, (&phi, &w)) in flow.phis.iter().zip(&flow.weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = interp.row_at(phi);
        for k in 0..m {
            out[k] += w * transition[[c, k]] * row.eval(flow.lift[c][k]);
        }
    }
    out
}

/// Closed-form `int_0^1 (X')^theta(phi, theta + omega phi) dphi` at
/// `theta_j = j / ntheta`, mode by mode. Nyquist content is dropped.
pub fn pi_prime_linearized(omega: f64, x_prime: &Grid) -> Vec<f64> {
    let (np, nt) = x_prime.dim();
    let ops = SpectralOps::new(np, nt);
    let c = ops.forward(x_prime);
    let mut out_c = vec![Complex64::new(0.0, 0.0); nt];
    for i in 0..np {
        if is_nyquist(i, np) {
            continue;
        }
        let m = frequency(i, np);
        for (j, oc) in out_c.iter_mut().enumerate() {
            if is_nyquist(j, nt) {
                continue;
            }
            *oc += c[[i, j]] * averaging_factor(m, frequency(j, nt), omega);
        }
    }
    (0..nt)
        .map(|k| {
            let theta = k as f64 / nt as f64;
            out_c
                .iter()
                .enumerate()
                .map(|(j, cj)| {
                    let n = frequency(j, nt) as f64;
                    (cj * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * n * theta)).re
                })
                .sum()
        })
        .collect()
}

/// Linearized assembly guarded by the detection of a constant `X^theta`.
pub fn pi_prime_linearized_checked(normalized: &NormalizedField, tol: f64, x_prime: &Grid) -> Result<Vec<f64>> {
    match detect_linearized(normalized, tol) {
        Some(lin) => Ok(pi_prime_linearized(lin.omega, x_prime)),
        None => Err(Error::NotLinearized {
            spread: crate::harmonic::linearization_spread(normalized),
            tol,
        }),
    }
}
