//! End-to-end pipelines: boundary state of a surface, analytic shape
//! derivatives, and finite-difference validation.

use crate::deformation::{decompose_deformation, deform_samples, DeformationField, DeformationSpec};
use crate::error::Result;
use crate::harmonic::{compute_harmonic, normalize_toroidal, HarmonicBoundaryField, NormalizedField};
use crate::jobs::run_jobs;
use crate::neumann::{NeumannOperator, NeumannOptions};
use crate::poincare::{poincare_map, transition_factor, CircleMap, FlowTable, PoincareOptions};
use crate::shape_derivative::{
    pi_prime_duhamel, pi_prime_linearized_checked, solve_uv, x_prime_theta, Method, ShapeDerivativeResult,
};
use crate::spectral::Grid;
use crate::surface::{compute_metric, FourierSurface, MetricData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub neumann: NeumannOptions,
    pub poincare: PoincareOptions,
    /// Poincaré section size; `None` uses the theta grid size.
    pub section_samples: Option<usize>,
    /// Tolerance of the constant-`X^theta` detection.
    pub linearized_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            neumann: NeumannOptions::default(),
            poincare: PoincareOptions::default(),
            section_samples: None,
            linearized_tol: 1e-8,
        }
    }
}

impl PipelineOptions {
    fn section(&self, surface: &FourierSurface) -> usize {
        self.section_samples.unwrap_or(surface.grid_size().1)
    }
}

/// Everything derived from one boundary surface.
pub struct BoundaryState {
    pub surface: FourierSurface,
    pub metric: MetricData,
    pub operator: NeumannOperator,
    pub harmonic: HarmonicBoundaryField,
    pub normalized: NormalizedField,
    pub map: CircleMap,
    pub flow: FlowTable,
    pub transition: Grid,
    pub opts: PipelineOptions,
}

impl BoundaryState {
    pub fn new(surface: FourierSurface, opts: PipelineOptions) -> Result<Self> {
        let metric = compute_metric(&surface);
        let operator = NeumannOperator::new(&surface, &metric, opts.neumann)?;
        let harmonic = compute_harmonic(&surface, &metric, &operator)?;
        let normalized = normalize_toroidal(&harmonic)?;
        let (map, flow) = poincare_map(&normalized, opts.section(&surface), &opts.poincare)?;
        let transition = transition_factor(&flow);
        Ok(Self {
            surface,
            metric,
            operator,
            harmonic,
            normalized,
            map,
            flow,
            transition,
            opts,
        })
    }

    pub fn decompose(&self, spec: &DeformationSpec) -> Result<DeformationField> {
        decompose_deformation(spec, &self.surface, &self.metric)
    }

    pub fn shape_derivative(&self, deformation: &DeformationField, method: Method) -> Result<ShapeDerivativeResult> {
        let b = &self.harmonic.b;
        let uv = solve_uv(&self.operator, b, deformation)?;
        let xp = x_prime_theta(&self.metric, b, deformation, &uv.trace)?;
        let pi_prime = match method {
            Method::Duhamel => pi_prime_duhamel(&self.flow, &self.transition, &xp),
            Method::Linearized => {
                let section = self.flow.theta0.len();
                let nt = xp.ncols();
                if section != nt {
                    return Err(crate::Error::InvalidArgument(format!(
                        "linearized assembly samples the theta grid ({nt}), not a section of {section}"
                    )));
                }
                pi_prime_linearized_checked(&self.normalized, self.opts.linearized_tol, &xp)?
            }
        };
        Ok(ShapeDerivativeResult {
            uv,
            x_prime_theta: xp,
            pi_prime,
            method,
        })
    }

    pub fn shape_derivative_of(&self, spec: &DeformationSpec, method: Method) -> Result<ShapeDerivativeResult> {
        self.shape_derivative(&self.decompose(spec)?, method)
    }
}

/// Poincaré map of a surface without keeping the intermediate state.
pub fn poincare_of(surface: &FourierSurface, opts: &PipelineOptions) -> Result<CircleMap> {
    let metric = compute_metric(surface);
    let op = NeumannOperator::new(surface, &metric, opts.neumann)?;
    let harmonic = compute_harmonic(surface, &metric, &op)?;
    let normalized = normalize_toroidal(&harmonic)?;
    Ok(poincare_map(&normalized, opts.section(surface), &opts.poincare)?.0)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Central differences `(Pi_t - Pi_-t) / 2t` over a ladder of steps.
#[derive(Debug, Clone)]
pub struct FdReport {
    /// Steps in decreasing order, each half the previous one.
    pub ts: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    /// Sup norms of the estimates.
    pub norms: Vec<f64>,
    /// `|D(t_k) - D(t_{k+1})|_inf` for consecutive steps.
    pub successive: Vec<f64>,
    /// Order from the last three steps, `log2` of the ratio of successive differences.
    pub observed_order: Option<f64>,
    /// `D(t) + (D(t) - D(2t)) / 3` with the two smallest steps.
    pub richardson: Vec<f64>,
}

impl FdReport {
    fn new(ts: Vec<f64>, estimates: Vec<Vec<f64>>) -> Self {
        let norms = estimates.iter().map(|e| sup(e)).collect();
        let successive: Vec<f64> = estimates.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
        let observed_order = (successive.len() >= 2).then(|| {
            let k = successive.len();
            (successive[k - 2] / successive[k - 1]).log2()
        });
        let k = estimates.len();
        let richardson = if k >= 2 {
            estimates[k - 1]
                .iter()
                .zip(&estimates[k - 2])
                .map(|(a, b)| a + (a - b) / 3.0)
                .collect()
        } else {
            estimates[k - 1].clone()
        };
        Self {
            ts,
            estimates,
            norms,
            successive,
            observed_order,
            richardson,
        }
    }

    /// `|D(t) - analytic|_inf` for each step.
    pub fn discrepancies(&self, analytic: &[f64]) -> Vec<f64> {
        self.estimates.iter().map(|e| sup_diff(e, analytic)).collect()
    }

    pub fn extrapolated_discrepancy(&self, analytic: &[f64]) -> f64 {
        sup_diff(&self.richardson, analytic)
    }
}

/// Finite-difference estimates of `Pi'` for deformations `E + t V`, with the
/// Poincaré maps for all `+-t` computed as independent jobs.
pub fn fd_pi_prime(
    surface: &FourierSurface,
    spec: &DeformationSpec,
    ts: &[f64],
    opts: &PipelineOptions,
    threads: usize,
) -> Result<FdReport> {
    let metric = compute_metric(surface);
    let v = spec.sample(surface, &metric)?;
    fd_from_samples(surface, &v, ts, opts, threads)
}

pub fn fd_from_samples(
    surface: &FourierSurface,
    v: &[Grid; 3],
    ts: &[f64],
    opts: &PipelineOptions,
    threads: usize,
) -> Result<FdReport> {
    let mut ts = ts.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    let mut jobs = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        for sign in [1i8, -1] {
            let step = t * sign as f64;
            jobs.push(((k, sign), move || -> Result<CircleMap> {
                poincare_of(&deform_samples(surface, v, step)?, opts)
            }));
        }
    }
    let mut maps = run_jobs(jobs, threads);
    let mut estimates = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let plus = maps.remove(&(k, 1)).expect("job result")?;
        let minus = maps.remove(&(k, -1)).expect("job result")?;
        let (a, b) = (plus.samples(), minus.samples());
        let shift = (a[0] - b[0]).round();
        estimates.push(a.iter().zip(b).map(|(p, m)| (p - m - shift) / (2.0 * t)).collect());
    }
    Ok(FdReport::new(ts, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_orders_and_richardson() {
        // D(t) = 1 + t^2 exactly
        let ts = vec![4e-3, 2e-3, 1e-3];
        let est: Vec<Vec<f64>> = ts.iter().map(|t| vec![1.0 + t * t, 2.0 + 3.0 * t * t]).collect();
        let r = FdReport::new(ts, est);
        assert!((r.observed_order.unwrap() - 2.0).abs() < 1e-6);
        assert!((r.richardson[0] - 1.0).abs() < 1e-15);
        assert!((r.richardson[1] - 2.0).abs() < 1e-14);
        assert!(r.extrapolated_discrepancy(&[1.0, 2.0]) < 1e-14);
    }
}
