//! Diophantine checks, the cohomological equation `<(1, omega), grad psi> = Phi`
//! on the 2-torus, and the tangential deformations that realize a
//! prescribed first variation of a linearized return map.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::deformation::DeformationField;
use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::surface::{MetricData, TangentField};

/// Default lower bound on `|m + n omega|` inside the band.
pub const SMALL_DIVISOR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineWitness {
    pub omega: f64,
    pub c: f64,
    pub tau: f64,
    pub q_max: u64,
    /// Largest `C'` with `|e^{2 pi i omega q} - 1| >= C' q^-tau` for all `q <= q_max`.
    pub discrete_c: f64,
}

/// Scans `q = 1..=q_max` for `|omega - p/q| >= c q^-(tau + 1)` with `p` the
/// nearest integer to `omega q`.
pub fn check_diophantine(omega: f64, c: f64, tau: f64, q_max: u64) -> Result<DiophantineWitness> {
    if q_max < 1 || !(c > 0.0) || !(tau > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "diophantine scan needs q_max >= 1 and positive constants (C = {c}, tau = {tau})"
        )));
    }
    let mut discrete_c = f64::INFINITY;
    for q in 1..=q_max {
        let qf = q as f64;
        let p = (omega * qf).round();
        if (omega - p / qf).abs() < c * qf.powf(-(tau + 1.0)) {
            return Err(Error::NotDiophantineUpTo(q));
        }
        let e = Complex64::from_polar(1.0, 2.0 * PI * omega * qf) - 1.0;
        discrete_c = discrete_c.min(e.norm() * qf.powf(tau));
    }
    Ok(DiophantineWitness {
        omega,
        c,
        tau,
        q_max,
        discrete_c,
    })
}

/// `int_0^1 e^{2 pi i (m + n omega) s} ds`.
pub fn averaging_factor(m: i64, n: i64, omega: f64) -> Complex64 {
    let a = m as f64 + n as f64 * omega;
    if a == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let z = Complex64::new(0.0, 2.0 * PI * a);
    (z.exp() - 1.0) / z
}

/// Real band-limited function on the circle, `sum_{|n| <= band} c_n e^{2 pi i n theta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    band: usize,
    coeffs: Vec<Complex64>,
}

impl CircleFunction {
    pub fn zeros(band: usize) -> Self {
        Self {
            band,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * band + 1],
        }
    }

    /// Builds from coefficients for `n = 0..=band`; negative ones are conjugates.
    pub fn from_nonnegative(coeffs: &[Complex64]) -> Self {
        let band = coeffs.len().saturating_sub(1);
        let mut f = Self::zeros(band);
        for (n, c) in coeffs.iter().enumerate() {
            let c = if n == 0 { Complex64::new(c.re, 0.0) } else { *c };
            f.set(n as i64, c);
        }
        f
    }

    /// `sum_n (a_n cos(2 pi n theta) + b_n sin(2 pi n theta))` for `n >= 1`, plus `a_0`.
    pub fn from_cos_sin(a0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let band = cos.len().max(sin.len());
        let mut c = vec![Complex64::new(a0, 0.0)];
        for n in 0..band {
            let a = cos.get(n).copied().unwrap_or(0.0);
            let b = sin.get(n).copied().unwrap_or(0.0);
            c.push(Complex64::new(a / 2.0, -b / 2.0));
        }
        Self::from_nonnegative(&c)
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.band {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(n + self.band as i64) as usize]
    }

    fn set(&mut self, n: i64, c: Complex64) {
        let b = self.band as i64;
        self.coeffs[(n + b) as usize] = c;
        self.coeffs[(-n + b) as usize] = c.conj();
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.coeff(0).re;
        for n in 1..=self.band as i64 {
            v += 2.0 * (self.coeff(n) * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * theta)).re;
        }
        v
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.eval(j as f64 / n as f64)).collect()
    }

    pub fn max_abs_diff(&self, other: &CircleFunction) -> f64 {
        let b = self.band.max(other.band) as i64;
        (-b..=b)
            .map(|n| (self.coeff(n) - other.coeff(n)).norm())
            .fold(0.0, f64::max)
    }
}

/// Real band-limited function on the 2-torus with `|m| <= band_m`, `|n| <= band_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFunction {
    band_m: usize,
    band_n: usize,
    coeffs: Array2<Complex64>,
}

impl TorusFunction {
    pub fn zeros(band_m: usize, band_n: usize) -> Self {
        Self {
            band_m,
            band_n,
            coeffs: Array2::zeros((2 * band_m + 1, 2 * band_n + 1)),
        }
    }

    /// Fills coefficients from `f(m, n)` on the upper half-plane of modes and
    /// completes by conjugate symmetry.
    pub fn from_coeffs(band_m: usize, band_n: usize, f: impl Fn(i64, i64) -> Complex64) -> Self {
        let mut out = Self::zeros(band_m, band_n);
        let (bm, bn) = (band_m as i64, band_n as i64);
        for m in 0..=bm {
            for n in -bn..=bn {
                if m == 0 && n < 0 {
                    continue;
                }
                let mut c = f(m, n);
                if m == 0 && n == 0 {
                    c.im = 0.0;
                }
                out.set(m, n, c);
            }
        }
        out
    }

    /// Theta-only function from a circle function.
    pub fn from_circle(mu: &CircleFunction) -> Self {
        Self::from_coeffs(0, mu.band(), |_, n| mu.coeff(n))
    }

    /// Coefficients of a real grid (Nyquist content dropped).
    pub fn from_grid(g: &Grid) -> Self {
        let (np, nt) = g.dim();
        let ops = crate::spectral::SpectralOps::new(np, nt);
        let c = ops.forward(g);
        let (bm, bn) = ((np - 1) / 2, (nt - 1) / 2);
        Self::from_coeffs(bm, bn, |m, n| {
            c[[m.rem_euclid(np as i64) as usize, n.rem_euclid(nt as i64) as usize]]
        })
    }

    pub fn bands(&self) -> (usize, usize) {
        (self.band_m, self.band_n)
    }

    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.band_m || n.unsigned_abs() as usize > self.band_n {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[[(m + self.band_m as i64) as usize, (n + self.band_n as i64) as usize]]
    }

    fn set(&mut self, m: i64, n: i64, c: Complex64) {
        let (bm, bn) = (self.band_m as i64, self.band_n as i64);
        self.coeffs[[(m + bm) as usize, (n + bn) as usize]] = c;
        self.coeffs[[(-m + bm) as usize, (-n + bn) as usize]] = c.conj();
    }

    fn modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (bm, bn) = (self.band_m as i64, self.band_n as i64);
        (-bm..=bm).flat_map(move |m| (-bn..=bn).map(move |n| (m, n)))
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0, 0).re
    }

    pub fn eval(&self, phi: f64, theta: f64) -> f64 {
        self.modes()
            .map(|(m, n)| {
                (self.coeff(m, n) * Complex64::from_polar(1.0, 2.0 * PI * (m as f64 * phi + n as f64 * theta))).re
            })
            .sum()
    }

    /// Samples on an `nphi x ntheta` grid.
    pub fn sample(&self, nphi: usize, ntheta: usize) -> Grid {
        Grid::from_shape_fn((nphi, ntheta), |(i, j)| {
            self.eval(i as f64 / nphi as f64, j as f64 / ntheta as f64)
        })
    }

    /// `<(1, omega), grad f>` in coefficient space.
    pub fn directional_derivative(&self, omega: f64) -> Self {
        let mut out = self.clone();
        for (m, n) in self.modes().collect::<Vec<_>>() {
            let s = Complex64::new(0.0, 2.0 * PI * (m as f64 + n as f64 * omega));
            let (bm, bn) = (self.band_m as i64, self.band_n as i64);
            out.coeffs[[(m + bm) as usize, (n + bn) as usize]] = s * self.coeff(m, n);
        }
        out
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let bm = self.band_m.max(other.band_m) as i64;
        let bn = self.band_n.max(other.band_n) as i64;
        let mut d = 0.0f64;
        for m in -bm..=bm {
            for n in -bn..=bn {
                d = d.max((self.coeff(m, n) - other.coeff(m, n)).norm());
            }
        }
        d
    }
}

/// Solves `<(1, omega), grad psi> = Phi` with `psi_00 = 0`.
pub fn solve_cohomological(phi: &TorusFunction, omega: f64, floor: f64) -> Result<TorusFunction> {
    let avg = phi.mean();
    if avg.abs() > 1e-14 * (1.0 + phi.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
        return Err(Error::NonzeroAverage(avg));
    }
    for (m, n) in phi.modes() {
        if (m, n) == (0, 0) {
            continue;
        }
        let a = m as f64 + n as f64 * omega;
        if a.abs() < floor {
            return Err(Error::SmallDivisorOverflow { m, n, value: a.abs() });
        }
    }
    let (bm, bn) = phi.bands();
    Ok(TorusFunction::from_coeffs(bm, bn, |m, n| {
        if (m, n) == (0, 0) {
            return Complex64::new(0.0, 0.0);
        }
        phi.coeff(m, n) / Complex64::new(0.0, 2.0 * PI * (m as f64 + n as f64 * omega))
    }))
}

/// Sup of `<(1, omega), grad psi> - Phi` over an `n x n` evaluation grid.
pub fn cohomological_residual(psi: &TorusFunction, phi: &TorusFunction, omega: f64, n: usize) -> f64 {
    let d = psi.directional_derivative(omega).sample(n, n);
    let p = phi.sample(n, n);
    (&d - &p).iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Theta-only `Phi` whose average along the linear flow is `mu`:
/// `Phi_n = 2 pi i n omega / (e^{2 pi i n omega} - 1) mu_n`.
pub fn mu_to_phi(mu: &CircleFunction, omega: f64) -> Result<TorusFunction> {
    if mu.mean().abs() > 1e-14 {
        return Err(Error::NonzeroAverage(mu.mean()));
    }
    let band = mu.band() as i64;
    for n in 1..=band {
        let e = Complex64::from_polar(1.0, 2.0 * PI * n as f64 * omega) - 1.0;
        if e.norm() < SMALL_DIVISOR_FLOOR {
            return Err(Error::SmallDivisorOverflow {
                m: 0,
                n,
                value: e.norm(),
            });
        }
    }
    Ok(TorusFunction::from_coeffs(0, mu.band(), |_, n| {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let z = Complex64::new(0.0, 2.0 * PI * n as f64 * omega);
        z / (z.exp() - 1.0) * mu.coeff(n)
    }))
}

/// `theta -> int_0^1 Phi(phi, theta + omega phi) dphi`.
pub fn averaging_operator(phi: &TorusFunction, omega: f64) -> CircleFunction {
    let (bm, bn) = phi.bands();
    let mut c = vec![Complex64::new(0.0, 0.0); bn + 1];
    for (n, cn) in c.iter_mut().enumerate() {
        for m in -(bm as i64)..=bm as i64 {
            *cn += phi.coeff(m, n as i64) * averaging_factor(m, n as i64, omega);
        }
    }
    CircleFunction::from_nonnegative(&c)
}

/// Tangential deformation `V_Gamma = -psi d_theta` with `<(1, omega), grad psi> = mu_to_phi(mu)`.
pub fn tangential_deformation_from_mu(
    shape: (usize, usize),
    mu: &CircleFunction,
    witness: &DiophantineWitness,
) -> Result<DeformationField> {
    let phi = mu_to_phi(mu, witness.omega)?;
    let psi = solve_cohomological(&phi, witness.omega, SMALL_DIVISOR_FLOOR)?;
    let vg = TangentField::new(Grid::zeros(shape), -psi.sample(shape.0, shape.1));
    Ok(DeformationField::new(Grid::zeros(shape), vg))
}

/// Normal deformation `f = 1 / (sqrt(g) chi)` that makes the potential datum vanish.
pub fn normal_average_generator(metric: &MetricData, chi: &Grid) -> Result<DeformationField> {
    if !chi.iter().all(|v| *v > 0.0) {
        return Err(Error::NotTransverse {
            min: chi.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    let f = 1.0 / (&metric.sqrt_g * chi);
    Ok(DeformationField::new(f, TangentField::zeros(metric.shape())))
}
