//! FFT-based tools on the uniform doubly periodic grid.
//!
//! Grids are `Array2<f64>` indexed `[i, j]` with `phi_i = i / nphi` and
//! `theta_j = j / ntheta`; both angles have period 1. Derivatives carry the
//! explicit `2 pi` factor. The Nyquist mode is dropped by derivatives and
//! interpolated with a cosine so that interpolants reproduce grid values.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type Grid = Array2<f64>;
pub type CGrid = Array2<Complex64>;

/// Signed frequency of FFT bin `k` for a transform of length `n`.
/// The Nyquist bin of an even length maps to `n / 2`.
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub fn is_nyquist(k: usize, n: usize) -> bool {
    n % 2 == 0 && k == n / 2
}

/// Bin index holding frequency `f`, if it is representable on `n` points.
pub fn bin(f: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if f.abs() >= half && !(n % 2 == 0 && f == half) {
        return None;
    }
    Some(f.rem_euclid(n as i64) as usize)
}

#[derive(Clone)]
pub struct SpectralOps {
    nphi: usize,
    ntheta: usize,
    fwd_phi: Arc<dyn Fft<f64>>,
    inv_phi: Arc<dyn Fft<f64>>,
    fwd_theta: Arc<dyn Fft<f64>>,
    inv_theta: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralOps")
            .field("nphi", &self.nphi)
            .field("ntheta", &self.ntheta)
            .finish()
    }
}

impl SpectralOps {
    pub fn new(nphi: usize, ntheta: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nphi,
            ntheta,
            fwd_phi: planner.plan_fft_forward(nphi),
            inv_phi: planner.plan_fft_inverse(nphi),
            fwd_theta: planner.plan_fft_forward(ntheta),
            inv_theta: planner.plan_fft_inverse(ntheta),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nphi, self.ntheta)
    }

    pub fn zeros(&self) -> Grid {
        Grid::zeros((self.nphi, self.ntheta))
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Grid {
        let (np, nt) = (self.nphi, self.ntheta);
        Grid::from_shape_fn((np, nt), |(i, j)| f(i as f64 / np as f64, j as f64 / nt as f64))
    }

    /// Normalized 2-D DFT: `g[i, j] = sum c[m, n] exp(2 pi i (m phi_i + n theta_j))`.
    pub fn forward(&self, g: &Grid) -> CGrid {
        assert_eq!(g.dim(), (self.nphi, self.ntheta), "grid shape mismatch");
        let mut c = g.mapv(|v| Complex64::new(v, 0.0));
        self.transform(&mut c, true);
        let scale = 1.0 / (self.nphi * self.ntheta) as f64;
        c.mapv_inplace(|v| v * scale);
        c
    }

    /// Inverse of [`forward`](Self::forward); returns the real part.
    pub fn inverse(&self, c: &CGrid) -> Grid {
        let mut w = c.clone();
        self.transform(&mut w, false);
        w.mapv(|v| v.re)
    }

    fn transform(&self, c: &mut CGrid, forward: bool) {
        let (np, nt) = (self.nphi, self.ntheta);
        let (fp, ft) = if forward {
            (&self.fwd_phi, &self.fwd_theta)
        } else {
            (&self.inv_phi, &self.inv_theta)
        };
        for mut row in c.rows_mut() {
            let mut buf: Vec<Complex64> = row.to_vec();
            ft.process(&mut buf);
            for (dst, src) in row.iter_mut().zip(buf) {
                *dst = src;
            }
        }
        let mut col = vec![Complex64::new(0.0, 0.0); np];
        for j in 0..nt {
            for i in 0..np {
                col[i] = c[[i, j]];
            }
            fp.process(&mut col);
            for i in 0..np {
                c[[i, j]] = col[i];
            }
        }
    }

    fn apply_symbol(&self, g: &Grid, symbol: impl Fn(usize, usize) -> Complex64) -> Grid {
        let mut c = self.forward(g);
        for ((i, j), v) in c.indexed_iter_mut() {
            *v *= symbol(i, j);
        }
        self.inverse(&c)
    }

    fn dsym(k: usize, n: usize) -> Complex64 {
        if is_nyquist(k, n) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * frequency(k, n) as f64)
        }
    }

    pub fn d_phi(&self, g: &Grid) -> Grid {
        let np = self.nphi;
        self.apply_symbol(g, |i, _| Self::dsym(i, np))
    }

    pub fn d_theta(&self, g: &Grid) -> Grid {
        let nt = self.ntheta;
        self.apply_symbol(g, |_, j| Self::dsym(j, nt))
    }

    /// Both first derivatives from a single forward transform.
    pub fn gradient(&self, g: &Grid) -> (Grid, Grid) {
        let c = self.forward(g);
        let (np, nt) = (self.nphi, self.ntheta);
        let mut cp = c.clone();
        let mut ct = c;
        for ((i, j), v) in cp.indexed_iter_mut() {
            *v *= Self::dsym(i, np);
            let _ = j;
        }
        for ((_, j), v) in ct.indexed_iter_mut() {
            *v *= Self::dsym(j, nt);
        }
        (self.inverse(&cp), self.inverse(&ct))
    }

    /// Mean over the grid (the `(0, 0)` Fourier coefficient).
    pub fn mean(&self, g: &Grid) -> f64 {
        g.mean().unwrap_or(0.0)
    }

    pub fn interpolant(&self, g: &Grid) -> TorusInterpolant {
        TorusInterpolant::new(self.forward(g))
    }
}

/// Trigonometric interpolant of a real grid, evaluable anywhere on the torus.
#[derive(Debug, Clone)]
pub struct TorusInterpolant {
    coeffs: CGrid,
}

/// Basis value `e^{2 pi i k x}` (cosine for the Nyquist bin) and its derivative.
fn basis(k: usize, n: usize, x: f64) -> (Complex64, Complex64) {
    let f = frequency(k, n) as f64;
    let w = 2.0 * PI * f;
    if is_nyquist(k, n) {
        (Complex64::new((w * x).cos(), 0.0), Complex64::new(-w * (w * x).sin(), 0.0))
    } else {
        let e = Complex64::from_polar(1.0, w * x);
        (e, e * Complex64::new(0.0, w))
    }
}

impl TorusInterpolant {
    pub fn new(coeffs: CGrid) -> Self {
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &CGrid {
        &self.coeffs
    }

    /// Collapses the phi direction at a fixed `phi`, leaving a function of theta.
    pub fn row_at(&self, phi: f64) -> CircleSeries {
        let (np, nt) = self.coeffs.dim();
        let mut row = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..np {
            let (b, _) = basis(i, np, phi);
            for (j, r) in row.iter_mut().enumerate() {
                *r += self.coeffs[[i, j]] * b;
            }
        }
        CircleSeries { coeffs: row }
    }

    pub fn eval(&self, phi: f64, theta: f64) -> f64 {
        self.row_at(phi).eval(theta)
    }
}

/// Fourier series on the circle in FFT bin order.
#[derive(Debug, Clone)]
pub struct CircleSeries {
    coeffs: Vec<Complex64>,
}

impl CircleSeries {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Self { coeffs: buf }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let c = &self.coeffs;
        let n = c.len();
        let z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut v = c[0].re;
        let mut d = 0.0;
        let half = n / 2;
        let top = if n % 2 == 0 { half } else { half + 1 };
        for k in 1..top {
            zk *= z;
            let w = 2.0 * PI * k as f64;
            let a = c[k] * zk;
            let b = c[n - k] * zk.conj();
            v += a.re + b.re;
            d += w * (b.im - a.im);
        }
        if n % 2 == 0 && n > 1 {
            zk *= z;
            let w = 2.0 * PI * half as f64;
            v += c[half].re * zk.re;
            d -= w * c[half].re * zk.im;
        }
        (v, d)
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        // Newton iteration from the Tricomi initial guess.
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_of_band_limited_function_is_exact() {
        let ops = SpectralOps::new(16, 24);
        let g = ops.from_fn(|p, t| (2.0 * PI * (2.0 * p + 3.0 * t)).sin() + (2.0 * PI * t).cos());
        let (gp, gt) = ops.gradient(&g);
        let ep = ops.from_fn(|p, t| 4.0 * PI * (2.0 * PI * (2.0 * p + 3.0 * t)).cos());
        let et = ops.from_fn(|p, t| {
            6.0 * PI * (2.0 * PI * (2.0 * p + 3.0 * t)).cos() - 2.0 * PI * (2.0 * PI * t).sin()
        });
        assert!((&gp - &ep).iter().all(|v| v.abs() < 1e-11));
        assert!((&gt - &et).iter().all(|v| v.abs() < 1e-11));
        assert!((&ops.d_phi(&g) - &gp).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn interpolant_reproduces_grid_including_nyquist() {
        let ops = SpectralOps::new(8, 8);
        let g = ops.from_fn(|p, t| (8.0 * PI * p).cos() * (1.0 + t) + (2.0 * PI * t).sin());
        let it = ops.interpolant(&g);
        for i in 0..8 {
            for j in 0..8 {
                assert_abs_diff_eq!(it.eval(i as f64 / 8.0, j as f64 / 8.0), g[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interpolant_is_exact_off_grid() {
        let ops = SpectralOps::new(16, 16);
        let f = |p: f64, t: f64| (2.0 * PI * (p - 2.0 * t)).cos() + 0.3 * (2.0 * PI * 3.0 * t).sin();
        let it = ops.interpolant(&ops.from_fn(f));
        assert_abs_diff_eq!(it.eval(0.123, 0.777), f(0.123, 0.777), epsilon = 1e-12);
        let row = it.row_at(0.3);
        let (_, d) = row.eval_with_derivative(0.41);
        let exact = 4.0 * PI * (2.0 * PI * (0.3 - 0.82)).sin() + 0.3 * 6.0 * PI * (2.0 * PI * 3.0 * 0.41).cos();
        assert_abs_diff_eq!(d, exact, epsilon = 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert_abs_diff_eq!(s, 1.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bins_round_trip() {
        for n in [8usize, 16] {
            for k in 0..n {
                assert_eq!(bin(frequency(k, n), n), Some(k));
            }
        }
        assert_eq!(bin(5, 8), None);
    }
}
