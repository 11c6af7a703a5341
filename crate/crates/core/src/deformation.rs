//! Ambient deformation fields and their boundary decomposition.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::surface::{FourierSurface, MetricData, TangentField, Vec3, VecGrid};

/// One term `amplitude * sin(k . x + phase)` of a random smooth field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub amplitude: Vec3,
    pub wavevector: Vec3,
    pub phase: f64,
}

/// Named deformation fields accepted by the pipelines and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformationSpec {
    Constant {
        vector: Vec3,
    },
    /// Infinitesimal rotation `omega x p` about the z-axis.
    RigidRotation {
        #[serde(default = "unit")]
        rate: f64,
    },
    /// Cylindrically radial Gaussian bump.
    RadialBump {
        center: Vec3,
        width: f64,
        amplitude: f64,
    },
    /// `amplitude * cos(2 pi (m phi + n theta)) n`, defined on the boundary only.
    FourierNormalBump {
        m: i32,
        n: i32,
        amplitude: f64,
    },
    /// Sum of seeded random plane waves.
    Random {
        seed: u64,
        #[serde(default = "default_waves")]
        waves: usize,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    PlaneWaves {
        waves: Vec<PlaneWave>,
    },
}

fn unit() -> f64 {
    1.0
}

fn default_waves() -> usize {
    6
}

/// Plane waves with wavevectors in `[-1, 1]^3` and amplitudes summing to at
/// most `amplitude` per component.
pub fn random_plane_waves(seed: u64, waves: usize, amplitude: f64) -> Vec<PlaneWave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = amplitude / waves.max(1) as f64;
    (0..waves)
        .map(|_| {
            let mut a = [0.0; 3];
            let mut k = [0.0; 3];
            for d in 0..3 {
                a[d] = scale * rng.random_range(-1.0..1.0);
                k[d] = rng.random_range(-1.0..1.0);
            }
            PlaneWave {
                amplitude: a,
                wavevector: k,
                phase: rng.random_range(0.0..2.0 * PI),
            }
        })
        .collect()
}

impl DeformationSpec {
    /// `count` random fields with seeds derived from `seed`.
    pub fn random_family(seed: u64, count: usize, amplitude: f64) -> Vec<Self> {
        (0..count as u64)
            .map(|k| Self::Random {
                seed: seed.wrapping_mul(1_000_003).wrapping_add(k),
                waves: default_waves(),
                amplitude,
            })
            .collect()
    }

    /// Replaces seeded random fields by their explicit plane waves.
    pub fn resolved(&self) -> Self {
        match self {
            Self::Random {
                seed,
                waves,
                amplitude,
            } => Self::PlaneWaves {
                waves: random_plane_waves(*seed, *waves, *amplitude),
            },
            other => other.clone(),
        }
    }

    pub fn is_ambient(&self) -> bool {
        !matches!(self, Self::FourierNormalBump { .. })
    }

    /// Ambient value at `p`; `None` for boundary-defined fields.
    pub fn eval(&self, p: Vec3) -> Option<Vec3> {
        match self {
            Self::Constant { vector } => Some(*vector),
            Self::RigidRotation { rate } => Some([-rate * p[1], rate * p[0], 0.0]),
            Self::RadialBump {
                center,
                width,
                amplitude,
            } => {
                let rho = p[0].hypot(p[1]);
                if rho == 0.0 {
                    return Some([0.0; 3]);
                }
                let d2: f64 = (0..3).map(|k| (p[k] - center[k]).powi(2)).sum();
                let s = amplitude * (-d2 / (2.0 * width * width)).exp() / rho;
                Some([s * p[0], s * p[1], 0.0])
            }
            Self::FourierNormalBump { .. } => None,
            Self::Random {
                seed,
                waves,
                amplitude,
            } => Some(eval_waves(&random_plane_waves(*seed, *waves, *amplitude), p)),
            Self::PlaneWaves { waves } => Some(eval_waves(waves, p)),
        }
    }

    /// Deformation vectors at the surface grid points.
    pub fn sample(&self, surface: &FourierSurface, metric: &MetricData) -> Result<VecGrid> {
        let shape = surface.grid_size();
        let mut out = [Grid::zeros(shape), Grid::zeros(shape), Grid::zeros(shape)];
        if let Self::FourierNormalBump { m, n, amplitude } = self {
            for i in 0..shape.0 {
                for j in 0..shape.1 {
                    let (p, t) = (i as f64 / shape.0 as f64, j as f64 / shape.1 as f64);
                    let f = amplitude * (2.0 * PI * (*m as f64 * p + *n as f64 * t)).cos();
                    for d in 0..3 {
                        out[d][[i, j]] = f * metric.normal[d][[i, j]];
                    }
                }
            }
            return Ok(out);
        }
        let field = self.resolved();
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let v = field.eval(surface.point(i, j)).expect("ambient field");
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidArgument(format!("deformation {self:?} is not finite")));
                }
                for d in 0..3 {
                    out[d][[i, j]] = v[d];
                }
            }
        }
        Ok(out)
    }
}

fn eval_waves(waves: &[PlaneWave], p: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for w in waves {
        let s = (w.wavevector[0] * p[0] + w.wavevector[1] * p[1] + w.wavevector[2] * p[2] + w.phase).sin();
        for d in 0..3 {
            out[d] += w.amplitude[d] * s;
        }
    }
    out
}

/// Boundary decomposition `V = f n + V_Gamma`.
#[derive(Debug, Clone)]
pub struct DeformationField {
    pub f: Grid,
    pub vg: TangentField,
    /// The generating field, when there is one.
    pub source: Option<DeformationSpec>,
}

impl DeformationField {
    pub fn new(f: Grid, vg: TangentField) -> Self {
        Self { f, vg, source: None }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self::new(Grid::zeros(shape), TangentField::zeros(shape))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            f: &self.f * s,
            vg: self.vg.scale(s),
            source: None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.f + &other.f, self.vg.add(&other.vg))
    }

    /// `f n + V^phi E_phi + V^theta E_theta`.
    pub fn reconstruct(&self, metric: &MetricData) -> VecGrid {
        let t = metric.to_ambient(&self.vg);
        [
            &t[0] + &(&self.f * &metric.normal[0]),
            &t[1] + &(&self.f * &metric.normal[1]),
            &t[2] + &(&self.f * &metric.normal[2]),
        ]
    }
}

/// Splits sampled deformation vectors into normal and tangential parts.
pub fn decompose_samples(v: &VecGrid, metric: &MetricData) -> Result<DeformationField> {
    let (f, vg) = metric.split(v)?;
    Ok(DeformationField::new(f, vg))
}

pub fn decompose_deformation(
    spec: &DeformationSpec,
    surface: &FourierSurface,
    metric: &MetricData,
) -> Result<DeformationField> {
    let v = spec.sample(surface, metric)?;
    let mut field = decompose_samples(&v, metric)?;
    field.source = Some(spec.clone());
    Ok(field)
}

/// Surface `E + t V(E)` refitted from grid samples.
pub fn deform_samples(surface: &FourierSurface, v: &VecGrid, t: f64) -> Result<FourierSurface> {
    let p = surface.points();
    let moved = [&p[0] + &(&v[0] * t), &p[1] + &(&v[1] * t), &p[2] + &(&v[2] * t)];
    FourierSurface::from_samples(&moved, crate::surface::SurfaceOptions::default())
}

pub fn deform_surface(
    surface: &FourierSurface,
    metric: &MetricData,
    spec: &DeformationSpec,
    t: f64,
) -> Result<FourierSurface> {
    deform_samples(surface, &spec.sample(surface, metric)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{compute_metric, tori};

    fn axisym() -> (FourierSurface, MetricData) {
        let s = tori::axisymmetric(2.0, 1.0, (16, 16)).unwrap();
        let m = compute_metric(&s);
        (s, m)
    }

    #[test]
    fn normal_field_has_unit_normal_part() {
        let (_, m) = axisym();
        let d = decompose_samples(&m.normal.clone(), &m).unwrap();
        assert!(d.f.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(d.vg.max_abs() < 1e-14);
    }

    #[test]
    fn coordinate_field_is_tangential() {
        let (_, m) = axisym();
        let d = decompose_samples(&m.e_phi.clone(), &m).unwrap();
        assert!(d.f.iter().all(|v| v.abs() < 1e-13));
        assert!(d.vg.phi.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!(d.vg.theta.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn e_z_on_axisym_torus() {
        let (s, m) = axisym();
        let d = decompose_deformation(&DeformationSpec::Constant { vector: [0.0, 0.0, 1.0] }, &s, &m).unwrap();
        for ((i, j), f) in d.f.indexed_iter() {
            let t = j as f64 / 16.0;
            assert!((f - (2.0 * PI * t).sin()).abs() < 1e-13);
            assert!((d.vg.theta[[i, j]] - (2.0 * PI * t).cos() / (2.0 * PI)).abs() < 1e-13);
            assert!(d.vg.phi[[i, j]].abs() < 1e-13);
        }
    }

    #[test]
    fn reconstruction_matches_samples() {
        let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (32, 32)).unwrap();
        let m = compute_metric(&s);
        let spec = DeformationSpec::Random { seed: 7, waves: 6, amplitude: 1.0 };
        let v = spec.sample(&s, &m).unwrap();
        let d = decompose_deformation(&spec, &s, &m).unwrap();
        let r = d.reconstruct(&m);
        for k in 0..3 {
            assert!((&r[k] - &v[k]).iter().all(|x| x.abs() < 1e-13));
        }
    }

    #[test]
    fn random_fields_are_reproducible() {
        let a = DeformationSpec::random_family(42, 3, 1.0);
        let b = DeformationSpec::random_family(42, 3, 1.0);
        assert_eq!(a, b);
        let p = [1.3, -0.2, 0.4];
        assert_eq!(a[1].eval(p), b[1].eval(p));
        assert_eq!(a[1].eval(p), a[1].resolved().eval(p));
        assert_ne!(a[0].eval(p), a[1].eval(p));
    }

    #[test]
    fn zero_step_keeps_the_surface() {
        let (s, m) = axisym();
        let d = deform_surface(&s, &m, &DeformationSpec::Random { seed: 1, waves: 4, amplitude: 1.0 }, 0.0).unwrap();
        for k in 0..3 {
            assert!((&d.points()[k] - &s.points()[k]).iter().all(|x| x.abs() < 1e-13));
        }
    }

    #[test]
    fn radial_bump_moves_by_about_t() {
        let s = tori::axisymmetric(2.0, 1.0, (64, 64)).unwrap();
        let m = compute_metric(&s);
        let spec = DeformationSpec::RadialBump { center: [3.0, 0.0, 0.0], width: 0.8, amplitude: 1.0 };
        let t = 1e-3;
        let d = deform_surface(&s, &m, &spec, t).unwrap();
        let v = spec.sample(&s, &m).unwrap();
        let vmax = (0..64)
            .flat_map(|i| (0..64).map(move |j| (i, j)))
            .map(|(i, j)| (v[0][[i, j]].powi(2) + v[1][[i, j]].powi(2) + v[2][[i, j]].powi(2)).sqrt())
            .fold(0.0, f64::max);
        let mut dist = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let a = s.point(i, j);
                let b = d.point(i, j);
                dist = dist.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
            }
        }
        assert!((dist - t * vmax).abs() < 1e-6 * t * vmax);
    }
}
