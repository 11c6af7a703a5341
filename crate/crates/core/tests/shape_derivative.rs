use std::f64::consts::PI;

use torus_shape::axisym::{reduced_pi_prime, x_prime_axisym, AxisymTorus};
use torus_shape::cohomology::normal_average_generator;
use torus_shape::deformation::{deform_surface, DeformationField, DeformationSpec};
use torus_shape::pipeline::{fd_pi_prime, BoundaryState, PipelineOptions};
use torus_shape::shape_derivative::{uv_datum, x_prime_terms, Method};
use torus_shape::spectral::Grid;
use torus_shape::surface::{tori, FourierSurface, SurfaceOptions, TangentField};

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn axisym_state(n: usize) -> (AxisymTorus, BoundaryState) {
    let torus = AxisymTorus::new(2.0, 1.0).unwrap();
    let state = BoundaryState::new(torus.surface((n, n)).unwrap(), PipelineOptions::default()).unwrap();
    (torus, state)
}

fn perturbed_state(n: usize) -> BoundaryState {
    let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (n, n)).unwrap();
    BoundaryState::new(s, PipelineOptions::default()).unwrap()
}

#[test]
fn rigid_rotation_leaves_the_map_fixed() {
    let (_, st) = axisym_state(32);
    let r = st
        .shape_derivative_of(&DeformationSpec::RigidRotation { rate: 1.0 }, Method::Duhamel)
        .unwrap();
    assert!(sup(&r.pi_prime) < 1e-10, "{}", sup(&r.pi_prime));
}

#[test]
fn duhamel_and_linearized_agree_on_the_axisymmetric_torus() {
    let (torus, st) = axisym_state(32);
    for spec in DeformationSpec::random_family(11, 2, 1.0) {
        let a = st.shape_derivative_of(&spec, Method::Duhamel).unwrap();
        let b = st.shape_derivative_of(&spec, Method::Linearized).unwrap();
        assert!(sup_diff(&a.pi_prime, &b.pi_prime) < 1e-9);
        let reduced = reduced_pi_prime(&torus, &a.uv.trace);
        assert!(sup_diff(&a.pi_prime, &reduced) < 1e-9);
        let d = st.decompose(&spec).unwrap();
        let indep = x_prime_axisym(&torus, &d, &a.uv.trace);
        let err = (&indep - &a.x_prime_theta).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err}");
    }
}

#[test]
fn shape_derivative_is_linear() {
    let st = perturbed_state(32);
    let fam = DeformationSpec::random_family(5, 2, 1.0);
    let v1 = st.decompose(&fam[0]).unwrap();
    let v2 = st.decompose(&fam[1]).unwrap();
    let p1 = st.shape_derivative(&v1, Method::Duhamel).unwrap().pi_prime;
    let p2 = st.shape_derivative(&v2, Method::Duhamel).unwrap().pi_prime;
    let comb = v1.scale(1.5).add(&v2.scale(-0.7));
    let p = st.shape_derivative(&comb, Method::Duhamel).unwrap().pi_prime;
    let expected: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 1.5 * a - 0.7 * b).collect();
    assert!(sup_diff(&p, &expected) < 1e-9, "{}", sup_diff(&p, &expected));
    assert!(sup(&p1) > 1e-4);
}

#[test]
fn zero_deformation_gives_zero_derivative() {
    let st = perturbed_state(16);
    let r = st.shape_derivative(&DeformationField::zeros((16, 16)), Method::Duhamel).unwrap();
    assert!(sup(&r.pi_prime) == 0.0);
}

#[test]
fn normal_average_generator_is_invisible_on_the_axisymmetric_torus() {
    let (_, st) = axisym_state(32);
    let d = normal_average_generator(&st.metric, &st.harmonic.b.phi).unwrap();
    let datum = uv_datum(&st.metric, &st.harmonic.b, &d.f);
    assert!(datum.iter().all(|v| v.abs() < 1e-10));
    let terms = x_prime_terms(&st.metric, &st.harmonic.b, &d, &Grid::zeros((32, 32))).unwrap();
    assert!(terms.normal.iter().all(|v| v.abs() < 1e-10));
    let r = st.shape_derivative(&d, Method::Duhamel).unwrap();
    assert!(sup(&r.pi_prime) < 1e-10);
}

#[test]
fn potential_datum_vanishes_for_tangential_and_unit_normal_fields() {
    let (_, st) = axisym_state(16);
    let b = &st.harmonic.b;
    let zero = uv_datum(&st.metric, b, &Grid::zeros((16, 16)));
    assert!(zero.iter().all(|v| *v == 0.0));
    let unit = uv_datum(&st.metric, b, &Grid::ones((16, 16)));
    assert!(unit.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn tangential_deformations_have_zero_average_derivative_when_the_map_is_a_rotation() {
    let (_, st) = axisym_state(32);
    let ops = st.metric.spectral();
    let vg = TangentField::new(
        ops.from_fn(|p, t| 0.2 * (2.0 * PI * (p - 2.0 * t)).sin()),
        ops.from_fn(|p, t| 0.1 * (2.0 * PI * (2.0 * p + t)).cos() + 0.05 * (2.0 * PI * t).sin()),
    );
    let d = DeformationField::new(Grid::zeros((32, 32)), vg);
    let r = st.shape_derivative(&d, Method::Duhamel).unwrap();
    let mean = r.pi_prime.iter().sum::<f64>() / r.pi_prime.len() as f64;
    assert!(mean.abs() < 1e-8, "{mean}");
}

#[test]
fn elliptic_axisymmetric_section_has_vanishing_derivative() {
    let s = FourierSurface::from_fn((32, 32), SurfaceOptions::default(), |p, t| {
        let big = 2.0 + (2.0 * PI * t).cos();
        [big * (2.0 * PI * p).cos(), big * (2.0 * PI * p).sin(), 0.7 * (2.0 * PI * t).sin()]
    })
    .unwrap();
    let st = BoundaryState::new(s, PipelineOptions::default()).unwrap();
    for spec in DeformationSpec::random_family(23, 2, 1.0) {
        let r = st.shape_derivative_of(&spec, Method::Duhamel).unwrap();
        assert!(sup(&r.pi_prime) < 1e-3, "{}", sup(&r.pi_prime));
    }
}

#[test]
fn translation_leaves_the_return_map_unchanged() {
    let st = perturbed_state(32);
    let moved = deform_surface(&st.surface, &st.metric, &DeformationSpec::Constant { vector: [0.0, 0.0, 1.0] }, 0.3)
        .unwrap();
    let st2 = BoundaryState::new(moved, PipelineOptions::default()).unwrap();
    assert!(st.map.distance(&st2.map) < 1e-10, "{}", st.map.distance(&st2.map));
    let r = st
        .shape_derivative_of(&DeformationSpec::Constant { vector: [0.0, 0.0, 1.0] }, Method::Duhamel)
        .unwrap();
    assert!(sup(&r.pi_prime) < 2e-5, "{}", sup(&r.pi_prime));
}

#[test]
fn finite_differences_of_a_null_field_vanish() {
    let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (16, 16)).unwrap();
    let spec = DeformationSpec::Constant { vector: [0.0; 3] };
    let fd = fd_pi_prime(&s, &spec, &[4e-3, 2e-3, 1e-3], &PipelineOptions::default(), 0).unwrap();
    assert!(fd.norms.iter().all(|v| *v < 1e-12));
}

#[test]
fn finite_differences_track_the_analytic_derivative() {
    let st = perturbed_state(32);
    let spec = &DeformationSpec::random_family(3, 1, 1.0)[0];
    let analytic = st.shape_derivative_of(spec, Method::Duhamel).unwrap().pi_prime;
    let fd = fd_pi_prime(&st.surface, spec, &[4e-3, 2e-3, 1e-3], &st.opts, 0).unwrap();
    assert!(fd.observed_order.unwrap() > 1.9);
    // discretization floor at this grid; the acceptance suite runs at 64^2
    assert!(fd.extrapolated_discrepancy(&analytic) < 2e-5);
}
