use std::f64::consts::PI;

use torus_shape::neumann::{NeumannOperator, NeumannOptions, NeumannProblem};
use torus_shape::spectral::Grid;
use torus_shape::surface::{compute_metric, tori, FourierSurface, MetricData};
use torus_shape::Error;

fn setup(n: usize) -> (FourierSurface, MetricData, NeumannOperator) {
    let s = tori::axisymmetric(2.0, 1.0, (n, n)).unwrap();
    let m = compute_metric(&s);
    let op = NeumannOperator::new(&s, &m, NeumannOptions::default()).unwrap();
    (s, m, op)
}

fn rel_l2(metric: &MetricData, a: &Grid, b: &Grid) -> f64 {
    let d = a - b;
    (metric.integrate(&(&d * &d)) / metric.integrate(&(b * b))).sqrt()
}

#[test]
fn zero_datum_gives_zero_potential() {
    let (_, m, op) = setup(16);
    let sol = op.solve(&NeumannProblem::new(&m, Grid::zeros((16, 16))).unwrap()).unwrap();
    assert!(sol.trace.iter().all(|v| v.abs() < 1e-14));
    assert!(sol.density.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn solution_is_linear_in_the_datum() {
    let (_, m, op) = setup(16);
    let g1 = m.normal[2].clone();
    let g2 = &m.normal[0] * &m.normal[0] - &m.normal[1] * &m.normal[1];
    let s1 = op.solve(&NeumannProblem::projected(&m, g1.clone())).unwrap();
    let s2 = op.solve(&NeumannProblem::projected(&m, g2.clone())).unwrap();
    let s12 = op.solve(&NeumannProblem::projected(&m, &g1 * 2.0 - &g2 * 0.5)).unwrap();
    let comb = &s1.trace * 2.0 - &s2.trace * 0.5;
    let err = (&s12.trace - &comb).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(err < 1e-12, "{err}");
}

#[test]
fn linear_potential_is_recovered_inside() {
    let (s, m, op) = setup(64);
    let sol = op.solve(&NeumannProblem::projected(&m, m.normal[2].clone())).unwrap();
    assert!(rel_l2(&m, &sol.trace, &s.points()[2]) < 1e-4);
    for z in [-0.2, 0.0, 0.2] {
        let u = op.evaluate_interior(&sol, [2.0, 0.0, z]).unwrap();
        assert!((u - z).abs() < 1e-4, "z = {z}: {u}");
    }
}

#[test]
fn interior_potential_is_harmonic() {
    let (s, m, op) = setup(64);
    let p = s.points();
    let g = (&p[0] * &m.normal[0] - &p[1] * &m.normal[1]) * 2.0;
    let sol = op.solve(&NeumannProblem::projected(&m, g)).unwrap();
    let x0 = [0.0, 2.0, 0.0];
    let h = 0.05;
    let u = |d: usize, s: f64| {
        let mut x = x0;
        x[d] += s;
        op.evaluate_interior(&sol, x).unwrap()
    };
    let centre = u(0, 0.0);
    let second: Vec<f64> = (0..3).map(|d| (u(d, h) + u(d, -h) - 2.0 * centre) / (h * h)).collect();
    assert!((second[0] - 2.0).abs() < 1e-3 && (second[1] + 2.0).abs() < 1e-3, "{second:?}");
    assert!(second.iter().sum::<f64>().abs() < 1e-3, "{second:?}");
}

#[test]
fn boundary_probes_are_rejected() {
    let (s, m, op) = setup(16);
    let sol = op.solve(&NeumannProblem::projected(&m, m.normal[2].clone())).unwrap();
    let p = s.point(3, 5);
    assert!(matches!(op.evaluate_interior(&sol, p), Err(Error::TooCloseToBoundary { .. })));
}

#[test]
fn incompatible_datum_is_rejected() {
    let (_, m, _) = setup(16);
    let g = Grid::from_elem(m.shape(), 1.0);
    assert!(matches!(NeumannProblem::new(&m, g), Err(Error::IncompatibleDatum { .. })));
}

#[test]
fn projected_datum_has_zero_flux() {
    let (_, m, _) = setup(16);
    let g = m.spectral().from_fn(|p, t| 1.0 + (2.0 * PI * (p + t)).cos());
    let pr = NeumannProblem::projected(&m, g);
    assert!(m.integrate(pr.datum()).abs() < 1e-12);
}
