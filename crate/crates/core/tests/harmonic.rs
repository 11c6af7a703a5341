use torus_shape::axisym::AxisymTorus;
use torus_shape::harmonic::{
    check_admissible, circulation, compute_harmonic, detect_linearized, linearization_spread, normalize_toroidal,
    CIRCULATION_TOL,
};
use torus_shape::neumann::{NeumannOperator, NeumannOptions};
use torus_shape::surface::{compute_metric, tori};

#[test]
fn perturbed_torus_field_has_unit_circulation_and_twist() {
    let s = tori::perturbed(2.0, 1.0, 0.1, (2, 1), (32, 32)).unwrap();
    let m = compute_metric(&s);
    let op = NeumannOperator::new(&s, &m, NeumannOptions::default()).unwrap();
    let h = compute_harmonic(&s, &m, &op).unwrap();
    assert_eq!(h.circulation.len(), 32);
    assert!(h.max_circulation_error() <= CIRCULATION_TOL);
    for c in circulation(&m, &h.b).iter().step_by(4) {
        assert!((c - 1.0).abs() <= CIRCULATION_TOL, "{c}");
    }
    assert!(h.b.theta.iter().fold(0.0f64, |a, v| a.max(v.abs())) > 1e-4);
    let report = check_admissible(&h);
    assert!(report.admissible && report.b_phi_min > 0.0);
    let x = normalize_toroidal(&h).unwrap();
    assert!(detect_linearized(&x, 1e-8).is_none());
    assert!(linearization_spread(&x) > 1e-8);
}

#[test]
fn axisymmetric_field_is_linearized_with_zero_rotation() {
    let torus = AxisymTorus::new(2.0, 1.0).unwrap();
    let s = torus.surface((32, 32)).unwrap();
    let m = compute_metric(&s);
    let op = NeumannOperator::new(&s, &m, NeumannOptions::default()).unwrap();
    let h = compute_harmonic(&s, &m, &op).unwrap();
    let exact = torus.exact_field((32, 32));
    let err = (&h.b.phi - &exact.phi).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(err < 1e-10 * exact.phi.iter().fold(0.0f64, |a, v| a.max(*v)));
    let lin = detect_linearized(&normalize_toroidal(&h).unwrap(), 1e-8).unwrap();
    assert!(lin.omega.abs() < 1e-10);
    let ratio = &lin.chi / &exact.phi;
    let spread = ratio.iter().fold(0.0f64, |a, v| a.max((v - 1.0).abs()));
    assert!(spread < 1e-8, "{spread}");
}
