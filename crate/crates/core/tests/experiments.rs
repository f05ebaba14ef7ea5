use circdom::harness::builtins;
use circdom::harness::{sibner_pipeline, SibnerOptions, TestMap};
use num_complex::Complex64;

#[test]
fn sibner_shear_composition_is_conformal() {
    let rep = sibner_pipeline(
        &builtins::two_circles(),
        TestMap::Shear { c: Complex64::new(0.25, 0.0) },
        SibnerOptions::default(),
    )
    .unwrap();
    assert!(rep.residual_l2 < 0.02, "{}", rep.residual_l2);
    assert!(rep.circle_fits.iter().all(|f| f.deviation < 0.02));
    assert!(rep.solve.convergence_ratio <= 0.25 + 0.05);
    assert_eq!(rep.unresolved_cells, 0);
}

#[test]
fn sibner_radial_stretch() {
    let rep = sibner_pipeline(&builtins::two_circles(), TestMap::RadialStretch { a: 0.5 }, SibnerOptions::default()).unwrap();
    assert!(rep.residual_l2 < 0.02, "{}", rep.residual_l2);
    assert!(rep.circle_fits.iter().all(|f| f.deviation < 0.02));
}

#[test]
fn sibner_identity_is_exact() {
    let rep = sibner_pipeline(&builtins::three_circles(), TestMap::Identity, SibnerOptions::default()).unwrap();
    assert_eq!(rep.solve.iterations, 0);
    assert!(rep.residual_max <= 1e-8);
}

#[test]
fn non_invariant_shear_bends_circles() {
    // the same shear without the reflection-invariant extension
    let d = builtins::two_circles();
    let bbox = circdom::field::Bbox::square(4.5).unwrap();
    let mu = circdom::field::GridField::sample(
        |z| Some(Complex64::new(if z.norm() < 3.5 { 0.25 } else { 0.0 }, 0.0)),
        bbox,
        512,
        512,
    )
    .unwrap()
    .field;
    let rep = circdom::harness::rigidity_check(&d, &mu, Default::default()).unwrap();
    assert!(rep.max_deviation > 0.05, "{}", rep.max_deviation);
}
