use bicontact_core::classifier::{classify_region, Aggregate, NormalForm, Region, SymmetryDim};
use bicontact_core::invariants::{defect, Tolerances, DEFAULT_ORDER};
use bicontact_core::symmetry::{make_fixture, verify_symmetry, FixtureSpec, PlaneField};
use bicontact_core::{parse_expression, ContactPair, Orientation, Params};

fn tol() -> Tolerances {
    Tolerances { zero: 1e-7, ..Default::default() }
}

fn small(region: &Region) -> Region {
    Region::new(region.x, region.y, region.p, [3, 3, 3]).unwrap()
}

#[test]
fn standard_fixtures_classify_to_their_own_type() {
    for kind in NormalForm::ALL {
        let fx = make_fixture(FixtureSpec::standard(kind), None, 1e-6).unwrap();
        let report = classify_region(&fx.pair, &small(&fx.region), DEFAULT_ORDER, &tol()).unwrap();
        assert_eq!(report.aggregate, Aggregate::Type(kind), "{}", fx.pair.f);
        assert_eq!(report.unanimity, 1.0);
        assert_eq!(report.symmetry_dim, Some(kind.symmetry_dim()));
        assert!(report.excluded.is_empty());
    }
}

#[test]
fn listed_generators_are_symmetries() {
    for kind in NormalForm::ALL {
        let fx = make_fixture(FixtureSpec::standard(kind), None, 1e-6).unwrap();
        let dim = match kind.symmetry_dim() {
            SymmetryDim::Finite(n) => n as usize,
            SymmetryDim::Infinite => 0,
        };
        assert!(fx.generators.len() >= dim.min(1), "{kind:?}");
        for g in &fx.generators {
            let check = verify_symmetry(&fx.pair, g, &fx.region, 1e-10, 1e-6);
            assert!(check.passed, "{kind:?} ({}, {}): {}", g.u, g.v, check.max_residual);
        }
    }
}

#[test]
fn negative_controls_fail() {
    let fx = make_fixture(FixtureSpec::standard(NormalForm::II2), None, 1e-6).unwrap();
    let dy = PlaneField::parse("0", "1", Params::new()).unwrap();
    let check = verify_symmetry(&fx.pair, &dy, &fx.region, 1e-10, 1e-6);
    assert!(!check.passed && check.max_residual > 1e-3);

    let perturbed = ContactPair::parse("y+p^3+0.1*x*p", Params::new()).unwrap();
    let region = Region::centered(0.2, [0.3, 0.7], 3).unwrap();
    let report = classify_region(&perturbed, &region, DEFAULT_ORDER, &tol()).unwrap();
    assert_eq!(report.aggregate, Aggregate::None);
    let worst = [defect::K_K1, defect::K_H1, defect::K_RICCATI]
        .map(|k| report.max_defects[k])
        .into_iter()
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{:?}", report.max_defects);
}

#[test]
fn opposite_orientation_for_negative_parameters() {
    let fx = make_fixture(FixtureSpec::I1 { c: -1.0 }, None, 1e-6).unwrap();
    assert_eq!(fx.orientation, Orientation::Opposite);
    let fx = make_fixture(FixtureSpec::I1 { c: 4.0 }, None, 1e-6).unwrap();
    assert_eq!(fx.orientation, Orientation::Common);
    let report = classify_region(&fx.pair, &small(&fx.region), DEFAULT_ORDER, &tol()).unwrap();
    assert_eq!(report.aggregate, Aggregate::Type(NormalForm::I1));
}

#[test]
fn moebius_profile_collapses_to_the_parabolic_pair() {
    // with g(p) = p + 1 the composed pair is f = 1/(2 - p) after an affine
    // change of p, so S vanishes and I is the constant 2
    let spec = FixtureSpec::III1 {
        a: parse_expression("y").unwrap(),
        b: parse_expression("y+1").unwrap(),
        g: parse_expression("p+1").unwrap(),
    };
    let fx = make_fixture(spec, None, 1e-6).unwrap();
    let report = classify_region(&fx.pair, &small(&fx.region), DEFAULT_ORDER, &tol()).unwrap();
    assert_eq!(report.aggregate, Aggregate::Type(NormalForm::I2));
    assert!(report.points.iter().all(|v| (v.record.i.abs() - 2.0).abs() < 1e-9));
}

#[test]
fn iii1_consistency_identity_holds_on_the_fixture() {
    let fx = make_fixture(FixtureSpec::standard(NormalForm::III1), None, 1e-6).unwrap();
    let report = classify_region(&fx.pair, &small(&fx.region), DEFAULT_ORDER, &tol()).unwrap();
    assert!(report.max_defects[defect::N1_M2] < 1e-6);
    assert!(report.max_defects[defect::N1_M2_SIGNED] < 1e-6);
}
