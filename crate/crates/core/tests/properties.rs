mod common;

use bicontact_core::frames::FrameJets;
use bicontact_core::invariants::{defect, InvariantRecord, Tolerances, DEFAULT_ORDER};
use bicontact_core::jet::{multi_indices, Jet};
use bicontact_core::{evaluate, evaluate_jet, parse_expression, ContactPair, Params, Point, Var};
use common::{admissible_pair_source, point, rel, smooth_expr};
use proptest::prelude::*;

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_then_parsing_is_stable(e in smooth_expr(), q in point(1.0)) {
        let printed = e.to_string();
        let reparsed = parse_expression(&printed).unwrap();
        prop_assert_eq!(reparsed.to_string(), printed.clone());
        let params = Params::new();
        let (a, b) = (evaluate(&e, q, &params).unwrap(), evaluate(&reparsed, q, &params).unwrap());
        prop_assert!(a == b || rel(a, b) < 1e-14, "{} vs {} for {}", a, b, printed);
    }

    #[test]
    fn jet_value_matches_evaluation(e in smooth_expr(), q in point(1.0), order in 0usize..4) {
        let params = Params::new();
        let jet = evaluate_jet(&e, q, order, &params).unwrap();
        let v = evaluate(&e, q, &params).unwrap();
        prop_assert!(rel(jet.value(), v) < 1e-12);
    }

    #[test]
    fn truncation_agrees_with_lower_order(e in smooth_expr(), q in point(1.0)) {
        let params = Params::new();
        let high = evaluate_jet(&e, q, 4, &params).unwrap();
        for order in 0..4 {
            let low = evaluate_jet(&e, q, order, &params).unwrap();
            prop_assert!(close(&high.truncate(order), &low, 1e-10));
        }
    }

    #[test]
    fn jet_partials_match_symbolic_derivatives(e in smooth_expr(), q in point(1.0)) {
        let params = Params::new();
        let jet = evaluate_jet(&e, q, 3, &params).unwrap();
        for var in [Var::X, Var::Y, Var::P] {
            let sym = evaluate_jet(&e.derivative(var), q, 2, &params).unwrap();
            prop_assert!(close(&jet.partial(var).unwrap(), &sym, 1e-9));
        }
    }

    #[test]
    fn jets_form_a_commutative_ring(
        a in smooth_expr(), b in smooth_expr(), c in smooth_expr(), q in point(1.0)
    ) {
        let params = Params::new();
        let [ja, jb, jc] = [a, b, c].map(|e| evaluate_jet(&e, q, 3, &params).unwrap());
        prop_assert!(close(&(&ja * &jb), &(&jb * &ja), 1e-12));
        prop_assert!(close(&(&ja + &jb), &(&jb + &ja), 1e-12));
        prop_assert!(close(&(&(&ja * &jb) * &jc), &(&ja * &(&jb * &jc)), 1e-10));
        prop_assert!(close(&(&ja * &(&jb + &jc)), &(&(&ja * &jb) + &(&ja * &jc)), 1e-10));
        let one = Jet::constant(1.0, q, 3);
        prop_assert!(close(&(&ja * &one), &ja, 0.0));
        prop_assert!(close(&(&ja - &ja), &Jet::zero(q, 3), 0.0));
    }

    #[test]
    fn reciprocal_inverts(a in smooth_expr(), q in point(1.0)) {
        let params = Params::new();
        let j = evaluate_jet(&a, q, 3, &params).unwrap();
        prop_assume!(j.value().abs() > 0.1);
        let prod = &j * &j.recip().unwrap();
        prop_assert!(close(&prod, &Jet::constant(1.0, q, 3), 1e-9));
    }

    #[test]
    fn schwarzian_identity_on_random_pairs(src in admissible_pair_source(), q in point(0.3)) {
        let q = Point::new(q.x, q.y, q.p + 0.5);
        let pair = ContactPair::parse(&src, Params::new()).unwrap();
        let rec = InvariantRecord::compute(&pair, q, 4, &Tolerances::default());
        prop_assume!(rec.sigma.is_some());
        let d = rec.defects[defect::SCHWARZIAN_IDENTITY];
        prop_assert!(d < 1e-9, "{} at {}: {}", src, q, d);
    }

    #[test]
    fn relabeling_negates_the_generating_invariant(src in admissible_pair_source(), q in point(0.3)) {
        let q = Point::new(q.x, q.y, q.p + 0.5);
        let pair = ContactPair::parse(&src, Params::new()).unwrap();
        let fr = FrameJets::at(&pair, q, 2, 1e-6).unwrap();
        let swapped = fr.relabeled();
        prop_assert!((swapped.i.value() + fr.i.value()).abs() < 1e-12);
        prop_assert_eq!(swapped.x.values(), fr.x.values());
        // the relabeled coframe is still dual to the relabeled frame
        for (v, w) in [(&swapped.d, &swapped.alpha), (&swapped.d_t, &swapped.alpha_t)] {
            prop_assert!((v.pair(w).value() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn default_order_covers_every_index() {
    assert_eq!(multi_indices(DEFAULT_ORDER).len(), 165);
}
