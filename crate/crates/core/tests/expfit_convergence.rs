use fracising::expfit::*;
use fracising::kernel::build_kernel;
use fracising::Error;

mod common;
use common::order;

fn fit(q: f64, range: usize) -> ExpSumApproximation {
    let k = build_kernel(order(q), 1.0, range).unwrap();
    fit_exponentials(&k, &FitConfig::default()).unwrap()
}

#[test]
fn q_one_and_a_half_over_a_thousand_sites() {
    let k = build_kernel(order(1.5), 1.0, 1000).unwrap();
    let approx = fit_exponentials(&k, &FitConfig::default()).unwrap();
    assert!((10..=14).contains(&approx.terms.len()), "{} terms", approx.terms.len());
    assert!(approx.sup_error <= 1e-9);
    let profile = pointwise_error_profile(&approx, &k).unwrap();
    let worst = profile.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    assert_eq!(worst, approx.sup_error);
    assert!(profile.iter().all(|p| p.1.abs() <= 1e-9));
    assert!((evaluate_expsum(&approx, 500) - k.get(500)).abs() <= 1e-9);
    assert!(approx.terms.windows(2).all(|w| w[0].b >= w[1].b));
    // escalation starts at two terms, adds one per round and never gets worse
    assert_eq!(approx.escalation[0].terms, 2);
    for w in approx.escalation.windows(2) {
        assert_eq!(w[1].terms, w[0].terms + 1);
        assert!(w[1].sup_error <= w[0].sup_error);
    }
}

#[test]
fn q_one_half_golden_term_count() {
    let approx = fit(0.5, 1000);
    assert!(approx.sup_error <= 1e-9);
    // frozen after the first converged run
    assert_eq!(approx.terms.len(), 13);
}

#[test]
fn deterministic_and_idempotent() {
    let k = build_kernel(order(2.5), 1.0, 300).unwrap();
    let cfg = FitConfig::default();
    let a = fit_exponentials(&k, &cfg).unwrap();
    let b = fit_exponentials(&k, &cfg).unwrap();
    assert_eq!(a, b);
    let again = refit(&a, k.tail(), &cfg).unwrap();
    assert!((again.sup_error - a.sup_error).abs() < 1e-12);
}

#[test]
fn capped_fit_reports_best_attempt() {
    let k = build_kernel(order(1.5), 1.0, 1000).unwrap();
    let cfg = FitConfig { max_terms: 2, ..FitConfig::default() };
    match fit_exponentials(&k, &cfg) {
        Err(Error::ToleranceNotReached { best }) => {
            assert_eq!(best.terms.len(), 2);
            assert!(best.sup_error > 1e-9);
        }
        other => panic!("expected TOLERANCE_NOT_REACHED, got {other:?}"),
    }
}
