use std::cell::Cell;

use lmm_core::stepsize::{
    check_conditions, search, search_armijo, search_exact, search_goldstein, search_wolfe, FnMerit, Merit,
    Rule, RuleParams, Sample,
};
use lmm_core::LmmError;
use proptest::prelude::*;

fn quadratic(phi0: f64, slope: f64, kappa: f64) -> impl FnMut(f64) -> lmm_core::Result<(f64, f64)> {
    move |a| Ok((phi0 + slope * a + 0.5 * kappa * a * a, slope + kappa * a))
}

fn origin<F: FnMut(f64) -> lmm_core::Result<(f64, f64)>>(m: &mut FnMerit<F>) -> Sample {
    m.eval(0.0).unwrap()
}

#[test]
fn conditions_at_zero_step() {
    let p0 = Sample { alpha: 0.0, phi: 3.0, dphi: -2.0 };
    let c = check_conditions(&p0, &p0, &RuleParams::strong_wolfe(0.1, 0.4));
    assert!(c.sufficient_decrease);
    assert!(!c.strong_curvature);
    assert!(!c.accepts(Rule::StrongWolfe));
}

#[test]
fn quadratic_acceptance_matches_closed_form_intervals() {
    let (phi0, slope, kappa) = (1.5, -2.0, 3.0);
    let g = -slope / kappa;
    let wolfe = RuleParams::strong_wolfe(0.1, 0.4);
    let gold = RuleParams::goldstein(0.2, 0.8);
    let arm = RuleParams::armijo(0.1, 0.1, 0.5);
    let mut f = quadratic(phi0, slope, kappa);
    let p0 = Sample { alpha: 0.0, phi: phi0, dphi: slope };
    for k in 1..4000 {
        let a = k as f64 * 1e-3 + 1.234_567e-5;
        let (phi, dphi) = f(a).unwrap();
        let pa = Sample { alpha: a, phi, dphi };
        let cw = check_conditions(&p0, &pa, &wolfe);
        assert_eq!(cw.sufficient_decrease, a <= 2.0 * (1.0 - 0.1) * g, "a={a}");
        assert_eq!(cw.curvature, a >= (1.0 - 0.4) * g, "a={a}");
        assert_eq!(cw.strong_curvature, a >= (1.0 - 0.4) * g && a <= (1.0 + 0.4) * g, "a={a}");
        let cg = check_conditions(&p0, &pa, &gold);
        assert_eq!(cg.goldstein_upper, a <= 2.0 * (1.0 - 0.2) * g, "a={a}");
        assert_eq!(cg.goldstein_lower, a >= 2.0 * (1.0 - 0.8) * g, "a={a}");
        let ca = check_conditions(&p0, &pa, &arm);
        assert_eq!(ca.armijo, a <= 2.0 * (1.0 - 0.1) * g, "a={a}");
    }
}

proptest! {
    #[test]
    fn strong_wolfe_implies_weak(phi in -5.0..5.0f64, dphi in -5.0..5.0f64, slope in -5.0..-0.01f64,
                                 alpha in 0.0..10.0f64, s1 in 0.01..0.3f64, s2 in 0.31..0.99f64) {
        let p0 = Sample { alpha: 0.0, phi: 0.0, dphi: slope };
        let pa = Sample { alpha, phi, dphi };
        let c = check_conditions(&p0, &pa, &RuleParams::wolfe(s1, s2));
        if c.strong_curvature {
            prop_assert!(c.curvature);
        }
        if c.accepts(Rule::StrongWolfe) {
            prop_assert!(c.accepts(Rule::Wolfe));
        }
    }
}

#[test]
fn wolfe_on_cubic_lands_in_acceptable_set() {
    let phi0 = 2.0;
    for init in [0.05, 0.3, 1.0, 4.0, 50.0] {
        let mut m = FnMerit(|a: f64| Ok((phi0 - a + a * a * a / 3.0, -1.0 + a * a)));
        let p0 = origin(&mut m);
        let params = RuleParams { alpha_init: init, ..RuleParams::strong_wolfe(0.1, 0.4) };
        let r = search_wolfe(&mut m, &p0, &params).unwrap();
        let a = r.accepted.alpha;
        assert!((0.6f64.sqrt()..=1.4f64.sqrt()).contains(&a), "init {init}: alpha {a}");
        assert!(check_conditions(&p0, &r.accepted, &params).accepts(Rule::StrongWolfe));
        assert_eq!(r.evals, r.trace.len());
    }
    let mut m = FnMerit(|a: f64| Ok((phi0 - a + a * a * a / 3.0, -1.0 + a * a)));
    let p0 = origin(&mut m);
    let r = search_wolfe(&mut m, &p0, &RuleParams::strong_wolfe(0.1, 0.4)).unwrap();
    assert_eq!((r.accepted.alpha, r.evals), (1.0, 1));
}

#[test]
fn weak_wolfe_accepts_overshoot_that_strong_rejects() {
    let params = RuleParams { alpha_init: 1.3, ..RuleParams::wolfe(0.1, 0.4) };
    let mut m = FnMerit(quadratic(0.0, -1.0, 1.0));
    let p0 = origin(&mut m);
    let r = search_wolfe(&mut m, &p0, &params).unwrap();
    assert_eq!(r.accepted.alpha, 1.3);
    let strong = RuleParams { rule: Rule::StrongWolfe, ..params };
    let mut m = FnMerit(quadratic(0.0, -1.0, 1.0));
    let r = search_wolfe(&mut m, &p0, &strong).unwrap();
    assert!(r.accepted.alpha <= 1.4 && r.accepted.alpha >= 0.6);
}

#[test]
fn invalid_trials_shrink_the_bracket() {
    // the merit is undefined beyond 0.5
    let mut m = FnMerit(|a: f64| {
        if a > 0.5 {
            Err(LmmError::DegeneratePeak { t: 0.0, t_min: 1e-6 })
        } else {
            Ok((-a + a * a, -1.0 + 2.0 * a))
        }
    });
    let p0 = origin(&mut m);
    let params = RuleParams::strong_wolfe(0.1, 0.4);
    let r = search_wolfe(&mut m, &p0, &params).unwrap();
    assert!(r.accepted.alpha <= 0.5);
    assert!(check_conditions(&p0, &r.accepted, &params).accepts(Rule::StrongWolfe));
    assert!(r.trace.iter().any(|t| !t.valid));
}

#[test]
fn unbounded_ray_reports_no_bracket() {
    let mut m = FnMerit(|a: f64| Ok((-a, -1.0)));
    let p0 = origin(&mut m);
    let err = search_wolfe(&mut m, &p0, &RuleParams::strong_wolfe(0.1, 0.4)).unwrap_err();
    assert!(err.to_string().contains("unbounded"), "{err}");
}

#[test]
fn non_descent_is_rejected() {
    let mut m = FnMerit(quadratic(0.0, 1.0, 1.0));
    let p0 = origin(&mut m);
    for params in [RuleParams::strong_wolfe(0.1, 0.4), RuleParams::armijo(0.1, 0.1, 0.5)] {
        assert!(matches!(search(&mut m, &p0, &params), Err(LmmError::NotDescent(_))));
    }
}

#[test]
fn armijo_first_trial_and_scan_oracle() {
    let params = RuleParams::armijo(0.1, 0.1, 0.5);
    let mut m = FnMerit(quadratic(0.0, -1.0, 1.0));
    let p0 = origin(&mut m);
    let r = search_armijo(&mut m, &p0, &params).unwrap();
    assert_eq!((r.accepted.alpha, r.evals), (0.1, 1));

    // steep curvature forces backtracking; compare with an exhaustive scan of m
    for kappa in [3.0, 40.0, 900.0, 1e5] {
        let phi = |a: f64| -a + 0.5 * kappa * a * a;
        let expected_m = (0..=60)
            .find(|&k| {
                let a = 0.1 * 0.5f64.powi(k);
                phi(a) <= -(0.1 * a)
            })
            .unwrap();
        let mut m = FnMerit(quadratic(0.0, -1.0, kappa));
        let p0 = origin(&mut m);
        let r = search_armijo(&mut m, &p0, &params).unwrap();
        assert_eq!(r.accepted.alpha, 0.1 * 0.5f64.powi(expected_m));
        assert_eq!(r.evals, expected_m as usize + 1);
    }
}

#[test]
fn goldstein_interval_and_validation() {
    let (slope, kappa) = (-2.0, 0.5);
    let g = -slope / kappa;
    let params = RuleParams::goldstein(0.2, 0.8);
    let mut m = FnMerit(quadratic(1.0, slope, kappa));
    let p0 = origin(&mut m);
    let r = search_goldstein(&mut m, &p0, &params).unwrap();
    let a = r.accepted.alpha;
    assert!(a >= 2.0 * 0.2 * g && a <= 2.0 * 0.8 * g, "alpha {a}");

    let calls = Cell::new(0);
    let mut counting = FnMerit(|a: f64| {
        calls.set(calls.get() + 1);
        Ok((-a, -1.0))
    });
    let bad = RuleParams { delta: 0.1, ..RuleParams::goldstein(0.2, 0.8) };
    let p0 = Sample { alpha: 0.0, phi: 0.0, dphi: -1.0 };
    assert!(matches!(search_goldstein(&mut counting, &p0, &bad), Err(LmmError::Config(_))));
    assert_eq!(calls.get(), 0);

    let mut m = FnMerit(quadratic(0.0, -1.0, 1.0));
    let p0 = origin(&mut m);
    let r = search_goldstein(&mut m, &p0, &RuleParams::goldstein(0.2, 0.8)).unwrap();
    assert_eq!((r.accepted.alpha, r.evals), (1.0, 1));
}

#[test]
fn exact_rule_finds_the_minimizer() {
    let a_star = 0.37;
    let phi = move |a: f64| -a * (-a / a_star).exp();
    let dphi = move |a: f64| -(-a / a_star).exp() * (1.0 - a / a_star);
    let mut m = FnMerit(|a: f64| Ok((phi(a), dphi(a))));
    let p0 = origin(&mut m);
    let params = RuleParams::exact();
    let r = search_exact(&mut m, &p0, &params).unwrap();
    let a = r.accepted.alpha;
    assert!((a - a_star).abs() <= 1e-5, "alpha {a}");
    assert!(dphi(a).abs() <= 1e-4 * dphi(0.0).abs());
    // the exact step is strong-Wolfe acceptable
    let sw = RuleParams::strong_wolfe(0.1, 0.4);
    assert!(check_conditions(&p0, &r.accepted, &sw).accepts(Rule::StrongWolfe));
}

#[test]
fn every_rule_replays_its_acceptance() {
    for rule in [Rule::Exact, Rule::Armijo, Rule::Goldstein, Rule::Wolfe, Rule::StrongWolfe] {
        let params = RuleParams::for_rule(rule);
        let mut m = FnMerit(|a: f64| Ok(((a - 0.8).powi(4) - 0.8f64.powi(4) - 0.2 * a, 4.0 * (a - 0.8).powi(3) - 0.2)));
        let p0 = origin(&mut m);
        let r = search(&mut m, &p0, &params).unwrap();
        assert_eq!(r.rule, rule);
        assert!(check_conditions(&p0, &r.accepted, &params).accepts(rule), "{rule}");
        assert!(r.accepted.phi < p0.phi);
    }
}

#[test]
fn parameter_validation() {
    assert!(RuleParams::strong_wolfe(0.4, 0.1).validate().is_err());
    assert!(RuleParams::strong_wolfe(0.1, 0.4).validate().is_ok());
    assert!(RuleParams::armijo(0.1, 0.1, 1.5).validate().is_err());
    assert!(RuleParams::goldstein(0.8, 0.2).validate().is_err());
    let p = RuleParams::for_rule(Rule::Armijo);
    assert_eq!((p.sigma, p.lambda, p.rho), (0.1, 0.1, 0.5));
}
