use lmm_core::driver::{
    find_sequence, monitor_theory, replay_acceptance, run_lmm, run_lmm_with, validate_plan, Overrides, PlanEntry,
    RunConfig, SolutionRecord, Start,
};
use lmm_core::problem::{ProblemDef, ProblemSpec, Region};
use lmm_core::LmmError;

const RES: usize = 33;

fn nlse() -> RunConfig {
    let mut cfg = RunConfig::new(ProblemSpec::Nlse { omega: 8.0 }).cg_strong_wolfe();
    cfg.resolution = RES;
    cfg
}

fn ground_state(cfg: &RunConfig) -> (ProblemDef, SolutionRecord) {
    let p = cfg.build_problem().unwrap();
    let r = run_lmm(&p, cfg, &[]).unwrap();
    (p, r)
}

#[test]
fn nlse_ground_state_converges() {
    let cfg = nlse();
    let (p, r) = ground_state(&cfg);
    assert!(r.grad_norm <= 1e-5 && r.sup_residual <= 5e-5, "{} {}", r.grad_norm, r.sup_residual);
    // coarse grid: a few percent from the fine-grid value
    assert!((r.energy - 14.7889).abs() / 14.7889 < 0.05, "E = {}", r.energy);
    assert!(r.field().values().iter().all(|&u| u > 0.0));
    assert_eq!(r.energy, p.energy(r.field()).unwrap());
    assert!(r.support_distance.is_none());
    assert_eq!(r.trace.len(), r.iterations + 1);
}

#[test]
fn stopping_test_fires_exactly_once() {
    let cfg = nlse();
    let (_, r) = ground_state(&cfg);
    let (last, body) = r.trace.split_last().unwrap();
    assert!(last.grad_norm <= cfg.grad_tol && last.sup_residual <= cfg.sup_res_tol);
    assert!(last.alpha.is_none());
    for row in body {
        assert!(!(row.grad_norm <= cfg.grad_tol && row.sup_residual <= cfg.sup_res_tol));
        assert!(row.alpha.is_some_and(|a| a > 0.0));
    }
}

#[test]
fn restart_from_solution_stops_immediately() {
    let cfg = nlse();
    let (p, r) = ground_state(&cfg);
    let again = run_lmm_with(&p, &cfg, &[], Start::Field(r.field().clone()), &mut |_| {}).unwrap();
    assert_eq!(again.iterations, 0);
    assert!((again.energy - r.energy).abs() <= 1e-10 * r.energy);
}

#[test]
fn runs_are_deterministic() {
    let cfg = nlse();
    let (_, a) = ground_state(&cfg);
    let (_, b) = ground_state(&cfg);
    assert_eq!(a.energy, b.energy);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.phi_evals, b.phi_evals);
    assert_eq!(a.field().values(), b.field().values());
}

#[test]
fn theory_monitors_hold_on_all_methods() {
    for cfg in [nlse(), nlse().sd_armijo(), nlse().sd_strong_wolfe()] {
        let (_, r) = ground_state(&cfg);
        let rep = monitor_theory(&r);
        assert!(rep.energy_nonincreasing, "{:?}", cfg.direction);
        assert!(rep.perp_norm_nondecreasing && rep.tau_nonincreasing);
        assert!(rep.dist_bound_ok);
        assert!(rep.max_peak_residual <= 1e-8);
        assert_eq!(rep.cone_violations, 0);
        assert!(rep.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert!(replay_acceptance(&r).is_empty());
    }
}

#[test]
fn observer_sees_every_iteration() {
    let cfg = nlse();
    let p = cfg.build_problem().unwrap();
    let mut ks = Vec::new();
    let r = run_lmm_with(&p, &cfg, &[], Start::Regions, &mut |v| {
        assert!(v.peak.first_order_res <= 1e-8);
        ks.push(v.k)
    })
    .unwrap();
    assert_eq!(ks, (0..r.iterations).collect::<Vec<_>>());
}

#[test]
fn second_solution_leaves_the_support() {
    let base = nlse();
    let plan = vec![
        PlanEntry::new("u1", &[], "all", "empty").unwrap(),
        PlanEntry::new("u2", &["u1"], "x1>0", "complement").unwrap(),
    ];
    let p = base.build_problem().unwrap();
    let out = find_sequence(&p, &base, &plan).unwrap();
    let u1 = out[0].result.as_ref().unwrap();
    let u2 = out[1].result.as_ref().unwrap();
    assert_eq!(u2.label, "u2");
    assert_eq!(u2.support, vec!["u1".to_string()]);
    assert!(u2.energy > 3.0 * u1.energy);
    assert!(u2.support_distance.unwrap() > 0.5);
    let rep = monitor_theory(u2);
    assert!(rep.tau_nonincreasing && rep.perp_norm_nondecreasing);
}

#[test]
fn failed_entry_skips_dependents() {
    let base = nlse();
    let mut first = PlanEntry::new("u1", &[], "all", "empty").unwrap();
    first.overrides = Overrides {
        max_outer_iters: Some(1),
        ..Default::default()
    };
    let plan = vec![
        first,
        PlanEntry::new("u2", &["u1"], "x1>0", "complement").unwrap(),
        PlanEntry::new("u3", &[], "all", "empty").unwrap(),
    ];
    let p = base.build_problem().unwrap();
    let out = find_sequence(&p, &base, &plan).unwrap();
    assert!(matches!(out[0].result, Err(LmmError::MaxIterations { .. })));
    assert!(matches!(out[1].result, Err(LmmError::Plan { entry: 2, .. })));
    assert!(out[2].result.is_ok());
}

#[test]
fn plan_checks() {
    let base = nlse();
    let p = base.build_problem().unwrap();
    assert!(find_sequence(&p, &base, &[]).unwrap().is_empty());
    let fwd = vec![
        PlanEntry::new("u1", &["u2"], "all", "empty").unwrap(),
        PlanEntry::new("u2", &[], "all", "empty").unwrap(),
    ];
    let err = validate_plan(&fwd).unwrap_err();
    assert!(err.to_string().contains("later"), "{err}");
    assert!(find_sequence(&p, &base, &fwd).is_err());
}

#[test]
fn invalid_configs_rejected() {
    let mut cfg = nlse();
    cfg.omega1 = Region::complement();
    assert!(cfg.validate().is_err());
    assert!(cfg.build_problem().is_err());
    let mut cfg = nlse();
    cfg.grad_tol = 0.0;
    assert!(cfg.validate().is_err());
}

