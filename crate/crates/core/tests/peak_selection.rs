use std::sync::Arc;

use lmm_core::hilbert::{build_mesh, DomainSpec, GridFunction};
use lmm_core::peak::{maximize_on_halfspace, peak_field, verify_peak, PeakOptions, PeakPoint};
use lmm_core::problem::{ProblemDef, ProblemSpec, Region};
use lmm_core::subspace::{orthonormalize, SupportBasis};
use lmm_core::LmmError;
use nalgebra::{DMatrix, SymmetricEigen};

fn problem(spec: ProblemSpec, domain: DomainSpec, res: usize) -> ProblemDef {
    let mesh = Arc::new(build_mesh(&domain, res).unwrap());
    ProblemDef::new(spec, mesh).unwrap()
}

fn direction(p: &ProblemDef, omega1: &str, omega2: &str) -> GridFunction {
    p.initial_direction(&Region::parse(omega1).unwrap(), &Region::parse(omega2).unwrap())
        .unwrap()
}

#[test]
fn cubic_peak_matches_closed_form() {
    let p = problem(ProblemSpec::Nlse { omega: 8.0 }, DomainSpec::Square, 33);
    let v = direction(&p, "x1 > 0.1", "x1 < -0.5");
    let quartic: f64 = v
        .values()
        .iter()
        .zip(p.op().weights())
        .map(|(x, w)| w * x.powi(4))
        .sum();
    let norm2 = p.op().norm(&v).powi(2);
    let t_star = (norm2 / quartic).sqrt();
    let pk = maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (1.0, &[]), &PeakOptions::default())
        .unwrap();
    assert!((pk.t - t_star).abs() <= 1e-10 * t_star, "{} vs {t_star}", pk.t);
    assert!(pk.first_order_res <= 1e-8);
    assert!(pk.value >= p.energy(&v).unwrap() - 1e-12);

    // warm start at the exact maximizer does nothing
    let again = maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (t_star, &[]), &PeakOptions::default())
        .unwrap();
    assert_eq!(again.iterations, 0);
    assert_eq!(again.t, t_star);
}

#[test]
fn dense_scan_agrees_on_coarse_grid() {
    for spec in [ProblemSpec::Chandrasekhar, ProblemSpec::Henon { ell: 6.0 }] {
        let p = problem(spec, DomainSpec::Square, 9);
        let v = direction(&p, "all", "empty");
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 1..=50_000 {
            let t = k as f64 * 1e-3;
            let e = p.energy(&v.scaled(t)).unwrap();
            if e > best.1 {
                best = (t, e);
            }
        }
        let pk = maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (1.0, &[]), &PeakOptions::default())
            .unwrap();
        assert!((pk.t - best.0).abs() <= 1e-3, "{spec:?}: {} vs scan {}", pk.t, best.0);
        assert!(pk.value >= best.1 - 1e-9);
    }
}

fn fd_hessian(p: &ProblemDef, l: &SupportBasis, v: &GridFunction, pk: &PeakPoint) -> DMatrix<f64> {
    let x0 = pk.coords();
    let n = x0.len();
    let g = |x: &[f64]| p.energy(&peak_field(l, v, x[0], &x[1..])).unwrap();
    let eps = 1e-3 * (1.0 + pk.t);
    DMatrix::from_fn(n, n, |i, j| {
        let mut pp = x0.clone();
        let mut pm = x0.clone();
        let mut mp = x0.clone();
        let mut mm = x0.clone();
        pp[i] += eps;
        pp[j] += eps;
        pm[i] += eps;
        pm[j] -= eps;
        mp[i] -= eps;
        mp[j] += eps;
        mm[i] -= eps;
        mm[j] -= eps;
        (g(&pp) - g(&pm) - g(&mp) + g(&mm)) / (4.0 * eps * eps)
    })
}

#[test]
fn peak_with_support_space_is_first_order_stationary_and_maximal() {
    let p = problem(ProblemSpec::Nlse { omega: 8.0 }, DomainSpec::Square, 25);
    let opts = PeakOptions::default();
    let u1_dir = direction(&p, "all", "empty");
    let u1 = maximize_on_halfspace(&p, &SupportBasis::empty(), &u1_dir, (1.0, &[]), &opts).unwrap();
    let l = orthonormalize(std::slice::from_ref(&u1.w), p.op()).unwrap();
    let v = direction(&p, "x1 > 0", "complement");
    let pk = maximize_on_halfspace(&p, &l, &v, (1.0, &[1.0]), &opts).unwrap();
    let res = verify_peak(&p, &l, &v, &pk, opts.t_min).unwrap();
    assert!(res.max_first_order() <= 1e-8 * p.op().norm(&pk.w).max(1.0));
    assert!(res.nehari <= 1e-6);
    assert!(!res.degenerate);
    let hess = fd_hessian(&p, &l, &v, &pk);
    let eig = SymmetricEigen::new(hess);
    assert!(eig.eigenvalues.iter().all(|&l| l <= 1e-6), "{:?}", eig.eigenvalues);

    // small perturbations of v move the peak continuously
    let bump = GridFunction::from_fn(p.mesh(), |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * x[1]);
    let bump = bump.scaled(1e-4 / p.op().norm(&bump));
    let moved = v.combine(1.0, 1.0, &bump);
    let moved = moved.scaled(1.0 / p.op().norm(&moved));
    let pk2 = maximize_on_halfspace(&p, &l, &moved, (pk.t, &pk.coeffs), &opts).unwrap();
    let shift = pk
        .coords()
        .iter()
        .zip(pk2.coords())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(shift < 1e-2, "peak moved by {shift}");
}

#[test]
fn zero_peak_is_flagged_degenerate() {
    let p = problem(ProblemSpec::Nlse { omega: 8.0 }, DomainSpec::Square, 9);
    let v = direction(&p, "all", "empty");
    let pk = PeakPoint {
        t: 0.0,
        coeffs: vec![],
        w: GridFunction::zeros(p.mesh()),
        value: 0.0,
        first_order_res: 0.0,
        iterations: 0,
    };
    let res = verify_peak(&p, &SupportBasis::empty(), &v, &pk, 1e-6).unwrap();
    assert_eq!(res.along_v, 0.0);
    assert_eq!(res.nehari, 0.0);
    assert!(res.degenerate);
}

#[test]
fn invalid_inputs() {
    let p = problem(ProblemSpec::Nlse { omega: 8.0 }, DomainSpec::Square, 9);
    let v = direction(&p, "all", "empty");
    let opts = PeakOptions::default();
    assert!(matches!(
        maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (0.0, &[]), &opts),
        Err(LmmError::PeakSearch(_))
    ));
    assert!(matches!(
        maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (1.0, &[0.5]), &opts),
        Err(LmmError::LengthMismatch { .. })
    ));
}

#[test]
fn collapse_toward_support_space_is_degenerate() {
    // L = span{ψ} with ψ not a solution; v ⟂ ψ chosen so that ∂g/∂t < 0 at t = 0
    let p = problem(ProblemSpec::Nlse { omega: 8.0 }, DomainSpec::Square, 17);
    let opts = PeakOptions::default();
    let psi = direction(&p, "all", "empty");
    let ray = maximize_on_halfspace(&p, &SupportBasis::empty(), &psi, (1.0, &[]), &opts).unwrap();
    let l = orthonormalize(std::slice::from_ref(&psi), p.op()).unwrap();
    // z = A⁻¹(W ψ³) is the Riesz representer of φ ↦ ∫ψ³φ
    let z = psi.combine(1.0, -1.0, &p.gradient(&psi).unwrap());
    let v = l.remove_from(&z);
    let v = v.scaled(1.0 / p.op().norm(&v));
    let out = maximize_on_halfspace(&p, &l, &v, (1e-2, &[ray.t]), &opts);
    match out {
        Err(LmmError::DegeneratePeak { t, .. }) => assert!(t < 1e-6),
        Ok(pk) => panic!("expected a degenerate peak, got t = {}", pk.t),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn unbounded_energy_is_detected() {
    // Chandrasekhar f vanishes for u ≤ 0, so E(t·v) = t²/2 along a negative v
    let p = problem(ProblemSpec::Chandrasekhar, DomainSpec::Square, 9);
    let v = direction(&p, "empty", "all");
    assert!(v.values().iter().all(|&x| x < 0.0));
    let out = maximize_on_halfspace(&p, &SupportBasis::empty(), &v, (1.0, &[]), &PeakOptions::default());
    assert!(matches!(out, Err(LmmError::Unbounded(_))), "{out:?}");
}
