//! Support-space algebra in the `a`-inner product: orthonormal bases of `L`,
//! the splitting `v = v^L + v^⊥`, projections onto `[L, v]^⊥` and the
//! normalized update `v(α) = (v + αd)/√(1 + α²‖d‖²)`.

use crate::error::{LmmError, Result};
use crate::hilbert::{EllipticOperator, GridFunction};
use crate::problem::dot;

/// Loss of orthogonality that triggers a second Gram-Schmidt pass.
const REORTHO_TOL: f64 = 1e-8;
/// Relative residual below which an input is treated as dependent.
const RANK_TOL: f64 = 1e-10;
/// Orthogonality slack accepted on directions handed in by callers.
pub const ORTHO_TOL: f64 = 1e-8;

/// An `a`-orthonormal basis `e₁..e_{n−1}` of the support space `L`.
#[derive(Debug, Clone, Default)]
pub struct SupportBasis {
    basis: Vec<GridFunction>,
    // A·eⱼ, so that (x, eⱼ)_a is a plain dot product
    a_basis: Vec<Vec<f64>>,
    sources: Vec<String>,
}

impl SupportBasis {
    /// `L = {0}`.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
    pub fn basis(&self) -> &[GridFunction] {
        &self.basis
    }
    /// Labels of the solutions that spanned `L`.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// `(x, eⱼ)_a` for every `j`.
    pub fn coefficients(&self, x: &GridFunction) -> Vec<f64> {
        self.a_basis.iter().map(|ae| dot(x.values(), ae)).collect()
    }

    /// `Σ cⱼ eⱼ` added onto `acc`.
    pub fn add_combination(&self, acc: &mut GridFunction, c: &[f64]) {
        debug_assert_eq!(c.len(), self.dim());
        for (e, &cj) in self.basis.iter().zip(c) {
            if cj != 0.0 {
                acc.axpy(cj, e);
            }
        }
    }

    /// `x − Σ (x, eⱼ)_a eⱼ`, the `L^⊥` component of `x`.
    pub fn remove_from(&self, x: &GridFunction) -> GridFunction {
        let c = self.coefficients(x);
        let mut r = x.clone();
        self.add_combination(&mut r, &c.iter().map(|v| -v).collect::<Vec<_>>());
        r
    }
}

/// Modified Gram-Schmidt in the `a`-inner product.
pub fn orthonormalize(solutions: &[GridFunction], op: &EllipticOperator) -> Result<SupportBasis> {
    let labelled: Vec<(String, GridFunction)> = solutions
        .iter()
        .enumerate()
        .map(|(i, u)| (format!("u{}", i + 1), u.clone()))
        .collect();
    orthonormalize_labelled(&labelled, op)
}

/// [`orthonormalize`] keeping a label for each input.
pub fn orthonormalize_labelled(
    solutions: &[(String, GridFunction)],
    op: &EllipticOperator,
) -> Result<SupportBasis> {
    let mut out = SupportBasis::empty();
    for (index, (label, u)) in solutions.iter().enumerate() {
        u.check_mesh(op.mesh_id())?;
        let input_norm = op.norm(u);
        if input_norm == 0.0 {
            return Err(LmmError::RankDeficient { index });
        }
        let mut r = u.clone();
        for pass in 0..2 {
            for (e, ae) in out.basis.iter().zip(&out.a_basis) {
                let c = dot(r.values(), ae);
                r.axpy(-c, e);
            }
            let rn = op.norm(&r);
            if rn <= RANK_TOL * input_norm {
                return Err(LmmError::RankDeficient { index });
            }
            let loss = out
                .coefficients(&r)
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()))
                / rn;
            if loss <= REORTHO_TOL {
                break;
            }
            log::debug!("reorthogonalizing input {index} (loss {loss:.2e}, pass {pass})");
        }
        let rn = op.norm(&r);
        let e = r.scaled(1.0 / rn);
        out.a_basis.push(op.apply_slice(e.values()));
        out.basis.push(e);
        out.sources.push(label.clone());
    }
    Ok(out)
}

/// A point `v` on the unit sphere split as `v = v^L + v^⊥`.
#[derive(Debug, Clone)]
pub struct SphereState {
    v: GridFunction,
    v_l: GridFunction,
    v_perp: GridFunction,
    coeffs: Vec<f64>,
    perp_norm: f64,
}

impl SphereState {
    pub fn v(&self) -> &GridFunction {
        &self.v
    }
    pub fn v_l(&self) -> &GridFunction {
        &self.v_l
    }
    pub fn v_perp(&self) -> &GridFunction {
        &self.v_perp
    }
    /// `(v, eⱼ)_a`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    /// `‖v^⊥‖_a`.
    pub fn perp_norm(&self) -> f64 {
        self.perp_norm
    }
    /// `‖v^L‖_a`.
    pub fn l_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Renormalizes `v` and splits it along `L`.
pub fn decompose(v: &GridFunction, l: &SupportBasis, op: &EllipticOperator) -> Result<SphereState> {
    v.check_mesh(op.mesh_id())?;
    let n = op.norm(v);
    if !(n > 0.0) {
        return Err(LmmError::ZeroDirection);
    }
    if (n - 1.0).abs() > 1e-8 {
        log::debug!("decompose: renormalizing v with norm {n:.12}");
    }
    let v = v.scaled(1.0 / n);
    let coeffs = l.coefficients(&v);
    let mut v_l = GridFunction::zeros(op.mesh());
    l.add_combination(&mut v_l, &coeffs);
    let v_perp = v.combine(1.0, -1.0, &v_l);
    let perp_norm = op.norm(&v_perp);
    if perp_norm <= RANK_TOL {
        return Err(LmmError::DirectionInSupport);
    }
    Ok(SphereState {
        v,
        v_l,
        v_perp,
        coeffs,
        perp_norm,
    })
}

/// `Π d = d − (d, v^⊥)_a/‖v^⊥‖² · v^⊥` for `d ∈ L^⊥`.
///
/// A `d` with components in `L` beyond [`ORTHO_TOL`] is first projected
/// onto `L^⊥`.
pub fn project_out(
    d_prev: &GridFunction,
    state: &SphereState,
    l: &SupportBasis,
    op: &EllipticOperator,
) -> Result<GridFunction> {
    d_prev.check_mesh(op.mesh_id())?;
    let dn = op.norm(d_prev);
    let leak = l
        .coefficients(d_prev)
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let d = if leak > ORTHO_TOL * dn.max(f64::MIN_POSITIVE) {
        log::warn!("project_out: direction has L-component {leak:.3e}, re-projecting");
        l.remove_from(d_prev)
    } else {
        d_prev.clone()
    };
    let c = op.inner_unchecked(d.values(), state.v_perp.values())
        / (state.perp_norm * state.perp_norm);
    Ok(d.combine(1.0, -c, &state.v_perp))
}

/// Orthogonal projection of an arbitrary `x` onto `[L, v]^⊥`.
pub fn project_complement(
    x: &GridFunction,
    state: &SphereState,
    l: &SupportBasis,
    op: &EllipticOperator,
) -> Result<GridFunction> {
    x.check_mesh(op.mesh_id())?;
    let r = l.remove_from(x);
    let c = op.inner_unchecked(r.values(), state.v_perp.values())
        / (state.perp_norm * state.perp_norm);
    Ok(r.combine(1.0, -c, &state.v_perp))
}

/// Largest of `|(d, v)_a|` and `|(d, eⱼ)_a|`.
pub fn orthogonality_residual(
    d: &GridFunction,
    state: &SphereState,
    l: &SupportBasis,
    op: &EllipticOperator,
) -> f64 {
    let dv = op.inner_unchecked(d.values(), state.v.values()).abs();
    l.coefficients(d).iter().fold(dv, |m, c| m.max(c.abs()))
}

/// `v(α) = (v + αd)/√(1 + α²‖d‖²)`, split along `L`.
pub fn normalized_update(
    state: &SphereState,
    d: &GridFunction,
    alpha: f64,
    l: &SupportBasis,
    op: &EllipticOperator,
) -> Result<SphereState> {
    d.check_mesh(op.mesh_id())?;
    if !alpha.is_finite() {
        return Err(LmmError::NonFinite(format!("step size {alpha}")));
    }
    let dn = op.norm(d);
    let res = orthogonality_residual(d, state, l, op);
    if res > ORTHO_TOL * dn.max(1.0) {
        return Err(LmmError::NotOrthogonal(res));
    }
    if alpha == 0.0 {
        return Ok(state.clone());
    }
    let scale = 1.0 / (1.0 + alpha * alpha * dn * dn).sqrt();
    let v = state.v.combine(scale, alpha * scale, d);
    decompose(&v, l, op)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{DMatrix, DVector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::hilbert::{assemble_operator, build_mesh, DomainSpec};

    fn op(res: usize) -> EllipticOperator {
        let mesh = Arc::new(build_mesh(&DomainSpec::Square, res).unwrap());
        assemble_operator(mesh, |x| 8.0 * (x[0] * x[0] + x[1] * x[1])).unwrap()
    }

    fn random_field(op: &EllipticOperator, rng: &mut StdRng) -> GridFunction {
        let vals = (0..op.mesh().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridFunction::from_values(op.mesh(), vals).unwrap()
    }

    fn unit(op: &EllipticOperator, u: GridFunction) -> GridFunction {
        let n = op.norm(&u);
        u.scaled(1.0 / n)
    }

    fn ip(op: &EllipticOperator, a: &GridFunction, b: &GridFunction) -> f64 {
        op.inner_unchecked(a.values(), b.values())
    }

    /// Projection onto span(spanning)^⊥ through the normal equations.
    fn brute_projection(op: &EllipticOperator, spanning: &[GridFunction], d: &GridFunction) -> GridFunction {
        let m = spanning.len();
        let g = DMatrix::from_fn(m, m, |i, j| ip(op, &spanning[i], &spanning[j]));
        let b = DVector::from_fn(m, |i, _| ip(op, &spanning[i], d));
        let c = g.lu().solve(&b).unwrap();
        let mut r = d.clone();
        for (s, ci) in spanning.iter().zip(c.iter()) {
            r.axpy(-ci, s);
        }
        r
    }

    #[test]
    fn single_solution_is_normalized() {
        let op = op(9);
        let u = GridFunction::from_fn(op.mesh(), |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]));
        let l = orthonormalize(std::slice::from_ref(&u), &op).unwrap();
        let expected = u.scaled(1.0 / op.norm(&u));
        for (a, b) in l.basis()[0].values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(l.sources(), ["u1".to_string()]);
    }

    #[test]
    fn gram_matrix_is_identity() {
        let op = op(11);
        let mut rng = StdRng::seed_from_u64(3);
        let inputs: Vec<_> = (0..3).map(|_| random_field(&op, &mut rng)).collect();
        let l = orthonormalize(&inputs, &op).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let g = ip(&op, &l.basis()[i], &l.basis()[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-10, "G[{i}{j}] = {g}");
            }
        }
        // every input is reconstructed by its coefficients
        for u in &inputs {
            let c = l.coefficients(u);
            let mut rec = GridFunction::zeros(op.mesh());
            l.add_combination(&mut rec, &c);
            let err = op.norm(&rec.combine(1.0, -1.0, u)) / op.norm(u);
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn orthogonal_pair_spans_itself() {
        let op = op(9);
        let u1 = GridFunction::from_fn(op.mesh(), |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]));
        // odd in x1 against an even field: a-orthogonal on the symmetric grid
        let u2 = GridFunction::from_fn(op.mesh(), |x| x[0] * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]));
        assert!(ip(&op, &u1, &u2).abs() < 1e-12);
        let l = orthonormalize(&[u1.clone(), u2.clone()], &op).unwrap();
        let e2 = unit(&op, u2);
        for (a, b) in l.basis()[1].values().iter().zip(e2.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dependent_inputs_are_rejected() {
        let op = op(9);
        let mut rng = StdRng::seed_from_u64(5);
        let u = random_field(&op, &mut rng);
        let w = random_field(&op, &mut rng);
        let combo = u.combine(2.0, -0.5, &w);
        let err = orthonormalize(&[u, w, combo], &op).unwrap_err();
        assert!(matches!(err, LmmError::RankDeficient { index: 2 }));
    }

    #[test]
    fn decompose_cases() {
        let op = op(9);
        let mut rng = StdRng::seed_from_u64(7);
        let v = unit(&op, random_field(&op, &mut rng));
        let s = decompose(&v, &SupportBasis::empty(), &op).unwrap();
        assert_eq!(s.v_l().max_abs(), 0.0);
        assert!((s.perp_norm() - 1.0).abs() < 1e-12);

        let l = orthonormalize(&[random_field(&op, &mut rng), random_field(&op, &mut rng)], &op).unwrap();
        assert!(matches!(
            decompose(&l.basis()[0], &l, &op),
            Err(LmmError::DirectionInSupport)
        ));
        let s = decompose(&v, &l, &op).unwrap();
        let pyth = s.l_norm().powi(2) + s.perp_norm().powi(2);
        assert!((pyth - 1.0).abs() < 1e-10);
        for e in l.basis() {
            assert!(ip(&op, s.v_perp(), e).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_matches_brute_force() {
        let op = op(11);
        let mut rng = StdRng::seed_from_u64(11);
        let l = orthonormalize(&[random_field(&op, &mut rng), random_field(&op, &mut rng)], &op).unwrap();
        let v = unit(&op, random_field(&op, &mut rng));
        let s = decompose(&v, &l, &op).unwrap();
        for _ in 0..5 {
            let d = l.remove_from(&random_field(&op, &mut rng));
            let r = project_out(&d, &s, &l, &op).unwrap();
            let mut spanning = l.basis().to_vec();
            spanning.push(s.v().clone());
            let oracle = brute_projection(&op, &spanning, &d);
            let err = op.norm(&r.combine(1.0, -1.0, &oracle));
            assert!(err < 1e-10 * op.norm(&d));
            assert!(orthogonality_residual(&r, &s, &l, &op) < 1e-10 * op.norm(&d));
            // idempotent
            let rr = project_out(&r, &s, &l, &op).unwrap();
            assert!(op.norm(&rr.combine(1.0, -1.0, &r)) < 1e-10 * op.norm(&r));
            // the general projector agrees on L^⊥ inputs and handles arbitrary ones
            let pc = project_complement(&d, &s, &l, &op).unwrap();
            assert!(op.norm(&pc.combine(1.0, -1.0, &r)) < 1e-10 * op.norm(&d));
        }
        // L-leaking input falls back to full projection
        let raw = random_field(&op, &mut rng);
        let r = project_out(&raw, &s, &l, &op).unwrap();
        assert!(orthogonality_residual(&r, &s, &l, &op) < 1e-10 * op.norm(&raw));
    }

    #[test]
    fn projection_trivial_cases() {
        let op = op(9);
        let mut rng = StdRng::seed_from_u64(13);
        let v = unit(&op, random_field(&op, &mut rng));
        let s = decompose(&v, &SupportBasis::empty(), &op).unwrap();
        let l = SupportBasis::empty();
        let r = project_out(s.v_perp(), &s, &l, &op).unwrap();
        assert!(op.norm(&r) < 1e-12);
        let d = project_complement(&random_field(&op, &mut rng), &s, &l, &op).unwrap();
        let r = project_out(&d, &s, &l, &op).unwrap();
        assert!(op.norm(&r.combine(1.0, -1.0, &d)) < 1e-12 * op.norm(&d));
    }

    #[test]
    fn normalized_update_geometry() {
        let op = op(11);
        let mut rng = StdRng::seed_from_u64(17);
        let l = orthonormalize(&[random_field(&op, &mut rng)], &op).unwrap();
        for _ in 0..100 {
            let v = unit(&op, random_field(&op, &mut rng));
            let s = decompose(&v, &l, &op).unwrap();
            let d = project_complement(&random_field(&op, &mut rng), &s, &l, &op)
                .unwrap()
                .scaled(rng.gen_range(0.1..3.0));
            let dn = op.norm(&d);
            let alpha = rng.gen_range(0.0..5.0);
            let step = rng.gen_range(-2.0..2.0);
            let a = normalized_update(&s, &d, alpha, &l, &op).unwrap();
            let b = normalized_update(&s, &d, alpha + step, &l, &op).unwrap();
            // Lemma 3.1
            let gap = op.norm(&b.v().combine(1.0, -1.0, a.v()));
            assert!(gap <= step.abs() * dn * (1.0 + 1e-12), "{gap} > {}", step.abs() * dn);
            // denominator identity
            let raw = v.combine(1.0, alpha, &d);
            assert!((op.norm(&raw) - (1.0 + alpha * alpha * dn * dn).sqrt()).abs() < 1e-10 * op.norm(&raw));
            assert!(a.perp_norm() >= s.perp_norm() * (1.0 - 1e-12));
            assert!(a.l_norm() <= s.l_norm() * (1.0 + 1e-12));
            assert!((op.norm(a.v()) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn update_rejects_non_orthogonal_direction() {
        let op = op(9);
        let mut rng = StdRng::seed_from_u64(19);
        let v = unit(&op, random_field(&op, &mut rng));
        let s = decompose(&v, &SupportBasis::empty(), &op).unwrap();
        let same = normalized_update(&s, &random_field(&op, &mut rng).scaled(0.0), 0.0, &SupportBasis::empty(), &op).unwrap();
        assert_eq!(same.v(), s.v());
        let err = normalized_update(&s, &v, 0.5, &SupportBasis::empty(), &op).unwrap_err();
        assert!(matches!(err, LmmError::NotOrthogonal(_)));
    }
}
