//! Local peak selection: maximize `g(t, c) = E(t·v + Σ cⱼ eⱼ)` over the half
//! subspace `t ≥ 0`.
//!
//! The coordinates are few (`1 + dim L`), so `g`, its gradient and its exact
//! Hessian reduce to small dense quantities plus weighted node sums. The
//! ascent is a Newton iteration whose Hessian has its eigenvalues reflected
//! and floored (so every step is uphill), with backtracking.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{LmmError, Result};
use crate::hilbert::GridFunction;
use crate::problem::{dot, ProblemDef};
use crate::subspace::SupportBasis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// First-order tolerance on `|⟨E′(w), v⟩|`, `|⟨E′(w), eⱼ⟩|`.
    pub inner_tol: f64,
    pub t_min: f64,
    pub max_iters: usize,
    /// `g` above this is reported as unbounded.
    pub overflow: f64,
    /// Longest step relative to `max(‖(t, c)‖, 1)`.
    pub max_step: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            inner_tol: 1e-8,
            t_min: 1e-6,
            max_iters: 200,
            overflow: 1e15,
            max_step: 0.25,
        }
    }
}

/// `p(v) = t·v + Σ cⱼ eⱼ`.
#[derive(Debug, Clone)]
pub struct PeakPoint {
    pub t: f64,
    pub coeffs: Vec<f64>,
    pub w: GridFunction,
    pub value: f64,
    /// `max(|⟨E′(w), v⟩|, |⟨E′(w), eⱼ⟩|)`.
    pub first_order_res: f64,
    pub iterations: usize,
}

impl PeakPoint {
    /// Coordinates `(t, c₁, …)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut x = vec![self.t];
        x.extend_from_slice(&self.coeffs);
        x
    }
}

/// Residuals of Lemma 2.2 at a peak.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakResiduals {
    pub along_v: f64,
    pub along_l: Vec<f64>,
    /// `|⟨E′(w), w⟩|`
    pub nehari: f64,
    pub degenerate: bool,
}

impl PeakResiduals {
    pub fn max_first_order(&self) -> f64 {
        self.along_l.iter().fold(self.along_v, |m, r| m.max(*r))
    }
}

/// `g` restricted to the span of `v, e₁, …`.
struct Reduced<'a> {
    p: &'a ProblemDef,
    cols: Vec<&'a [f64]>,
    gram: DMatrix<f64>,
}

struct Sample {
    value: f64,
    grad: DVector<f64>,
    w: Vec<f64>,
}

impl<'a> Reduced<'a> {
    fn new(p: &'a ProblemDef, l: &'a SupportBasis, v: &'a GridFunction) -> Self {
        let mut cols: Vec<&[f64]> = vec![v.values()];
        cols.extend(l.basis().iter().map(|e| e.values()));
        let a_cols: Vec<Vec<f64>> = cols.iter().map(|c| p.op().apply_slice(c)).collect();
        let n = cols.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let g = dot(cols[i], &a_cols[j]);
                gram[(i, j)] = g;
                gram[(j, i)] = g;
            }
        }
        Self { p, cols, gram }
    }

    fn dim(&self) -> usize {
        self.cols.len()
    }

    fn field(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut w = vec![0.0; self.cols[0].len()];
        for (col, &xi) in self.cols.iter().zip(x.iter()) {
            if xi != 0.0 {
                for (wk, ck) in w.iter_mut().zip(col.iter()) {
                    *wk += xi * ck;
                }
            }
        }
        w
    }

    fn sample(&self, x: &DVector<f64>) -> Sample {
        let w = self.field(x);
        let gx = &self.gram * x;
        let value = 0.5 * x.dot(&gx) - self.p.potential(&w);
        let wf = self.p.weighted_source(&w);
        let grad = DVector::from_fn(self.dim(), |i, _| gx[i] - dot(self.cols[i], &wf));
        Sample { value, grad, w }
    }

    /// Exact Hessian `G − Bᵀ diag(W f′(w)) B`.
    fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let nl = self.p.nonlinearity();
        let s: Vec<f64> = w
            .iter()
            .zip(self.p.node_weights())
            .zip(self.p.op().weights())
            .map(|((&wi, &c), &q)| q * nl.df(c, wi))
            .collect();
        let n = self.dim();
        let mut hess = self.gram.clone();
        for i in 0..n {
            for j in i..n {
                let m: f64 = self.cols[i]
                    .iter()
                    .zip(self.cols[j])
                    .zip(&s)
                    .map(|((a, b), si)| a * b * si)
                    .sum();
                hess[(i, j)] -= m;
                if i != j {
                    hess[(j, i)] -= m;
                }
            }
        }
        hess
    }
}

fn inf_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Uphill Newton direction from an eigenvalue-modified Hessian.
fn ascent_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(hess);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1.0);
    let floor = 1e-10 * scale;
    let q = &eig.eigenvectors;
    let qg = q.transpose() * grad;
    let scaled = DVector::from_fn(qg.len(), |i, _| qg[i] / eig.eigenvalues[i].abs().max(floor));
    q * scaled
}

/// Local maximizer of `E` on `[L, v]` from the coordinates `init = (t₀, c₀)`.
pub fn maximize_on_halfspace(
    p: &ProblemDef,
    l: &SupportBasis,
    v: &GridFunction,
    init: (f64, &[f64]),
    opts: &PeakOptions,
) -> Result<PeakPoint> {
    v.check_mesh(p.mesh_id())?;
    let (t0, c0) = init;
    if !(t0 > 0.0) {
        return Err(LmmError::PeakSearch(format!("initial t must be positive, got {t0}")));
    }
    if c0.len() != l.dim() {
        return Err(LmmError::LengthMismatch {
            expected: l.dim(),
            found: c0.len(),
        });
    }
    let red = Reduced::new(p, l, v);
    let n = red.dim();
    let t_floor = opts.t_min / 10.0;
    let target = opts.inner_tol * 1e-3;

    let mut x = DVector::from_fn(n, |i, _| if i == 0 { t0 } else { c0[i - 1] });
    let mut cur = red.sample(&x);
    if !cur.value.is_finite() {
        return Err(LmmError::NonFinite("energy at the initial peak guess".into()));
    }
    let mut res = inf_norm(&cur.grad);
    let mut iterations = 0;

    while res > target {
        if iterations == opts.max_iters {
            if res <= opts.inner_tol {
                break;
            }
            return Err(LmmError::PeakSearch(format!(
                "no convergence in {iterations} iterations (first-order residual {res:.3e})"
            )));
        }
        iterations += 1;
        let mut dir = ascent_direction(red.hessian(&cur.w), &cur.grad);
        let cap = opts.max_step * x.norm().max(1.0);
        let len = dir.norm();
        if len > cap {
            dir *= cap / len;
        }
        let slope = cur.grad.dot(&dir);
        let mut step = 1.0;
        if dir[0] < 0.0 {
            step = f64::min(step, (x[0] - t_floor) / -dir[0]);
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial_x = &x + &dir * step;
            let trial = red.sample(&trial_x);
            if trial.value.is_finite() && trial.value > opts.overflow {
                return Err(LmmError::Unbounded(trial.value));
            }
            if trial.value.is_finite() {
                let uphill = trial.value >= cur.value + 1e-4 * step * slope;
                // below the roundoff of E only the gradient can still improve
                let flat = trial.value >= cur.value - 1e-13 * cur.value.abs().max(1.0)
                    && inf_norm(&trial.grad) < res;
                if uphill || flat {
                    accepted = Some((trial_x, trial));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next_x, next)) = accepted else {
            if res <= opts.inner_tol {
                break;
            }
            return Err(LmmError::PeakSearch(format!(
                "backtracking failed (first-order residual {res:.3e})"
            )));
        };
        if next_x[0] <= t_floor * (1.0 + 1e-9) && next.grad[0] <= 0.0 {
            // pinned at the half-space boundary
            return Err(LmmError::DegeneratePeak {
                t: next_x[0],
                t_min: opts.t_min,
            });
        }
        let next_res = inf_norm(&next.grad);
        let stalled = next_res > 0.5 * res;
        x = next_x;
        cur = next;
        res = next_res;
        if stalled && res <= opts.inner_tol {
            // roundoff floor
            break;
        }
    }

    let t = x[0];
    if t < opts.t_min {
        return Err(LmmError::DegeneratePeak { t, t_min: opts.t_min });
    }
    let w = GridFunction::from_values(p.mesh(), cur.w)?;
    Ok(PeakPoint {
        t,
        coeffs: x.iter().skip(1).copied().collect(),
        w,
        value: cur.value,
        first_order_res: res,
        iterations,
    })
}

/// Pairings of `E′(w)` with `v`, each `eⱼ` and `w` itself.
pub fn verify_peak(
    p: &ProblemDef,
    l: &SupportBasis,
    v: &GridFunction,
    pk: &PeakPoint,
    t_min: f64,
) -> Result<PeakResiduals> {
    v.check_mesh(p.mesh_id())?;
    let r = p.residual_vector(&pk.w)?;
    Ok(PeakResiduals {
        along_v: dot(r.values(), v.values()).abs(),
        along_l: l
            .basis()
            .iter()
            .map(|e| dot(r.values(), e.values()).abs())
            .collect(),
        nehari: dot(r.values(), pk.w.values()).abs(),
        degenerate: pk.t < t_min,
    })
}

/// Assembles `t·v + Σ cⱼ eⱼ`.
pub fn peak_field(l: &SupportBasis, v: &GridFunction, t: f64, coeffs: &[f64]) -> GridFunction {
    let mut w = v.scaled(t);
    l.add_combination(&mut w, coeffs);
    w
}
