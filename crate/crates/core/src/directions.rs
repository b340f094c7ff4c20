//! Descent directions in `[L, v]^⊥`: steepest descent, preconditioned steepest
//! descent and the Fletcher-Reeves-like conjugate gradient direction, with the
//! per-iterate monitors of the convergence assumptions.

use serde::{Deserialize, Serialize};

use crate::error::{LmmError, Result};
use crate::hilbert::{EllipticOperator, GridFunction};
use crate::subspace::{project_complement, project_out, SphereState, SupportBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionKind {
    Sd,
    Psd,
    CgFr,
}

impl std::fmt::Display for DirectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DirectionKind::Sd => "sd",
            DirectionKind::Psd => "psd",
            DirectionKind::CgFr => "cg-fr",
        })
    }
}

/// A symmetric positive-definite map `T` applied to gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Preconditioner {
    Identity,
    Scaled { factor: f64 },
    /// Nodewise scaling.
    Diagonal { entries: Vec<f64> },
}

impl Preconditioner {
    /// Nodewise `min diag(A) / diag(A)ᵢ`.
    pub fn diagonal_of_a(op: &EllipticOperator) -> Self {
        let diag = op.matrix().diagonal();
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        Preconditioner::Diagonal {
            entries: diag.iter().map(|d| min / d).collect(),
        }
    }

    pub fn apply(&self, g: &GridFunction) -> Result<GridFunction> {
        match self {
            Preconditioner::Identity => Ok(g.clone()),
            Preconditioner::Scaled { factor } => {
                if !(*factor > 0.0) {
                    return Err(LmmError::Config(format!("preconditioner factor must be positive, got {factor}")));
                }
                Ok(g.scaled(*factor))
            }
            Preconditioner::Diagonal { entries } => {
                if entries.len() != g.len() {
                    return Err(LmmError::LengthMismatch {
                        expected: g.len(),
                        found: entries.len(),
                    });
                }
                if let Some(bad) = entries.iter().find(|e| !(**e > 0.0)) {
                    return Err(LmmError::Config(format!("diagonal preconditioner entry {bad} is not positive")));
                }
                let mut out = g.clone();
                for (o, e) in out.values_mut().iter_mut().zip(entries) {
                    *o *= e;
                }
                Ok(out)
            }
        }
    }
}

/// `d = −g`.
pub fn steepest(g: &GridFunction) -> GridFunction {
    g.scaled(-1.0)
}

/// Per-iteration direction diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionLog {
    pub k: usize,
    pub beta: f64,
    pub gamma: f64,
    /// `(g, d)_a / ‖g‖²`
    pub gd_over_g2: f64,
    pub restart_flag: bool,
    /// `−(g, d)_a / ‖g‖²`
    pub c1_est: f64,
    /// `‖d‖ / ‖g‖`
    pub c2_est: f64,
    /// `‖Tg‖ / ‖g‖` (preconditioned directions)
    pub c3_est: f64,
    /// `(Tg, g)_a / ‖g‖²` (preconditioned directions)
    pub c4_est: f64,
    /// Lemma 5.3 bounds hold (always true outside CG).
    pub cone_ok: bool,
    /// `(A1)` with the constant of the method.
    pub a1_ok: bool,
}

/// `PSD` direction `d = −Π(Tg)` and the estimates `(ĉ₃, ĉ₄)`.
pub fn preconditioned(
    t: &Preconditioner,
    g: &GridFunction,
    state: &SphereState,
    l: &SupportBasis,
    op: &EllipticOperator,
) -> Result<(GridFunction, f64, f64)> {
    let tg = t.apply(g)?;
    let g2 = op.inner_unchecked(g.values(), g.values());
    let c3 = op.norm(&tg) / g2.sqrt();
    let c4 = op.inner_unchecked(tg.values(), g.values()) / g2;
    let d = project_complement(&tg, state, l, op)?.scaled(-1.0);
    let gd = op.inner_unchecked(g.values(), d.values());
    if !(gd < 0.0) {
        return Err(LmmError::NotDescent(gd));
    }
    Ok((d, c3, c4))
}

/// Lemma 5.3 bounds on `(g_k, d_k)/‖g_k‖²` after `k` steps since a restart.
pub fn cone_bounds(sigma2: f64, k: usize) -> (f64, f64) {
    let pk = sigma2.powi(k as i32 + 1);
    (
        -(1.0 - pk) / (1.0 - sigma2),
        -(1.0 - 2.0 * sigma2 + pk) / (1.0 - sigma2),
    )
}

/// What the line search of iteration `k` accepted.
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep<'a> {
    pub d: &'a GridFunction,
    pub g: &'a GridFunction,
    pub g_norm: f64,
    pub d_norm: f64,
    /// `t_k` of the peak the step started from.
    pub t: f64,
    pub alpha: f64,
    /// `t̂` at the accepted step.
    pub t_hat: f64,
    /// Accepted by a rule other than the configured one.
    pub fallback: bool,
}

/// Mutable direction state of one run.
#[derive(Debug, Clone)]
pub struct DirectionState {
    pub kind: DirectionKind,
    pub preconditioner: Preconditioner,
    /// Strong-Wolfe `σ₂` used for the Lemma 5.3 monitor.
    pub sigma2: f64,
    pub restart_every: usize,
    pub conjugacy_loss: f64,
    prev_d: Option<GridFunction>,
    prev_g: Option<GridFunction>,
    prev_g_norm: f64,
    prev_t: f64,
    prev_alpha: f64,
    prev_d_norm: f64,
    t_hat: f64,
    since_restart: usize,
    force_restart: bool,
    pub restart_count: usize,
}

impl DirectionState {
    pub fn new(kind: DirectionKind) -> Self {
        Self {
            kind,
            preconditioner: Preconditioner::Identity,
            sigma2: 0.4,
            restart_every: 50,
            conjugacy_loss: 0.9,
            prev_d: None,
            prev_g: None,
            prev_g_norm: 0.0,
            prev_t: 0.0,
            prev_alpha: 0.0,
            prev_d_norm: 0.0,
            t_hat: 0.0,
            since_restart: 0,
            force_restart: false,
            restart_count: 0,
        }
    }

    pub fn with_preconditioner(mut self, t: Preconditioner) -> Self {
        self.preconditioner = t;
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn has_history(&self) -> bool {
        self.prev_d.is_some()
    }

    /// Stores the outcome of the line search of the current iteration.
    pub fn record_step(&mut self, step: &AcceptedStep<'_>) {
        if self.kind != DirectionKind::CgFr {
            return;
        }
        self.prev_d = Some(step.d.clone());
        self.prev_g = Some(step.g.clone());
        self.prev_g_norm = step.g_norm;
        self.prev_d_norm = step.d_norm;
        self.prev_t = step.t;
        self.prev_alpha = step.alpha;
        self.t_hat = step.t_hat;
        self.since_restart += 1;
        self.force_restart |= step.fallback;
    }

    /// `γ = t̂/t_{k−1}` recomputed from `t_k` and the stored step.
    pub fn gamma_for(&self, t_k: f64) -> f64 {
        t_k / (1.0 + self.prev_alpha * self.prev_alpha * self.prev_d_norm * self.prev_d_norm).sqrt() / self.prev_t
    }

    /// The direction at the current iterate, always projected onto `[L, v]^⊥`.
    pub fn next(
        &mut self,
        g: &GridFunction,
        state: &SphereState,
        l: &SupportBasis,
        op: &EllipticOperator,
    ) -> Result<(GridFunction, DirectionLog)> {
        let g2 = op.inner_unchecked(g.values(), g.values());
        if !(g2 > 0.0) {
            return Err(LmmError::ZeroDirection);
        }
        let mut log = DirectionLog {
            k: self.since_restart,
            cone_ok: true,
            ..Default::default()
        };
        let mut c1_required = 1.0;
        let d = match self.kind {
            DirectionKind::Sd => project_complement(&steepest(g), state, l, op)?,
            DirectionKind::Psd => {
                let (d, c3, c4) = preconditioned(&self.preconditioner, g, state, l, op)?;
                log.c3_est = c3;
                log.c4_est = c4;
                c1_required = c4;
                d
            }
            DirectionKind::CgFr => {
                c1_required = (1.0 - 2.0 * self.sigma2) / (1.0 - self.sigma2);
                self.cg_fr(g, g2, state, l, op, &mut log)?
            }
        };
        let gd = op.inner_unchecked(g.values(), d.values());
        log.gd_over_g2 = gd / g2;
        log.c1_est = -gd / g2;
        log.c2_est = op.norm(&d) / g2.sqrt();
        log.a1_ok = log.c1_est >= c1_required * (1.0 - 1e-9);
        if self.kind == DirectionKind::CgFr && !log.restart_flag {
            let (lo, hi) = cone_bounds(self.sigma2, log.k);
            let slack = 1e-12 * log.gd_over_g2.abs().max(1.0);
            log.cone_ok = log.gd_over_g2 >= lo - slack && log.gd_over_g2 <= hi + slack;
            if !log.cone_ok {
                log::warn!(
                    "Lemma 5.3 bound violated at k = {}: (g,d)/|g|^2 = {:.6} not in [{lo:.6}, {hi:.6}]",
                    log.k,
                    log.gd_over_g2
                );
            }
        }
        if !log.a1_ok {
            log::warn!("(A1) monitor: c1 estimate {:.6} below {c1_required:.6}", log.c1_est);
        }
        Ok((d, log))
    }

    fn restart(&mut self, g: &GridFunction, state: &SphereState, l: &SupportBasis, op: &EllipticOperator, log: &mut DirectionLog) -> Result<GridFunction> {
        if self.prev_d.is_some() {
            self.restart_count += 1;
            log.restart_flag = true;
        }
        self.since_restart = 0;
        self.force_restart = false;
        log.k = 0;
        project_complement(&steepest(g), state, l, op)
    }

    fn cg_fr(
        &mut self,
        g: &GridFunction,
        g2: f64,
        state: &SphereState,
        l: &SupportBasis,
        op: &EllipticOperator,
        log: &mut DirectionLog,
    ) -> Result<GridFunction> {
        let Some(prev_d) = self.prev_d.clone() else {
            return self.restart(g, state, l, op, log);
        };
        let prev_g = self.prev_g.as_ref().expect("stored with prev_d");
        let overlap = op.inner_unchecked(g.values(), prev_g.values()).abs() / g2;
        if self.force_restart || self.since_restart >= self.restart_every || overlap > self.conjugacy_loss {
            log::debug!(
                "CG restart (forced {}, since restart {}, overlap {overlap:.3})",
                self.force_restart,
                self.since_restart
            );
            return self.restart(g, state, l, op, log);
        }
        let gamma = self.t_hat / self.prev_t;
        let beta = gamma * g2 / (self.prev_g_norm * self.prev_g_norm);
        log.gamma = gamma;
        log.beta = beta;
        let pd = project_out(&prev_d, state, l, op)?;
        let raw = steepest(g).combine(1.0, beta, &pd);
        let d = project_complement(&raw, state, l, op)?;
        let gd = op.inner_unchecked(g.values(), d.values());
        if !(gd < 0.0) {
            log::warn!("CG direction not descent ((g,d) = {gd:.3e}), restarting");
            return self.restart(g, state, l, op, log);
        }
        Ok(d)
    }
}
