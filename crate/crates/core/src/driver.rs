//! The normalized local minimax iteration: direction, stopping test, line
//! search on the sphere, peak re-selection. Plus the sequential workflow that
//! grows the support space from earlier solutions.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::directions::{AcceptedStep, DirectionKind, DirectionLog, DirectionState, Preconditioner};
use crate::error::{LmmError, Result};
use crate::hilbert::{build_mesh, DomainSpec, GridFunction, MaskGrid, Mesh};
use crate::peak::{maximize_on_halfspace, PeakOptions, PeakPoint};
use crate::problem::{ProblemDef, ProblemSpec, Region};
use crate::stepsize::{search, search_armijo, LineContext, MeritValue, Rule, RuleParams, StepResult};
use crate::subspace::{decompose, orthonormalize_labelled, SphereState, SupportBasis};

/// Peak re-solves from fresh guesses before a degenerate start is fatal.
const PEAK_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainChoice {
    Square,
    Dumbbell,
    Mask { path: PathBuf },
}

impl DomainChoice {
    pub fn build_mesh(&self, resolution: usize) -> Result<Mesh> {
        match self {
            DomainChoice::Square => build_mesh(&DomainSpec::Square, resolution),
            DomainChoice::Dumbbell => build_mesh(&DomainSpec::Dumbbell, resolution),
            DomainChoice::Mask { path } => build_mesh(&DomainSpec::Mask(MaskGrid::read(path)?), resolution),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PreconditionerChoice {
    Identity,
    Scaled { factor: f64 },
    /// `min diag(A)/diag(A)ᵢ` at each node.
    DiagonalOfA,
}

impl PreconditionerChoice {
    pub fn build(&self, p: &ProblemDef) -> Preconditioner {
        match self {
            PreconditionerChoice::Identity => Preconditioner::Identity,
            PreconditionerChoice::Scaled { factor } => Preconditioner::Scaled { factor: *factor },
            PreconditionerChoice::DiagonalOfA => Preconditioner::diagonal_of_a(p.op()),
        }
    }
}

fn default_domain() -> DomainChoice {
    DomainChoice::Square
}
fn default_resolution() -> usize {
    129
}
fn default_direction() -> DirectionKind {
    DirectionKind::CgFr
}
fn default_preconditioner() -> PreconditionerChoice {
    PreconditionerChoice::Identity
}
fn default_omega1() -> Region {
    Region::all()
}
fn default_omega2() -> Region {
    Region::empty()
}
fn default_grad_tol() -> f64 {
    1e-5
}
fn default_sup_res_tol() -> f64 {
    5e-5
}
fn default_max_outer_iters() -> usize {
    2000
}
fn default_t_min() -> f64 {
    1e-6
}
fn default_inner_tol() -> f64 {
    1e-8
}
fn yes() -> bool {
    true
}

/// Everything one run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default = "default_domain")]
    pub domain: DomainChoice,
    /// Grid nodes across `[-1, 1]`; ignored for masks.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub rule: RuleParams,
    #[serde(default = "default_direction")]
    pub direction: DirectionKind,
    #[serde(default = "default_preconditioner")]
    pub preconditioner: PreconditionerChoice,
    /// Field files (or plan labels) spanning `L`.
    #[serde(default)]
    pub support: Vec<String>,
    #[serde(default = "default_omega1")]
    pub omega1: Region,
    #[serde(default = "default_omega2")]
    pub omega2: Region,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_sup_res_tol")]
    pub sup_res_tol: f64,
    #[serde(default = "default_max_outer_iters")]
    pub max_outer_iters: usize,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    /// Retry a failed line search once with the Armijo rule.
    #[serde(default = "yes")]
    pub armijo_fallback: bool,
    /// Runs are always deterministic; kept for config compatibility.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec) -> Self {
        Self {
            problem,
            domain: default_domain(),
            resolution: default_resolution(),
            rule: RuleParams::default(),
            direction: default_direction(),
            preconditioner: default_preconditioner(),
            support: Vec::new(),
            omega1: default_omega1(),
            omega2: default_omega2(),
            grad_tol: default_grad_tol(),
            sup_res_tol: default_sup_res_tol(),
            max_outer_iters: default_max_outer_iters(),
            t_min: default_t_min(),
            inner_tol: default_inner_tol(),
            armijo_fallback: true,
            deterministic: true,
        }
    }

    /// `SD-Armijo`: `σ = λ = 0.1`, `ρ = 0.5`.
    pub fn sd_armijo(mut self) -> Self {
        self.direction = DirectionKind::Sd;
        self.rule = RuleParams::armijo(0.1, 0.1, 0.5);
        self
    }

    /// `SD-StrongWolfe`: `σ₁ = 0.1`, `σ₂ = 0.4`.
    pub fn sd_strong_wolfe(mut self) -> Self {
        self.direction = DirectionKind::Sd;
        self.rule = RuleParams::strong_wolfe(0.1, 0.4);
        self
    }

    /// `CG-StrongWolfe`: `σ₁ = 0.1`, `σ₂ = 0.4`.
    pub fn cg_strong_wolfe(mut self) -> Self {
        self.direction = DirectionKind::CgFr;
        self.rule = RuleParams::strong_wolfe(0.1, 0.4);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.rule.validate()?;
        let positive = [
            ("grad_tol", self.grad_tol),
            ("sup_res_tol", self.sup_res_tol),
            ("t_min", self.t_min),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LmmError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer_iters == 0 {
            return Err(LmmError::Config("max_outer_iters must be positive".into()));
        }
        if self.direction == DirectionKind::CgFr
            && !(self.rule.rule == Rule::StrongWolfe && self.rule.sigma2 < 0.5)
        {
            return Err(LmmError::Config(format!(
                "cg-fr requires the strong-wolfe rule with sigma2 < 1/2 (got {} with sigma2 = {})",
                self.rule.rule, self.rule.sigma2
            )));
        }
        if self.omega1.is_complement() {
            return Err(LmmError::Config("omega1 cannot be `complement`".into()));
        }
        if let PreconditionerChoice::Scaled { factor } = self.preconditioner {
            if !(factor > 0.0) {
                return Err(LmmError::Config(format!("preconditioner factor must be positive, got {factor}")));
            }
        }
        Ok(())
    }

    pub fn peak_options(&self) -> PeakOptions {
        PeakOptions {
            inner_tol: self.inner_tol,
            t_min: self.t_min,
            ..PeakOptions::default()
        }
    }

    pub fn build_problem(&self) -> Result<ProblemDef> {
        self.validate()?;
        let mesh = Arc::new(self.domain.build_mesh(self.resolution)?);
        ProblemDef::new(self.problem, mesh)
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub sup_residual: f64,
    pub t: f64,
    pub perp_norm: f64,
    /// `‖v_k^L‖/‖v_0^L‖` (1 when `v₀ ∈ L^⊥`).
    pub tau: f64,
    /// `t_k‖v_k^⊥‖`
    pub dist_to_l: f64,
    pub peak_residual: f64,
    /// `φ′(0)` along the direction of this iteration.
    pub dphi0: Option<f64>,
    pub alpha: Option<f64>,
    pub evals: usize,
    pub rule: Option<Rule>,
    pub fallback: bool,
    pub direction: Option<DirectionLog>,
}

/// One line-search trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTraceRow {
    pub iter: usize,
    pub eval: usize,
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
    /// `φ(α) − φ(0)`
    pub phi_change: f64,
    pub rule_flags: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub label: String,
    #[serde(skip)]
    pub u: Option<GridFunction>,
    pub energy: f64,
    pub grad_norm: f64,
    pub sup_residual: f64,
    pub iterations: usize,
    pub phi_evals: usize,
    pub linear_solves: usize,
    pub fallback_steps: usize,
    pub cg_restarts: usize,
    pub peak_restarts: usize,
    pub t: f64,
    /// Labels of the solutions that spanned `L`.
    pub support: Vec<String>,
    /// `min ‖u − s‖_a/‖u‖_a` over the support solutions.
    pub support_distance: Option<f64>,
    pub config: RunConfig,
    pub trace: Vec<IterRecord>,
    pub line_trace: Vec<LineTraceRow>,
}

impl SolutionRecord {
    pub fn field(&self) -> &GridFunction {
        self.u.as_ref().expect("solution field present")
    }
}

/// `‖v₀^L‖` at or below this counts as zero and `τ` is reported as 1.
pub const L_PART_FLOOR: f64 = 1e-12;

/// Where the iteration starts.
#[derive(Debug, Clone)]
pub enum Start {
    /// `v₀` from the configured `Ω₁`, `Ω₂`.
    Regions,
    /// `v₀ = u/‖u‖_a` and initial peak guess `w = u`.
    Field(GridFunction),
}

/// Read-only view of an iterate, handed to observers before each line search.
pub struct IterationView<'a> {
    pub k: usize,
    pub problem: &'a ProblemDef,
    pub basis: &'a SupportBasis,
    pub state: &'a SphereState,
    pub peak: &'a PeakPoint,
    pub g: &'a GridFunction,
    pub d: &'a GridFunction,
    pub peak_opts: PeakOptions,
}

/// Algorithm with `v₀` from the configured regions.
pub fn run_lmm(p: &ProblemDef, cfg: &RunConfig, support: &[(String, GridFunction)]) -> Result<SolutionRecord> {
    run_lmm_with(p, cfg, support, Start::Regions, &mut |_| {})
}

/// Logs a disagreement between the warm-started peak and a cold start from `(1, 0)`.
fn warm_start_check(p: &ProblemDef, l: &SupportBasis, state: &SphereState, peak: &PeakPoint, opts: &PeakOptions, k: usize) {
    let zero = vec![0.0; l.dim()];
    match maximize_on_halfspace(p, l, state.v(), (1.0, &zero), opts) {
        Ok(cold) if (cold.value - peak.value).abs() > opts.inner_tol * peak.value.abs().max(1.0) => log::warn!(
            "iteration {k}: warm-start peak E = {:.10} (t = {:.6}) differs from cold-start peak E = {:.10} (t = {:.6})",
            peak.value,
            peak.t,
            cold.value,
            cold.t
        ),
        Ok(_) => {}
        Err(e) => log::debug!("iteration {k}: cold-start peak failed: {e}"),
    }
}

pub fn run_lmm_with(
    p: &ProblemDef,
    cfg: &RunConfig,
    support: &[(String, GridFunction)],
    start: Start,
    observer: &mut dyn FnMut(&IterationView<'_>),
) -> Result<SolutionRecord> {
    cfg.validate()?;
    let op = p.op();
    let solves0 = p.linear_solves();
    let l = orthonormalize_labelled(support, op)?;
    let peak_opts = cfg.peak_options();

    let (v0, guesses) = match start {
        Start::Regions => {
            let v0 = p.initial_direction(&cfg.omega1, &cfg.omega2)?;
            // w = v₀ + u_{n−1}, u_{n−1} of highest energy
            let mut c_top = vec![0.0; l.dim()];
            let mut best = f64::NEG_INFINITY;
            for (_, s) in support {
                let e = p.energy(s)?;
                if e > best {
                    best = e;
                    c_top = l.coefficients(s);
                }
            }
            let zero = vec![0.0; l.dim()];
            let guesses = vec![(1.0, c_top.clone()), (1.0, zero.clone()), (4.0, c_top), (4.0, zero)];
            (v0, guesses)
        }
        Start::Field(u) => {
            let n = op.norm(&u);
            if !(n > 0.0) {
                return Err(LmmError::ZeroDirection);
            }
            let v0 = u.scaled(1.0 / n);
            let state = decompose(&v0, &l, op)?;
            let mut c = l.coefficients(&u);
            // u = n·v₀ = n·v₀^⊥ + Σ cⱼeⱼ, with v₀ carrying its own L part
            for (cj, sj) in c.iter_mut().zip(state.coeffs()) {
                *cj -= n * sj;
            }
            let zero = vec![0.0; l.dim()];
            (v0, vec![(n, c), (1.0, zero.clone()), (4.0, zero.clone()), (0.25, zero)])
        }
    };
    let mut state = decompose(&v0, &l, op)?;
    let l_norm0 = state.l_norm();

    let mut peak_restarts = 0;
    let mut peak = None;
    let mut last_err = None;
    for (t0, c0) in guesses.iter().take(PEAK_RESTARTS + 1) {
        match maximize_on_halfspace(p, &l, state.v(), (*t0, c0), &peak_opts) {
            Ok(pk) => {
                peak = Some(pk);
                break;
            }
            Err(e @ (LmmError::DegeneratePeak { .. } | LmmError::PeakSearch(_))) => {
                log::warn!("initial peak from t = {t0}: {e}");
                peak_restarts += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    let Some(mut peak) = peak else {
        return Err(last_err.expect("at least one attempt"));
    };
    peak_restarts = peak_restarts.min(PEAK_RESTARTS);

    let mut ds = DirectionState::new(cfg.direction)
        .with_preconditioner(cfg.preconditioner.build(p))
        .with_sigma2(cfg.rule.sigma2);
    let fallback_params = RuleParams::armijo(0.1, 0.1, 0.5);
    let mut trace = Vec::new();
    let mut line_trace = Vec::new();
    let mut phi_evals = 0;
    let mut fallback_steps = 0;

    for k in 0..=cfg.max_outer_iters {
        let g = p.gradient(&peak.w)?;
        let grad_norm = op.norm(&g);
        let sup_residual = p.residual_sup(&peak.w)?;
        if !(grad_norm.is_finite() && sup_residual.is_finite()) {
            return Err(LmmError::NonFinite(format!("gradient at iteration {k}")));
        }
        let mut row = IterRecord {
            k,
            energy: peak.value,
            grad_norm,
            sup_residual,
            t: peak.t,
            perp_norm: state.perp_norm(),
            tau: if l_norm0 > L_PART_FLOOR { state.l_norm() / l_norm0 } else { 1.0 },
            dist_to_l: peak.t * state.perp_norm(),
            peak_residual: peak.first_order_res,
            dphi0: None,
            alpha: None,
            evals: 0,
            rule: None,
            fallback: false,
            direction: None,
        };
        log::debug!(
            "iter {k}: E = {:.10}, |g| = {grad_norm:.3e}, sup res = {sup_residual:.3e}, t = {:.6}",
            peak.value,
            peak.t
        );
        if log::log_enabled!(log::Level::Debug) {
            warm_start_check(p, &l, &state, &peak, &peak_opts, k);
        }
        if grad_norm <= cfg.grad_tol && sup_residual <= cfg.sup_res_tol {
            trace.push(row);
            let u = peak.w;
            let support_distance = support
                .iter()
                .map(|(_, s)| op.norm(&u.combine(1.0, -1.0, s)) / op.norm(&u))
                .reduce(f64::min);
            return Ok(SolutionRecord {
                label: String::new(),
                energy: p.energy(&u)?,
                u: Some(u),
                grad_norm,
                sup_residual,
                iterations: k,
                phi_evals,
                linear_solves: p.linear_solves() - solves0,
                fallback_steps,
                cg_restarts: ds.restart_count,
                peak_restarts,
                t: peak.t,
                support: l.sources().to_vec(),
                support_distance,
                config: cfg.clone(),
                trace,
                line_trace,
            });
        }
        if k == cfg.max_outer_iters {
            break;
        }

        let (d, dlog) = ds.next(&g, &state, &l, op)?;
        observer(&IterationView {
            k,
            problem: p,
            basis: &l,
            state: &state,
            peak: &peak,
            g: &g,
            d: &d,
            peak_opts,
        });
        let mut ctx = LineContext::new(p, &l, &state, &d, &peak, peak_opts);
        let p0 = ctx.origin()?;
        row.dphi0 = Some(p0.dphi);
        row.direction = Some(dlog);
        let (step, fallback) = match search(&mut ctx, &p0, &cfg.rule) {
            Ok(s) => (s, false),
            Err(e) if cfg.armijo_fallback && cfg.rule.rule != Rule::Armijo && is_search_failure(&e) => {
                log::warn!("iteration {k}: {e}; retrying with the Armijo rule");
                let first = ctx.evals();
                let s = search_armijo(&mut ctx, &p0, &fallback_params)
                    .map_err(|e2| LmmError::LineSearch(format!("{e}; Armijo fallback: {e2}")))?;
                phi_evals += first;
                (s, true)
            }
            Err(e) => return Err(e),
        };
        let StepResult { accepted, rule, evals, trace: trials } = step;
        phi_evals += evals;
        fallback_steps += usize::from(fallback);
        for (i, tr) in trials.iter().enumerate() {
            line_trace.push(LineTraceRow {
                iter: k,
                eval: i + 1,
                alpha: tr.alpha,
                phi: tr.phi,
                dphi: tr.dphi,
                phi_change: tr.change,
                rule_flags: tr.flags.clone(),
            });
        }
        if !(accepted.phi() < p0.phi) {
            log::warn!(
                "iteration {k}: energy did not decrease ({:.15e} -> {:.15e})",
                p0.phi,
                accepted.phi()
            );
        }
        row.alpha = Some(accepted.alpha);
        row.evals = evals;
        row.rule = Some(rule);
        row.fallback = fallback;
        trace.push(row);

        ds.record_step(&AcceptedStep {
            d: &d,
            g: &g,
            g_norm: grad_norm,
            d_norm: ctx.d_norm(),
            t: peak.t,
            alpha: accepted.alpha,
            t_hat: accepted.t_hat,
            fallback,
        });
        state = accepted.state;
        peak = accepted.peak;
    }
    let last = trace.last().expect("at least one iteration");
    Err(LmmError::MaxIterations {
        iterations: cfg.max_outer_iters,
        grad_norm: last.grad_norm,
        sup_residual: last.sup_residual,
    })
}

fn is_search_failure(e: &LmmError) -> bool {
    matches!(
        e,
        LmmError::LineSearch(_)
            | LmmError::DegeneratePeak { .. }
            | LmmError::PeakSearch(_)
            | LmmError::Unbounded(_)
            | LmmError::NonFinite(_)
    )
}

/// Replays every accepted step of a record through the acceptance test of the
/// rule that accepted it. Returns the iterations that fail.
pub fn replay_acceptance(record: &SolutionRecord) -> Vec<usize> {
    use crate::stepsize::{check_conditions, Sample};
    let fallback = RuleParams::armijo(0.1, 0.1, 0.5);
    let mut bad = Vec::new();
    for (row, next) in record.trace.iter().zip(record.trace.iter().skip(1)) {
        let (Some(alpha), Some(dphi0), Some(rule)) = (row.alpha, row.dphi0, row.rule) else {
            continue;
        };
        let params = if row.fallback { fallback } else { record.config.rule };
        let last = record
            .line_trace
            .iter().rfind(|r| r.iter == row.k && r.alpha == alpha);
        let Some(acc) = last else {
            bad.push(row.k);
            continue;
        };
        let p0 = Sample {
            alpha: 0.0,
            phi: row.energy,
            dphi: dphi0,
        };
        let pa = Replayed {
            alpha,
            phi: acc.phi,
            dphi: acc.dphi,
            change: acc.phi_change,
        };
        let c = check_conditions(&p0, &pa, &params);
        // the stored next energy must be the accepted φ
        if !c.accepts(rule) || next.energy != acc.phi {
            bad.push(row.k);
        }
    }
    bad
}

struct Replayed {
    alpha: f64,
    phi: f64,
    dphi: f64,
    change: f64,
}

impl MeritValue for Replayed {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn phi(&self) -> f64 {
        self.phi
    }
    fn dphi(&self) -> f64 {
        self.dphi
    }
    fn change(&self) -> Option<f64> {
        Some(self.change)
    }
}

/// Post-hoc convergence-theory diagnostics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// `Σ_{j ≤ k} α_j ‖g_j‖²`
    pub partial_sums: Vec<f64>,
    pub min_grad_norm: f64,
    pub final_grad_norm: f64,
    pub energy_nonincreasing: bool,
    /// Strict decrease at every step taken.
    pub energy_strictly_decreasing: bool,
    pub perp_norm_nondecreasing: bool,
    pub tau_nonincreasing: bool,
    pub min_dist_to_l: f64,
    /// `t_min ‖v₀^⊥‖`
    pub dist_lower_bound: f64,
    pub dist_bound_ok: bool,
    pub cone_violations: usize,
    pub a1_violations: usize,
    pub max_peak_residual: f64,
}

pub fn monitor_theory(record: &SolutionRecord) -> TheoryReport {
    let tr = &record.trace;
    let mut sum = 0.0;
    let partial_sums = tr
        .iter()
        .filter_map(|r| r.alpha.map(|a| a * r.grad_norm * r.grad_norm))
        .map(|x| {
            sum += x;
            sum
        })
        .collect();
    let pairs = || tr.iter().zip(tr.iter().skip(1));
    let slack = 1e-12;
    let min_dist_to_l = tr.iter().map(|r| r.dist_to_l).fold(f64::INFINITY, f64::min);
    let dist_lower_bound = record.config.t_min * tr.first().map_or(0.0, |r| r.perp_norm);
    TheoryReport {
        partial_sums,
        min_grad_norm: tr.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min),
        final_grad_norm: tr.last().map_or(f64::NAN, |r| r.grad_norm),
        energy_nonincreasing: pairs().all(|(a, b)| b.energy <= a.energy),
        energy_strictly_decreasing: pairs().all(|(a, b)| b.energy < a.energy),
        perp_norm_nondecreasing: pairs().all(|(a, b)| b.perp_norm >= a.perp_norm - slack),
        tau_nonincreasing: pairs().all(|(a, b)| b.tau <= a.tau + slack && b.tau > 0.0),
        min_dist_to_l,
        dist_lower_bound,
        dist_bound_ok: min_dist_to_l >= dist_lower_bound,
        cone_violations: tr
            .iter()
            .filter(|r| r.direction.is_some_and(|d| !d.cone_ok))
            .count(),
        a1_violations: tr
            .iter()
            .filter(|r| r.direction.is_some_and(|d| !d.a1_ok))
            .count(),
        max_peak_residual: tr.iter().map(|r| r.peak_residual).fold(0.0, f64::max),
    }
}

/// Per-entry settings that differ from the base configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer_iters: Option<usize>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

/// One solution of a sequential plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub label: String,
    /// Labels of earlier entries spanning `L`.
    #[serde(default)]
    pub support: Vec<String>,
    pub omega1: Region,
    #[serde(default = "default_omega2")]
    pub omega2: Region,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

impl PlanEntry {
    pub fn new(label: &str, support: &[&str], omega1: &str, omega2: &str) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            support: support.iter().map(|s| s.to_string()).collect(),
            omega1: Region::parse(omega1)?,
            omega2: Region::parse(omega2)?,
            overrides: Overrides::default(),
        })
    }

    /// The base configuration with this entry's regions and overrides.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        cfg.support = self.support.clone();
        cfg.omega1 = self.omega1.clone();
        cfg.omega2 = self.omega2.clone();
        if let Some(r) = self.overrides.rule {
            cfg.rule = r;
        }
        if let Some(d) = self.overrides.direction {
            cfg.direction = d;
        }
        if let Some(m) = self.overrides.max_outer_iters {
            cfg.max_outer_iters = m;
        }
        cfg
    }
}

/// Labels unique and non-empty; supports refer to earlier entries only.
pub fn validate_plan(plan: &[PlanEntry]) -> Result<()> {
    validate_plan_with(plan, &[])
}

/// As [`validate_plan`], with `known` labels available before the first entry.
pub fn validate_plan_with(plan: &[PlanEntry], known: &[&str]) -> Result<()> {
    let mut seen: HashMap<&str, usize> = known.iter().map(|k| (*k, usize::MAX)).collect();
    for (i, e) in plan.iter().enumerate() {
        let entry = i + 1;
        if e.label.trim().is_empty() {
            return Err(LmmError::Plan {
                entry,
                message: "empty label".into(),
            });
        }
        for s in &e.support {
            if !seen.contains_key(s.as_str()) {
                let message = match plan.iter().position(|x| &x.label == s) {
                    Some(j) => format!("`{}` references `{s}`, which is entry {} (later)", e.label, j + 1),
                    None => format!("`{}` references unknown entry `{s}`", e.label),
                };
                return Err(LmmError::Plan { entry, message });
            }
        }
        if seen.insert(e.label.as_str(), i).is_some() {
            return Err(LmmError::Plan {
                entry,
                message: format!("duplicate label `{}`", e.label),
            });
        }
    }
    Ok(())
}

/// Result of one plan entry.
#[derive(Debug)]
pub struct EntryOutcome {
    pub label: String,
    pub result: Result<SolutionRecord>,
    pub wall_time_s: f64,
}

/// Runs a plan in order, feeding found solutions into later support spaces.
///
/// Entries whose support includes a failed entry are skipped with an error.
pub fn find_sequence(p: &ProblemDef, base: &RunConfig, plan: &[PlanEntry]) -> Result<Vec<EntryOutcome>> {
    find_sequence_seeded(p, base, plan, &[])
}

/// As [`find_sequence`], with solutions loaded elsewhere available as support.
pub fn find_sequence_seeded(
    p: &ProblemDef,
    base: &RunConfig,
    plan: &[PlanEntry],
    seeds: &[(String, GridFunction)],
) -> Result<Vec<EntryOutcome>> {
    let known: Vec<&str> = seeds.iter().map(|(l, _)| l.as_str()).collect();
    validate_plan_with(plan, &known)?;
    base.validate()?;
    let mut found: HashMap<String, (f64, GridFunction)> = HashMap::new();
    for (label, u) in seeds {
        found.insert(label.clone(), (p.energy(u)?, u.clone()));
    }
    let mut out = Vec::with_capacity(plan.len());
    for (i, e) in plan.iter().enumerate() {
        let missing: Vec<&str> = e
            .support
            .iter()
            .filter(|s| !found.contains_key(s.as_str()))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            out.push(EntryOutcome {
                label: e.label.clone(),
                result: Err(LmmError::Plan {
                    entry: i + 1,
                    message: format!("skipped: support entries failed ({})", missing.join(", ")),
                }),
                wall_time_s: 0.0,
            });
            continue;
        }
        let support: Vec<(String, GridFunction)> = e
            .support
            .iter()
            .map(|s| (s.clone(), found[s].1.clone()))
            .collect();
        check_highest_last(&e.label, &e.support, &found);
        let cfg = e.config(base);
        log::info!("{}: L = [{}], omega1 = {}, omega2 = {}", e.label, e.support.join(", "), e.omega1, e.omega2);
        let clock = Instant::now();
        let result = run_lmm(p, &cfg, &support).map(|mut r| {
            r.label = e.label.clone();
            r
        });
        let wall = clock.elapsed().as_secs_f64();
        match &result {
            Ok(r) => {
                log::info!("{}: E = {:.6} after {} iterations", e.label, r.energy, r.iterations);
                found.insert(e.label.clone(), (r.energy, r.field().clone()));
            }
            Err(err) => log::error!("{}: {err}", e.label),
        }
        out.push(EntryOutcome {
            label: e.label.clone(),
            result,
            wall_time_s: wall,
        });
    }
    Ok(out)
}

/// Warns unless the last support solution has the highest energy.
fn check_highest_last(label: &str, support: &[String], found: &HashMap<String, (f64, GridFunction)>) {
    let Some(last) = support.last() else {
        return;
    };
    let e_last = found[last].0;
    if let Some(top) = support.iter().find(|s| found[s.as_str()].0 > e_last) {
        log::warn!(
            "{label}: support lists `{last}` last but `{top}` has higher energy; the initial guess uses `{top}`"
        );
    }
}
