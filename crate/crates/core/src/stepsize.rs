//! Normalized step-size rules on the merit function `φ(α) = E(p(v(α)))`.
//!
//! The searches only see `(α, φ, φ′)` through [`Merit`], so the same code runs
//! on the real merit ([`LineContext`]) and on synthetic test functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LmmError, Result};
use crate::hilbert::GridFunction;
use crate::peak::{maximize_on_halfspace, PeakOptions, PeakPoint};
use crate::problem::ProblemDef;
use crate::subspace::{normalized_update, SphereState, SupportBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Exact,
    Armijo,
    Goldstein,
    Wolfe,
    StrongWolfe,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Exact => "exact",
            Rule::Armijo => "armijo",
            Rule::Goldstein => "goldstein",
            Rule::Wolfe => "wolfe",
            Rule::StrongWolfe => "strong-wolfe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleParams {
    pub rule: Rule,
    /// Wolfe sufficient decrease.
    pub sigma1: f64,
    /// Wolfe curvature.
    pub sigma2: f64,
    /// Armijo decrease, and the Goldstein upper bound.
    pub sigma: f64,
    /// Goldstein lower bound.
    pub delta: f64,
    /// Armijo initial step.
    pub lambda: f64,
    /// Armijo backtracking factor.
    pub rho: f64,
    /// First trial for the Wolfe, Goldstein and exact searches.
    pub alpha_init: f64,
    pub alpha_max: f64,
    pub max_evals: usize,
}

impl Default for RuleParams {
    fn default() -> Self {
        Self::strong_wolfe(0.1, 0.4)
    }
}

impl RuleParams {
    fn base(rule: Rule) -> Self {
        Self {
            rule,
            sigma1: 0.1,
            sigma2: 0.4,
            sigma: 0.1,
            delta: 0.8,
            lambda: 0.1,
            rho: 0.5,
            alpha_init: 1.0,
            alpha_max: 1e3,
            max_evals: 50,
        }
    }

    pub fn strong_wolfe(sigma1: f64, sigma2: f64) -> Self {
        Self {
            sigma1,
            sigma2,
            ..Self::base(Rule::StrongWolfe)
        }
    }

    pub fn wolfe(sigma1: f64, sigma2: f64) -> Self {
        Self {
            sigma1,
            sigma2,
            ..Self::base(Rule::Wolfe)
        }
    }

    pub fn armijo(sigma: f64, lambda: f64, rho: f64) -> Self {
        Self {
            sigma,
            lambda,
            rho,
            max_evals: 61,
            ..Self::base(Rule::Armijo)
        }
    }

    pub fn goldstein(sigma: f64, delta: f64) -> Self {
        Self {
            sigma,
            delta,
            ..Self::base(Rule::Goldstein)
        }
    }

    pub fn exact() -> Self {
        Self {
            max_evals: 200,
            ..Self::base(Rule::Exact)
        }
    }

    /// The defaults of `rule`.
    pub fn for_rule(rule: Rule) -> Self {
        match rule {
            Rule::Exact => Self::exact(),
            Rule::Armijo => Self::armijo(0.1, 0.1, 0.5),
            Rule::Goldstein => Self::goldstein(0.2, 0.8),
            Rule::Wolfe => Self::wolfe(0.1, 0.4),
            Rule::StrongWolfe => Self::strong_wolfe(0.1, 0.4),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LmmError::Config(m));
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        match self.rule {
            Rule::Wolfe | Rule::StrongWolfe => {
                if !(open01(self.sigma1) && open01(self.sigma2) && self.sigma1 < self.sigma2) {
                    return bad(format!(
                        "Wolfe constants need 0 < sigma1 < sigma2 < 1 (got {}, {})",
                        self.sigma1, self.sigma2
                    ));
                }
            }
            Rule::Goldstein => {
                if !(open01(self.sigma) && open01(self.delta) && self.sigma < self.delta) {
                    return bad(format!(
                        "Goldstein constants need 0 < sigma < delta < 1 (got {}, {})",
                        self.sigma, self.delta
                    ));
                }
            }
            Rule::Armijo => {
                if !(open01(self.sigma) && self.lambda > 0.0 && open01(self.rho)) {
                    return bad(format!(
                        "Armijo constants need 0 < sigma < 1, lambda > 0, 0 < rho < 1 (got {}, {}, {})",
                        self.sigma, self.lambda, self.rho
                    ));
                }
            }
            Rule::Exact => {}
        }
        if !(self.alpha_init > 0.0 && self.alpha_max >= self.alpha_init) {
            return bad(format!(
                "need 0 < alpha_init <= alpha_max (got {}, {})",
                self.alpha_init, self.alpha_max
            ));
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive".into());
        }
        Ok(())
    }
}

/// `(α, φ(α), φ′(α))`.
pub trait MeritValue {
    fn alpha(&self) -> f64;
    fn phi(&self) -> f64;
    fn dphi(&self) -> f64;
    /// `φ(α) − φ(0)` when evaluated directly rather than as a difference of rounded values.
    fn change(&self) -> Option<f64> {
        None
    }
}

/// `φ(α) − φ(0)`.
pub fn merit_change(p0: &impl MeritValue, pa: &impl MeritValue) -> f64 {
    pa.change().unwrap_or_else(|| pa.phi() - p0.phi())
}

/// A merit function that can be sampled at `α ≥ 0`.
pub trait Merit {
    type Point: MeritValue + Clone;
    fn eval(&mut self, alpha: f64) -> Result<Self::Point>;
}

/// Bare merit sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
}

impl MeritValue for Sample {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn phi(&self) -> f64 {
        self.phi
    }
    fn dphi(&self) -> f64 {
        self.dphi
    }
}

/// Merit from a closure `α ↦ (φ, φ′)`.
pub struct FnMerit<F>(pub F);

impl<F: FnMut(f64) -> Result<(f64, f64)>> Merit for FnMerit<F> {
    type Point = Sample;
    fn eval(&mut self, alpha: f64) -> Result<Sample> {
        let (phi, dphi) = (self.0)(alpha)?;
        Ok(Sample { alpha, phi, dphi })
    }
}

/// Outcome of every inequality of the four rules at one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conditions {
    /// `φ(α) ≤ φ(0) + σ₁αφ′(0)`
    pub sufficient_decrease: bool,
    /// `φ′(α) ≥ σ₂φ′(0)`
    pub curvature: bool,
    /// `|φ′(α)| ≤ −σ₂φ′(0)`
    pub strong_curvature: bool,
    /// `φ(α) − φ(0) ≤ σαφ′(0)`
    pub goldstein_upper: bool,
    /// `φ(α) − φ(0) ≥ δαφ′(0)`
    pub goldstein_lower: bool,
    /// `φ(α) ≤ φ(0) + σαφ′(0)`
    pub armijo: bool,
    pub decrease: bool,
}

impl Conditions {
    pub fn accepts(&self, rule: Rule) -> bool {
        match rule {
            Rule::Exact => self.decrease,
            Rule::Armijo => self.armijo,
            Rule::Goldstein => self.goldstein_upper && self.goldstein_lower,
            Rule::Wolfe => self.sufficient_decrease && self.curvature,
            Rule::StrongWolfe => self.sufficient_decrease && self.strong_curvature,
        }
    }

    /// Compact flag string for traces, e.g. `sd|cw|ar`.
    pub fn flags(&self) -> String {
        let named = [
            (self.sufficient_decrease, "sd"),
            (self.curvature, "cw"),
            (self.strong_curvature, "cs"),
            (self.goldstein_upper, "gu"),
            (self.goldstein_lower, "gl"),
            (self.armijo, "ar"),
        ];
        let on: Vec<&str> = named.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect();
        if on.is_empty() {
            "-".into()
        } else {
            on.join("|")
        }
    }
}

pub fn check_conditions(p0: &impl MeritValue, pa: &impl MeritValue, params: &RuleParams) -> Conditions {
    let dphi0 = p0.dphi();
    let (alpha, dphi) = (pa.alpha(), pa.dphi());
    let change = merit_change(p0, pa);
    Conditions {
        sufficient_decrease: change <= params.sigma1 * alpha * dphi0,
        curvature: dphi >= params.sigma2 * dphi0,
        strong_curvature: dphi.abs() <= -params.sigma2 * dphi0,
        goldstein_upper: change <= params.sigma * alpha * dphi0,
        goldstein_lower: change >= params.delta * alpha * dphi0,
        armijo: change <= params.sigma * alpha * dphi0,
        decrease: change < 0.0,
    }
}

/// One tried step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
    /// `φ(α) − φ(0)`
    pub change: f64,
    /// `false` when the merit could not be evaluated (e.g. degenerate peak).
    pub valid: bool,
    pub flags: String,
}

#[derive(Debug, Clone)]
pub struct StepResult<P> {
    pub accepted: P,
    pub rule: Rule,
    pub evals: usize,
    pub trace: Vec<Trial>,
}

/// Errors that mark `α` as outside the domain of `φ` rather than aborting.
fn is_invalid_trial(e: &LmmError) -> bool {
    matches!(
        e,
        LmmError::DegeneratePeak { .. }
            | LmmError::PeakSearch(_)
            | LmmError::Unbounded(_)
            | LmmError::NonFinite(_)
    )
}

struct Search<'m, M: Merit> {
    merit: &'m mut M,
    p0: M::Point,
    params: RuleParams,
    trace: Vec<Trial>,
}

impl<'m, M: Merit> Search<'m, M> {
    fn new(merit: &'m mut M, p0: &M::Point, params: &RuleParams) -> Result<Self> {
        params.validate()?;
        if !(p0.dphi() < 0.0) {
            return Err(LmmError::NotDescent(p0.dphi()));
        }
        Ok(Self {
            merit,
            p0: p0.clone(),
            params: *params,
            trace: Vec::new(),
        })
    }

    /// `None` for an invalid trial.
    fn eval(&mut self, alpha: f64) -> Result<Option<(M::Point, Conditions)>> {
        if self.trace.len() >= self.params.max_evals {
            return Err(LmmError::LineSearch(format!(
                "{} rule: {} evaluations without an acceptable step",
                self.params.rule, self.params.max_evals
            )));
        }
        match self.merit.eval(alpha) {
            Ok(pt) => {
                let c = check_conditions(&self.p0, &pt, &self.params);
                self.trace.push(Trial {
                    alpha,
                    phi: pt.phi(),
                    dphi: pt.dphi(),
                    change: merit_change(&self.p0, &pt),
                    valid: true,
                    flags: c.flags(),
                });
                Ok(Some((pt, c)))
            }
            Err(e) if is_invalid_trial(&e) => {
                log::debug!("line search: trial alpha = {alpha:.6e} discarded ({e})");
                self.trace.push(Trial {
                    alpha,
                    phi: f64::NAN,
                    dphi: f64::NAN,
                    change: f64::NAN,
                    valid: false,
                    flags: "invalid".into(),
                });
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, accepted: M::Point) -> StepResult<M::Point> {
        StepResult {
            accepted,
            rule: self.params.rule,
            evals: self.trace.len(),
            trace: self.trace,
        }
    }

    fn curvature_ok(&self, c: &Conditions) -> bool {
        if self.params.rule == Rule::StrongWolfe {
            c.strong_curvature
        } else {
            c.curvature
        }
    }
}

/// Bracketing phase from `alpha_init` (doubling up to `alpha_max`), then zoom.
pub fn search_wolfe<M: Merit>(merit: &mut M, p0: &M::Point, params: &RuleParams) -> Result<StepResult<M::Point>> {
    if !matches!(params.rule, Rule::Wolfe | Rule::StrongWolfe) {
        return Err(LmmError::Config(format!("search_wolfe called with rule {}", params.rule)));
    }
    let mut s = Search::new(merit, p0, params)?;
    let mut prev = s.p0.clone();
    let mut alpha = params.alpha_init;
    let mut first = true;
    loop {
        let Some((pt, c)) = s.eval(alpha)? else {
            return zoom(s, prev, Hi::Invalid(alpha));
        };
        if !c.sufficient_decrease || (!first && merit_change(&s.p0, &pt) >= merit_change(&s.p0, &prev)) {
            return zoom(s, prev, Hi::Point(pt));
        }
        if s.curvature_ok(&c) {
            return Ok(s.finish(pt));
        }
        if pt.dphi() >= 0.0 {
            return zoom(s, pt, Hi::Point(prev));
        }
        if alpha >= params.alpha_max {
            return Err(LmmError::LineSearch(format!(
                "no bracket up to alpha_max = {:e}: φ may be unbounded below along this ray, \
                 or alpha_max is too small",
                params.alpha_max
            )));
        }
        prev = pt;
        alpha = (2.0 * alpha).min(params.alpha_max);
        first = false;
    }
}

enum Hi<P> {
    Point(P),
    Invalid(f64),
}

impl<P: MeritValue> Hi<P> {
    fn alpha(&self) -> f64 {
        match self {
            Hi::Point(p) => p.alpha(),
            Hi::Invalid(a) => *a,
        }
    }
}

/// Safeguarded quadratic interpolation between `lo` and `hi`.
fn zoom_candidate<P: MeritValue>(p0: &P, lo: &P, hi: &Hi<P>) -> f64 {
    let (a, b) = (lo.alpha(), hi.alpha());
    let delta = b - a;
    let (left, right) = (a + 0.1 * delta, b - 0.1 * delta);
    let (lower, upper) = if left <= right { (left, right) } else { (right, left) };
    let mid = 0.5 * (a + b);
    if let Hi::Point(h) = hi {
        let curv = (merit_change(p0, h) - merit_change(p0, lo) - lo.dphi() * delta) / (delta * delta);
        if curv > 0.0 && curv.is_finite() {
            let cand = a - lo.dphi() / (2.0 * curv);
            if cand.is_finite() {
                return cand.clamp(lower, upper);
            }
        }
    }
    mid
}

fn zoom<M: Merit>(mut s: Search<'_, M>, mut lo: M::Point, mut hi: Hi<M::Point>) -> Result<StepResult<M::Point>> {
    loop {
        let width = (hi.alpha() - lo.alpha()).abs();
        if width <= 1e-14 * hi.alpha().abs().max(lo.alpha().abs()).max(1e-300) {
            return Err(LmmError::LineSearch(format!(
                "{} zoom interval collapsed at alpha = {:.6e}",
                s.params.rule,
                lo.alpha()
            )));
        }
        let alpha = zoom_candidate(&s.p0, &lo, &hi);
        let Some((pt, c)) = s.eval(alpha)? else {
            hi = Hi::Invalid(alpha);
            continue;
        };
        if !c.sufficient_decrease || merit_change(&s.p0, &pt) >= merit_change(&s.p0, &lo) {
            hi = Hi::Point(pt);
            continue;
        }
        if s.curvature_ok(&c) {
            return Ok(s.finish(pt));
        }
        if pt.dphi() * (hi.alpha() - lo.alpha()) >= 0.0 {
            hi = Hi::Point(lo);
        }
        lo = pt;
    }
}

/// `α = λρᵐ` for the smallest `m ≤ 60` passing the decrease test.
pub fn search_armijo<M: Merit>(merit: &mut M, p0: &M::Point, params: &RuleParams) -> Result<StepResult<M::Point>> {
    let mut s = Search::new(merit, p0, params)?;
    let mut alpha = params.lambda;
    for _m in 0..=60 {
        if let Some((pt, c)) = s.eval(alpha)? {
            if c.armijo {
                return Ok(s.finish(pt));
            }
        }
        alpha *= params.rho;
    }
    Err(LmmError::LineSearch("Armijo backtracking exceeded m = 60".into()))
}

/// Bisection on the two Goldstein inequalities.
pub fn search_goldstein<M: Merit>(
    merit: &mut M,
    p0: &M::Point,
    params: &RuleParams,
) -> Result<StepResult<M::Point>> {
    let mut s = Search::new(merit, p0, params)?;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut alpha = params.alpha_init;
    loop {
        match s.eval(alpha)? {
            None => hi = alpha,
            Some((pt, c)) => {
                if c.goldstein_upper && c.goldstein_lower {
                    return Ok(s.finish(pt));
                }
                if !c.goldstein_upper {
                    hi = alpha;
                } else {
                    if alpha >= params.alpha_max {
                        return Err(LmmError::LineSearch(format!(
                            "Goldstein lower bound still fails at alpha_max = {:e}",
                            params.alpha_max
                        )));
                    }
                    lo = alpha;
                }
            }
        }
        alpha = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            (2.0 * alpha).min(params.alpha_max)
        };
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `φ` after a tripling bracket.
pub fn search_exact<M: Merit>(merit: &mut M, p0: &M::Point, params: &RuleParams) -> Result<StepResult<M::Point>> {
    let mut s = Search::new(merit, p0, params)?;
    let tol = 1e-6;
    let mut best: Option<M::Point> = None;
    let o = p0.clone();
    let keep = |best: &mut Option<M::Point>, pt: &M::Point| {
        if best.as_ref().is_none_or(|b| merit_change(&o, pt) < merit_change(&o, b)) {
            *best = Some(pt.clone());
        }
    };

    // bracket a < b < c with φ(b) below both ends
    let (a, mut b, c);
    let mut phi_b;
    let mut alpha = params.alpha_init;
    loop {
        match s.eval(alpha)? {
            Some((pt, _)) if merit_change(&o, &pt) < 0.0 => {
                phi_b = merit_change(&o, &pt);
                keep(&mut best, &pt);
                break;
            }
            _ => alpha /= 3.0,
        }
        if alpha < 1e-12 {
            return Err(LmmError::LineSearch("exact rule: no decrease found".into()));
        }
    }
    b = alpha;
    let mut lo = 0.0;
    loop {
        let next = (3.0 * b).min(params.alpha_max);
        if next <= b {
            return Err(LmmError::LineSearch(format!(
                "exact rule: φ still decreasing at alpha_max = {:e}",
                params.alpha_max
            )));
        }
        match s.eval(next)? {
            Some((pt, _)) if merit_change(&o, &pt) < phi_b => {
                keep(&mut best, &pt);
                lo = b;
                b = next;
                phi_b = merit_change(&o, &pt);
            }
            _ => {
                c = next;
                break;
            }
        }
    }
    a = lo;

    let (mut x0, mut x3) = (a, c);
    let mut x1 = x3 - GOLDEN * (x3 - x0);
    let mut x2 = x0 + GOLDEN * (x3 - x0);
    let f = |s: &mut Search<'_, M>, best: &mut Option<M::Point>, x: f64| -> Result<f64> {
        Ok(match s.eval(x)? {
            Some((pt, _)) => {
                let v = merit_change(&o, &pt);
                keep(best, &pt);
                v
            }
            None => f64::INFINITY,
        })
    };
    let mut f1 = f(&mut s, &mut best, x1)?;
    let mut f2 = f(&mut s, &mut best, x2)?;
    while (x3 - x0).abs() > tol {
        if f1 < f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - GOLDEN * (x3 - x0);
            f1 = f(&mut s, &mut best, x1)?;
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + GOLDEN * (x3 - x0);
            f2 = f(&mut s, &mut best, x2)?;
        }
    }
    let best = best.expect("bracketing stored a point");
    Ok(s.finish(best))
}

/// Dispatches on `params.rule`.
pub fn search<M: Merit>(merit: &mut M, p0: &M::Point, params: &RuleParams) -> Result<StepResult<M::Point>> {
    match params.rule {
        Rule::Wolfe | Rule::StrongWolfe => search_wolfe(merit, p0, params),
        Rule::Armijo => search_armijo(merit, p0, params),
        Rule::Goldstein => search_goldstein(merit, p0, params),
        Rule::Exact => search_exact(merit, p0, params),
    }
}

/// `φ` at one `α` with its peak and sphere point.
#[derive(Debug, Clone)]
pub struct MeritPoint {
    pub alpha: f64,
    pub phi: f64,
    pub dphi: f64,
    /// `φ(α) − φ(0)` from the two peaks directly.
    pub change: f64,
    /// `t(α)/√(1 + α²‖d‖²)`
    pub t_hat: f64,
    pub peak: PeakPoint,
    pub state: SphereState,
}

impl MeritValue for MeritPoint {
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

/// Everything `φ` depends on at iteration `k`.
pub struct LineContext<'a> {
    pub problem: &'a ProblemDef,
    pub basis: &'a SupportBasis,
    pub state: &'a SphereState,
    pub d: &'a GridFunction,
    pub peak: &'a PeakPoint,
    pub peak_opts: PeakOptions,
    d_norm: f64,
    evals: usize,
}

impl<'a> LineContext<'a> {
    pub fn new(
        problem: &'a ProblemDef,
        basis: &'a SupportBasis,
        state: &'a SphereState,
        d: &'a GridFunction,
        peak: &'a PeakPoint,
        peak_opts: PeakOptions,
    ) -> Self {
        let d_norm = problem.op().norm(d);
        Self {
            problem,
            basis,
            state,
            d,
            peak,
            peak_opts,
            d_norm,
            evals: 0,
        }
    }

    pub fn d_norm(&self) -> f64 {
        self.d_norm
    }

    /// Merit evaluations so far, `α = 0` excluded.
    pub fn evals(&self) -> usize {
        self.evals
    }

    /// The `α = 0` point, reusing the current peak.
    pub fn origin(&self) -> Result<MeritPoint> {
        let pairing = self.problem.residual_pairing(&self.peak.w, self.d)?;
        Ok(MeritPoint {
            alpha: 0.0,
            phi: self.peak.value,
            dphi: self.peak.t * pairing,
            change: 0.0,
            t_hat: self.peak.t,
            peak: self.peak.clone(),
            state: self.state.clone(),
        })
    }
}

/// `φ(α)` and `φ′(α) = t̂(α)⟨E′(p(v(α))), d⟩`, warm-started from the current peak.
pub fn phi_eval(ctx: &LineContext<'_>, alpha: f64) -> Result<MeritPoint> {
    if !(alpha >= 0.0) {
        return Err(LmmError::LineSearch(format!("negative step {alpha}")));
    }
    if alpha == 0.0 {
        return ctx.origin();
    }
    let state = normalized_update(ctx.state, ctx.d, alpha, ctx.basis, ctx.problem.op())?;
    let mut peak = maximize_on_halfspace(
        ctx.problem,
        ctx.basis,
        state.v(),
        (ctx.peak.t, &ctx.peak.coeffs),
        &ctx.peak_opts,
    )?;
    let t_hat = peak.t / (1.0 + alpha * alpha * ctx.d_norm * ctx.d_norm).sqrt();
    let pairing = ctx.problem.residual_pairing(&peak.w, ctx.d)?;
    let change = ctx.problem.energy_change(&ctx.peak.w, &peak.w)?;
    // φ values chain from φ(0) so accepted energies decrease with the measured change
    peak.value = ctx.peak.value + change;
    Ok(MeritPoint {
        alpha,
        phi: peak.value,
        dphi: t_hat * pairing,
        change,
        t_hat,
        peak,
        state,
    })
}

impl Merit for LineContext<'_> {
    type Point = MeritPoint;
    fn eval(&mut self, alpha: f64) -> Result<MeritPoint> {
        self.evals += 1;
        phi_eval(self, alpha)
    }
}
