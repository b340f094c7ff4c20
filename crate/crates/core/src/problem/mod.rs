//! The variational problem `E(u) = ½‖u‖²_a − ∫ F(x, u)` for
//! `-Δu + a(x)u = f(x, u)` in Ω, `u = 0` on ∂Ω.

pub mod nonlinearity;
pub mod region;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LmmError, Result};
use crate::hilbert::{assemble_operator, compensated_sum, solve_linear, EllipticOperator, GridFunction, Mesh};
pub use nonlinearity::Nonlinearity;
pub use region::Region;

/// Relative tolerance for the linear solves inside [`ProblemDef::gradient`].
pub const GRADIENT_SOLVE_TOL: f64 = 1e-12;

/// Benchmark problem families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `a = ω|x|²`, `f = u³`.
    Nlse { omega: f64 },
    /// `a = 0`, `f = |x|^ℓ u³`.
    Henon { ell: f64 },
    /// `a = 0`, `f = (u² + 2u)^(3/2)` for `u > 0` and zero for `u ≤ 0`.
    Chandrasekhar,
    /// `a = ω|x|²`, `f = |x|^ℓ |u|^(p−1) u`.
    Custom { omega: f64, ell: f64, power: f64 },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Nlse { .. } => "nlse",
            ProblemSpec::Henon { .. } => "henon",
            ProblemSpec::Chandrasekhar => "chandrasekhar",
            ProblemSpec::Custom { .. } => "custom",
        }
    }

    fn omega(&self) -> f64 {
        match *self {
            ProblemSpec::Nlse { omega } | ProblemSpec::Custom { omega, .. } => omega,
            _ => 0.0,
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        match *self {
            ProblemSpec::Nlse { .. } => Nonlinearity::Power { ell: 0.0, power: 3.0 },
            ProblemSpec::Henon { ell } => Nonlinearity::Power { ell, power: 3.0 },
            ProblemSpec::Chandrasekhar => Nonlinearity::Chandrasekhar,
            ProblemSpec::Custom { ell, power, .. } => Nonlinearity::Power { ell, power },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LmmError::Config(m));
        match *self {
            ProblemSpec::Nlse { omega } if !(omega > 0.0) => {
                bad(format!("NLSE needs omega > 0, got {omega}"))
            }
            ProblemSpec::Henon { ell } if !(ell >= 0.0) => {
                bad(format!("Hénon needs ell >= 0, got {ell}"))
            }
            ProblemSpec::Custom { omega, ell, power }
                if !(omega >= 0.0 && ell >= 0.0 && power > 1.0) =>
            {
                bad(format!(
                    "custom problem needs omega >= 0, ell >= 0, power > 1 (got {omega}, {ell}, {power})"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Whether `f` is extended by zero for negative arguments.
    pub fn zero_extended(&self) -> bool {
        matches!(self, ProblemSpec::Chandrasekhar)
    }
}

/// Energy value plus both stopping-criterion measures at one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub grad_norm: f64,
    pub sup_residual: f64,
}

/// A benchmark problem discretized on one mesh.
#[derive(Debug)]
pub struct ProblemDef {
    spec: ProblemSpec,
    nonlinearity: Nonlinearity,
    mesh: Arc<Mesh>,
    op: Arc<EllipticOperator>,
    laplace: Arc<EllipticOperator>,
    node_weights: Vec<f64>,
    linear_solves: AtomicUsize,
}

impl ProblemDef {
    pub fn new(spec: ProblemSpec, mesh: Arc<Mesh>) -> Result<Self> {
        spec.validate()?;
        let omega = spec.omega();
        let op = Arc::new(assemble_operator(mesh.clone(), |x| {
            omega * (x[0] * x[0] + x[1] * x[1])
        })?);
        let laplace = if omega == 0.0 {
            op.clone()
        } else {
            Arc::new(assemble_operator(mesh.clone(), |_| 0.0)?)
        };
        let nonlinearity = spec.nonlinearity();
        let node_weights = mesh
            .coords()
            .iter()
            .map(|&x| nonlinearity.node_weight(x))
            .collect();
        Ok(Self {
            spec,
            nonlinearity,
            mesh,
            op,
            laplace,
            node_weights,
            linear_solves: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }
    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn op(&self) -> &EllipticOperator {
        &self.op
    }
    pub fn mesh_id(&self) -> u64 {
        self.mesh.id()
    }
    /// `x`-dependent factor of `f` at each node.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }
    /// Linear solves performed so far through this problem.
    pub fn linear_solves(&self) -> usize {
        self.linear_solves.load(Ordering::Relaxed)
    }

    /// `W f(x, u)` at every node.
    pub fn weighted_source(&self, u: &[f64]) -> Vec<f64> {
        let nl = self.nonlinearity;
        u.iter()
            .zip(&self.node_weights)
            .zip(self.op.weights())
            .map(|((&ui, &c), &w)| w * nl.f(c, ui))
            .collect()
    }

    /// `Σ W F(x, u)` (the discrete `∫ F(x, u)`).
    pub fn potential(&self, u: &[f64]) -> f64 {
        let nl = self.nonlinearity;
        compensated_sum(
            u.iter()
                .zip(&self.node_weights)
                .zip(self.op.weights())
                .map(|((&ui, &c), &w)| w * nl.primitive(c, ui)),
        )
    }

    /// `E(to) − E(from)` without subtracting the two energies:
    /// `½(to − from)ᵀA(to + from) − Σ W (F(to) − F(from))`.
    pub fn energy_change(&self, from: &GridFunction, to: &GridFunction) -> Result<f64> {
        from.check_mesh(self.mesh_id())?;
        to.check_mesh(self.mesh_id())?;
        let (a, b) = (from.values(), to.values());
        let diff: Vec<f64> = b.iter().zip(a).map(|(y, x)| y - x).collect();
        let sum: Vec<f64> = b.iter().zip(a).map(|(y, x)| y + x).collect();
        let quad = self.op.inner_unchecked(&diff, &sum);
        let nl = self.nonlinearity;
        let pot = compensated_sum(
            a.iter()
                .zip(b)
                .zip(&self.node_weights)
                .zip(self.op.weights())
                .map(|(((&x, &y), &c), &w)| w * nl.primitive_change(c, x, y)),
        );
        let e = 0.5 * quad - pot;
        if !e.is_finite() {
            return Err(LmmError::NonFinite("energy change".into()));
        }
        Ok(e)
    }

    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        u.check_mesh(self.mesh_id())?;
        let quad = self.op.inner_unchecked(u.values(), u.values());
        let e = 0.5 * quad - self.potential(u.values());
        if !e.is_finite() {
            return Err(LmmError::NonFinite("energy (iterate diverged)".into()));
        }
        Ok(e)
    }

    /// `A u − W f(u)`; component `i` is `⟨E′(u), δᵢ⟩`.
    pub fn residual_vector(&self, u: &GridFunction) -> Result<GridFunction> {
        u.check_mesh(self.mesh_id())?;
        let mut r = self.op.apply_slice(u.values());
        for (ri, si) in r.iter_mut().zip(self.weighted_source(u.values())) {
            *ri -= si;
        }
        Ok(u.with_values(r))
    }

    /// `⟨E′(u), φ⟩ = φᵀ(A u − W f(u))`.
    pub fn residual_pairing(&self, u: &GridFunction, phi: &GridFunction) -> Result<f64> {
        phi.check_mesh(self.mesh_id())?;
        let r = self.residual_vector(u)?;
        Ok(dot(r.values(), phi.values()))
    }

    /// Riesz representer `g = u − A⁻¹(W f(u))` of `E′(u)` in the `a`-inner product.
    pub fn gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        u.check_mesh(self.mesh_id())?;
        let load = u.with_values(self.weighted_source(u.values()));
        let phi = solve_linear(&self.op, &load, GRADIENT_SOLVE_TOL)?;
        self.linear_solves.fetch_add(1, Ordering::Relaxed);
        Ok(u.combine(1.0, -1.0, &phi))
    }

    /// `max |Δu − a u + f(x, u)|` with the five-point Laplacian.
    pub fn residual_sup(&self, u: &GridFunction) -> Result<f64> {
        let r = self.residual_vector(u)?;
        Ok(r.values()
            .iter()
            .zip(self.op.weights())
            .fold(0.0, |m, (ri, w)| m.max((ri / w).abs())))
    }

    pub fn energy_report(&self, u: &GridFunction) -> Result<EnergyReport> {
        let g = self.gradient(u)?;
        Ok(EnergyReport {
            value: self.energy(u)?,
            grad_norm: self.op.norm(&g),
            sup_residual: self.residual_sup(u)?,
        })
    }

    /// Normalized solution of `-Δṽ = 1_{Ω₁} − 1_{Ω₂}` with zero boundary data.
    ///
    /// The indicators are averaged over each node's `h × h` cell on a
    /// `CELL_SAMPLES²` sub-grid. An `omega2` of `complement` means `Ω \ Ω₁`.
    pub fn initial_direction(&self, omega1: &Region, omega2: &Region) -> Result<GridFunction> {
        if omega1.is_complement() {
            return Err(LmmError::Region("Ω₁ cannot be `complement`".into()));
        }
        let h = self.mesh.h();
        let h2 = h * h;
        let offsets: Vec<f64> = (0..CELL_SAMPLES)
            .map(|k| h * ((k as f64 + 0.5) / CELL_SAMPLES as f64 - 0.5))
            .collect();
        let rhs = GridFunction::from_fn(&self.mesh, |x| {
            let mut acc = 0i32;
            for &dx in &offsets {
                for &dy in &offsets {
                    let y = [x[0] + dx, x[1] + dy];
                    let in1 = omega1.contains(y);
                    let in2 = if omega2.is_complement() {
                        !in1
                    } else {
                        omega2.contains(y)
                    };
                    acc += i32::from(in1) - i32::from(in2);
                }
            }
            h2 * f64::from(acc) / (CELL_SAMPLES * CELL_SAMPLES) as f64
        });
        let v = solve_linear(&self.laplace, &rhs, GRADIENT_SOLVE_TOL)?;
        self.linear_solves.fetch_add(1, Ordering::Relaxed);
        let norm = self.op.norm(&v);
        if norm == 0.0 {
            return Err(LmmError::ZeroDirection);
        }
        let v = v.scaled(1.0 / norm);
        // one more pass for the last ulp of normalization
        let norm = self.op.norm(&v);
        Ok(v.scaled(1.0 / norm))
    }
}

/// Sub-samples per axis when averaging region indicators over a cell.
pub const CELL_SAMPLES: usize = 4;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}
