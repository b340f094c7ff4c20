//! Nonlinear source terms `f(x, ξ)`, their primitives `F(x, ξ) = ∫₀^ξ f` and
//! derivatives `∂f/∂ξ`.
//!
//! The spatial dependence enters only through a per-node weight computed once
//! by [`Nonlinearity::node_weight`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// `f = |x|^ell · |ξ|^(power-1) · ξ`.
    Power { ell: f64, power: f64 },
    /// `f = (ξ² + 2ξ)^(3/2)` for `ξ > 0`, extended by zero for `ξ ≤ 0`.
    Chandrasekhar,
}

impl Nonlinearity {
    pub fn node_weight(&self, x: [f64; 2]) -> f64 {
        match *self {
            Nonlinearity::Power { ell, .. } if ell != 0.0 => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    0.0
                } else {
                    r2.powf(0.5 * ell)
                }
            }
            _ => 1.0,
        }
    }

    #[inline]
    pub fn f(&self, weight: f64, xi: f64) -> f64 {
        match *self {
            Nonlinearity::Power { power, .. } => {
                if power == 3.0 {
                    weight * xi * xi * xi
                } else {
                    weight * xi.abs().powf(power - 1.0) * xi
                }
            }
            Nonlinearity::Chandrasekhar => {
                if xi > 0.0 {
                    let s = xi * xi + 2.0 * xi;
                    s * s.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn primitive(&self, weight: f64, xi: f64) -> f64 {
        match *self {
            Nonlinearity::Power { power, .. } => {
                if power == 3.0 {
                    let x2 = xi * xi;
                    0.25 * weight * x2 * x2
                } else {
                    weight * xi.abs().powf(power + 1.0) / (power + 1.0)
                }
            }
            Nonlinearity::Chandrasekhar => chandrasekhar_primitive(xi),
        }
    }

    /// `F(b) − F(a)`; close arguments integrate `f` over `[a, b]` instead of
    /// subtracting primitives.
    pub fn primitive_change(&self, weight: f64, a: f64, b: f64) -> f64 {
        if let Nonlinearity::Power { power, .. } = *self {
            if power == 3.0 {
                return 0.25 * weight * (b - a) * (b + a) * (a * a + b * b);
            }
        }
        if a == b {
            return 0.0;
        }
        if (b - a).abs() > 1e-3 * a.abs().max(b.abs()) {
            return self.primitive(weight, b) - self.primitive(weight, a);
        }
        // same sign here, so `f` is smooth on the interval
        let len = b - a;
        let sum: f64 = gauss_legendre_16()
            .iter()
            .map(|&(s, w)| w * self.f(weight, a + s * len))
            .sum();
        len * sum
    }

    /// `∂f/∂ξ`.
    #[inline]
    pub fn df(&self, weight: f64, xi: f64) -> f64 {
        match *self {
            Nonlinearity::Power { power, .. } => {
                if power == 3.0 {
                    3.0 * weight * xi * xi
                } else {
                    weight * power * xi.abs().powf(power - 1.0)
                }
            }
            Nonlinearity::Chandrasekhar => {
                if xi > 0.0 {
                    3.0 * (xi + 1.0) * (xi * xi + 2.0 * xi).sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

/// 16-point Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static RULE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    RULE.get_or_init(gauss_legendre::<16>)
}

fn gauss_legendre<const N: usize>() -> [(f64, f64); N] {
    let mut rule = [(0.0, 0.0); N];
    let n = N as f64;
    for (k, slot) in rule.iter_mut().enumerate() {
        // Newton on P_N from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=N {
                let m = m as f64;
                let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        *slot = (0.5 * (1.0 + x), 0.5 * w);
    }
    rule
}

/// `F(ξ) = ∫₀^ξ (t² + 2t)^(3/2) dt` for `ξ > 0`, zero otherwise.
///
/// With `t = ξs²` the integrand becomes the smooth `2ξ^(5/2) s⁴ (ξs² + 2)^(3/2)`
/// on `[0, 1]`, which the 16-point rule integrates to near machine precision.
pub fn chandrasekhar_primitive(xi: f64) -> f64 {
    if xi <= 0.0 {
        return 0.0;
    }
    let sum: f64 = gauss_legendre_16()
        .iter()
        .map(|&(s, w)| {
            let s2 = s * s;
            let q = xi * s2 + 2.0;
            w * s2 * s2 * q * q.sqrt()
        })
        .sum();
    2.0 * xi * xi * xi.sqrt() * sum
}
