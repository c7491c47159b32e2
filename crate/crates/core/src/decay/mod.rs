//! Decay exponents along radial rays and the exponent calculus for the
//! umbilical ratio.

mod fit;
mod measure;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_adaptive, AdaptiveOptions};

pub use fit::{fit_power_law, DecayFit, Verdict, DECAY_CSV_COLUMNS, MIN_SAMPLES};
pub use measure::{default_ray_range, measure_decay, predicted_exponent, DecayQuantity};

/// Curvature decay bounds `c₁ r^{−b} ≤ R ≤ c₂ r^{−a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

impl TheoremParams {
    pub fn new(a: f64, b: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "a must lie in (0, 1], got {a}"
            )));
        }
        if !(b >= a) || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "b must be finite and at least a = {a}, got {b}"
            )));
        }
        if !(c1 > 0.0 && c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "c1, c2 must be positive, got {c1}, {c2}"
            )));
        }
        Ok(Self { a, b, c1, c2 })
    }

    /// Exponents only; the constants do not enter any formula here.
    pub fn exponents(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 1.0, 1.0)
    }
}

/// `σ = 8a/b − 6`.
pub fn sigma_select(params: &TheoremParams) -> f64 {
    8.0 * params.a / params.b - 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainExponents {
    pub sigma: f64,
    pub e1: f64,
    pub e2: f64,
    pub effective: f64,
    pub asymptotically_round: bool,
}

/// `e₁ = 6a − 8a²/b`, `e₂ = 2b − 4a`; round at infinity iff `b < 2a`.
pub fn main_exponents(params: &TheoremParams) -> MainExponents {
    let (a, b) = (params.a, params.b);
    let sigma = sigma_select(params);
    let e1 = 6.0 * a - 8.0 * a * a / b;
    debug_assert!((e1 + a * sigma).abs() <= 1e-12 * (1.0 + e1.abs()));
    let e2 = 2.0 * b - 4.0 * a;
    MainExponents {
        sigma,
        e1,
        e2,
        effective: e1.min(e2),
        asymptotically_round: b < 2.0 * a,
    }
}

/// Growth orders of the three groups of terms in the `U_σ` inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermOrders {
    pub order_i: f64,
    pub order_ii: f64,
    pub order_iii: f64,
}

pub fn term_orders(params: &TheoremParams, sigma: f64) -> TermOrders {
    let (a, b) = (params.a, params.b);
    let order_ii = (6.0 + sigma) * b / 2.0 - 4.0 * a;
    TermOrders {
        order_i: (2.0 + sigma) * b / 2.0 - 3.0 * a,
        order_ii,
        order_iii: order_ii,
    }
}

/// Solution of `u' = −u + C√u`, `u(0) = u₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSolution {
    pub c: f64,
    pub u0: f64,
    pub sup_bound: f64,
}

pub fn comparison_bound(c: f64, u0: f64) -> Result<ComparisonSolution> {
    if !(c >= 0.0 && u0 >= 0.0) || !c.is_finite() || !u0.is_finite() {
        return Err(Error::InvalidInput(format!(
            "C and u0 must be finite and nonnegative, got {c}, {u0}"
        )));
    }
    Ok(ComparisonSolution {
        c,
        u0,
        sup_bound: u0.max(c * c),
    })
}

impl ComparisonSolution {
    /// `u(τ) = (C + (√u₀ − C) e^{−τ/2})²`.
    pub fn eval(&self, tau: f64) -> f64 {
        let v = self.c + (self.u0.sqrt() - self.c) * (-0.5 * tau).exp();
        v * v
    }

    pub fn limit(&self) -> f64 {
        self.c * self.c
    }

    /// Adaptive Dormand–Prince on `u` itself, at local tolerance `1e−12`.
    ///
    /// From `u₀ = 0` with `C > 0` the problem is not Lipschitz and `u ≡ 0` also
    /// solves it; the integration then starts at `τ = 10⁻³` from the local
    /// series `u ≈ (C²/4)τ²(1 − τ/2)` of the branch that leaves zero.
    pub fn integrate_numerically(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau must be finite and nonnegative, got {tau}"
            )));
        }
        let c = self.c;
        let (mut t0, mut u0) = (0.0, self.u0);
        if u0 == 0.0 && c > 0.0 {
            t0 = SERIES_START.min(tau);
            u0 = 0.25 * c * c * t0 * t0 * (1.0 - 0.5 * t0);
        }
        if tau == t0 {
            return Ok(u0);
        }
        let mut opts = AdaptiveOptions::new(1e-12);
        opts.initial_step = 1e-4;
        let y = integrate_adaptive(
            |_, u: &[f64; 1]| [-u[0] + c * u[0].max(0.0).sqrt()],
            t0,
            [u0],
            tau,
            opts,
            |_, _, _| Ok(()),
        )?;
        Ok(y[0])
    }
}

const SERIES_START: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(a: f64, b: f64) -> TheoremParams {
        TheoremParams::exponents(a, b).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_select(&p(1.0, 1.0)), 2.0);
        assert_eq!(sigma_select(&p(1.0, 2.0)), -2.0);
        assert_eq!(sigma_select(&p(0.3, 0.3)), 2.0);
    }

    #[test]
    fn exponent_examples() {
        let m = main_exponents(&p(1.0, 1.0));
        assert_eq!(
            (m.e1, m.e2, m.effective, m.asymptotically_round),
            (-2.0, -2.0, -2.0, true)
        );
        let m = main_exponents(&p(1.0, 1.5));
        assert_relative_eq!(m.e1, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(
            (m.e2, m.effective, m.asymptotically_round),
            (-1.0, -1.0, true)
        );
        let m = main_exponents(&p(0.5, 1.0));
        assert_eq!(m.e2, 0.0);
        assert!(!m.asymptotically_round);
    }

    #[test]
    fn term_order_examples() {
        let t = term_orders(&p(1.0, 1.0), 2.0);
        assert_eq!((t.order_i, t.order_ii, t.order_iii), (-1.0, 0.0, 0.0));
        let t = term_orders(&p(1.0, 2.0), -2.0);
        assert_eq!((t.order_i, t.order_ii, t.order_iii), (-3.0, 0.0, 0.0));
    }

    #[test]
    fn params_validation() {
        assert!(TheoremParams::exponents(0.0, 1.0).is_err());
        assert!(TheoremParams::exponents(1.2, 2.0).is_err());
        assert!(TheoremParams::exponents(0.5, 0.4).is_err());
        assert!(TheoremParams::new(0.5, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn comparison_examples() {
        let s = comparison_bound(2.0, 9.0).unwrap();
        for tau in [0.0, 0.7, 3.0, 20.0] {
            assert_relative_eq!(
                s.eval(tau),
                (2.0 + (-0.5 * tau).exp()).powi(2),
                max_relative = 1e-15
            );
        }
        assert_eq!((s.sup_bound, s.limit()), (9.0, 4.0));
        let s = comparison_bound(0.0, 1.0).unwrap();
        assert_relative_eq!(s.eval(3.0), (-3.0f64).exp(), max_relative = 1e-14);
        let s = comparison_bound(1.5, 2.25).unwrap();
        assert_eq!(s.eval(7.0), 2.25);
        assert!(comparison_bound(-1.0, 1.0).is_err());
        assert!(comparison_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_integrator() {
        for (c, u0) in [
            (2.0, 9.0),
            (2.0, 0.0),
            (2.0, 0.5),
            (0.0, 1.0),
            (0.0, 0.0),
            (3.0, 9.0),
            (0.7, 4.0),
        ] {
            let s = comparison_bound(c, u0).unwrap();
            for tau in [0.0, 1e-4, 0.5, 5.0, 20.0, 50.0] {
                let num = s.integrate_numerically(tau).unwrap();
                assert!(
                    (num - s.eval(tau)).abs() < 1e-8,
                    "C={c} u0={u0} tau={tau}: {num} vs {}",
                    s.eval(tau)
                );
            }
        }
    }
}
