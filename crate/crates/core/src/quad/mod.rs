//! Numerical kernel shared by every other module: adaptive quadrature on
//! finite and semi-infinite intervals, bracketed root solving and
//! Richardson-extrapolated differentiation.
//!
//! Everything here is stateless and deterministic: the same inputs always
//! produce bit-identical outputs.

mod cumulative;
mod diff;
mod kronrod;
mod root;

use serde::Serialize;
use thiserror::Error;

pub use cumulative::{geometric_knots, RunningIntegral, TailIntegral};
pub use diff::{derivative, derivative_with, Stencil};
pub use root::bracketed_root;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite on [{a}, {b}]")]
    NonFinite { a: f64, b: f64 },
    #[error("integrand tail is not certified to decay like x^-2 beyond {a}")]
    TailNotCertified { a: f64 },
    #[error("quadrature did not converge: value {value}, error estimate {abs_err_estimate}")]
    NotConverged { value: f64, abs_err_estimate: f64 },
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root solve did not converge within {iterations} iterations")]
    RootNotConverged { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    /// The value, or an error if the adaptive loop ran out of subdivisions.
    pub fn require(self) -> Result<f64, QuadError> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(QuadError::NotConverged {
                value: self.value,
                abs_err_estimate: self.abs_err_estimate,
            })
        }
    }
}

/// Integrates `f` over `[a, b]` to `max(atol, rtol * |value|)`.
///
/// Non-convergence is reported through [`QuadResult::converged`], not as an
/// error; use [`QuadResult::require`] when a converged value is mandatory.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    kronrod::adaptive(&f, a, b, rtol, atol)
}

/// Integrates `f` over `[a, ∞)` after the compactification
/// `x = a + τ / (1 - τ)`, `τ ∈ [0, 1)`.
///
/// The integrand must decay at least like `x^-2`; this is probed before
/// integrating and reported as [`QuadError::TailNotCertified`] otherwise.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, rtol: f64, atol: f64) -> Result<QuadResult, QuadError> {
    integrate_to_infinity_scaled(f, a, a.abs().max(1.0), rtol, atol)
}

/// As [`integrate_to_infinity`] with an explicit length scale:
/// `x = a + scale * τ / (1 - τ)`.
pub fn integrate_to_infinity_scaled<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    rtol: f64,
    atol: f64,
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || !(scale > 0.0) {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    certify_tail(&f, a, scale)?;
    let mapped = |tau: f64| {
        let one_minus = 1.0 - tau;
        let x = a + scale * tau / one_minus;
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx * scale / (one_minus * one_minus)
        }
    };
    kronrod::adaptive(&mapped, 0.0, 1.0, rtol, atol)
}

/// Checks that `|f(x)| x^2` does not keep growing over the last decades
/// sampled, i.e. that the integrand decays at least like `x^-2` up to
/// logarithmic factors.
fn certify_tail<F: Fn(f64) -> f64>(f: &F, a: f64, scale: f64) -> Result<(), QuadError> {
    let weighted: Vec<f64> = (3..=9)
        .map(|k| {
            let offset = scale * 10f64.powi(k);
            let x = a + offset;
            let fx = f(x).abs();
            fx * (offset + scale) * (offset + scale)
        })
        .collect();
    if weighted.iter().any(|g| !g.is_finite()) {
        return Err(QuadError::TailNotCertified { a });
    }
    let growing = weighted
        .windows(2)
        .skip(weighted.len() - 4)
        .any(|w| w[1] > 2.0 * w[0] + f64::MIN_POSITIVE);
    if growing {
        return Err(QuadError::TailNotCertified { a });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_and_trig_on_finite_intervals() {
        let r = integrate(|x| x * x, 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);

        let r = integrate(f64::sin, 0.0, PI, 1e-12, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn model_flux_integral_to_infinity() {
        // ∫_1^∞ dr / (r + 1)^2 = 1/2 from the antiderivative -1/(r + 1).
        let r = integrate_to_infinity(|x| 1.0 / ((x + 1.0) * (x + 1.0)), 1.0, 1e-12, 0.0).unwrap();
        assert!(r.converged);
        assert!((r.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-12, 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn model_quotient_integrals() {
        let den = integrate_to_infinity(|r| r * r / (1.0 + r * r).powi(3), 1.0, 1e-12, 0.0).unwrap();
        assert!((den.value - PI / 32.0).abs() < 1e-13);

        let num = integrate_to_infinity(
            |r| {
                let p = r * r * r - 1.0;
                p * p / ((1.0 + r) * (1.0 + r) * (1.0 + r * r).powi(3))
            },
            1.0,
            1e-12,
            0.0,
        )
        .unwrap();
        assert!((num.value - 3.0 * PI / 32.0).abs() < 1e-13);
    }

    #[test]
    fn slowly_decaying_tail_is_rejected() {
        let err = integrate_to_infinity(|x| 1.0 / x, 1.0, 1e-10, 0.0).unwrap_err();
        assert_eq!(err, QuadError::TailNotCertified { a: 1.0 });
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, 1e-10, 0.0),
            Err(QuadError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn nan_integrand_is_reported() {
        assert!(matches!(
            integrate(|_| f64::NAN, 0.0, 1.0, 1e-10, 0.0),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn non_convergence_is_flagged() {
        // A jump integrated to an unreachable tolerance exhausts the segment budget.
        let r = integrate(|x| if x < 0.3 { 0.0 } else { 1.0 }, 0.0, 1.0, 0.0, 1e-300).unwrap();
        assert!(!r.converged);
        assert!(r.require().is_err());
    }

    #[test]
    fn error_estimates_are_honest() {
        type Case = (Box<dyn Fn(f64) -> f64>, f64, f64, f64);
        let battery: Vec<Case> = vec![
            (Box::new(|x: f64| x.exp()), 0.0, 1.0, 1f64.exp() - 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), 0.0, 10.0, 10f64.atan()),
            (Box::new(|x: f64| x.sqrt()), 0.0, 1.0, 2.0 / 3.0),
            (Box::new(|x: f64| x.ln()), 1.0, 3.0, 3.0 * 3f64.ln() - 2.0),
            (Box::new(|x: f64| (50.0 * x).cos()), 0.0, 1.0, 50f64.sin() / 50.0),
        ];
        for rtol in [1e-4, 1e-8, 1e-12] {
            for (f, a, b, exact) in &battery {
                let r = integrate(f, *a, *b, rtol, 0.0).unwrap();
                let true_err = (r.value - exact).abs();
                assert!(
                    true_err <= 10.0 * r.abs_err_estimate,
                    "rtol {rtol}: {true_err} vs {}",
                    r.abs_err_estimate
                );
            }
        }
    }

    #[test]
    fn semi_infinite_matches_split_with_analytic_tail() {
        // ∫_0^∞ 1/(1+x)^3 = 1/2; split at A = 7 with tail 1/(2 (1+A)^2).
        let f = |x: f64| 1.0 / (1.0 + x).powi(3);
        let whole = integrate_to_infinity(f, 0.0, 1e-12, 0.0).unwrap();
        let head = integrate(f, 0.0, 7.0, 1e-12, 0.0).unwrap();
        let tail = 1.0 / (2.0 * 64.0);
        let combined = whole.abs_err_estimate + head.abs_err_estimate + 1e-15;
        assert!((whole.value - (head.value + tail)).abs() <= combined);
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| (x.sin() + 2.0).ln() / (1.0 + x * x);
        let a = integrate_to_infinity(f, 0.5, 1e-11, 0.0).unwrap();
        let b = integrate_to_infinity(f, 0.5, 1e-11, 0.0).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }
}
