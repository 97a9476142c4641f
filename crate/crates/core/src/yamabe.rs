//! Yamabe-type quotient of a test function transported along the level sets
//! of the capacity potential.
//!
//! For `φ = f(w)` the coarea formula turns both integrals of the quotient
//! `8∫|∇φ|² dV / (∫φ⁶ dV)^{1/3}` into integrals over the level parameter `t`:
//! `∫|∇φ|² dV = C0 ∫ f'(t)² e^t dt` and `∫φ⁶ dV = ∫ f(t)⁶ (area/|∇w|)(t) dt`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::capacity::{level_set_report, HarmonicSolution};
use crate::error::{ensure_domain, Error, Result};
use crate::profile::{validate_profile, ValidationOptions};
use crate::quad::{derivative_with, integrate, integrate_to_infinity_scaled, Stencil};

/// Default truncation of the level integrals.
pub const T_MAX: f64 = 40.0;

/// Relative tolerance of the level integrals.
const QUOTIENT_RTOL: f64 = 1e-12;

/// Decay rate below which a test function is not admissible: `f e^{t/2}`
/// must tend to zero, with some margin.
const MIN_DECAY_RATE: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaConstants {
    pub sigma1: f64,
    pub sigma2: f64,
}

/// `σ1 = 6(2π²)^{2/3}` and `σ2 = σ1 / 2^{2/3} = 6π^{4/3}`.
pub fn sigma_constants() -> SigmaConstants {
    let sigma1 = 6.0 * (2.0 * PI * PI).powf(2.0 / 3.0);
    SigmaConstants {
        sigma1,
        sigma2: 6.0 * PI.powf(4.0 / 3.0),
    }
}

/// `|g(t)| <= constant · e^{-rate t}` on the sampled window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpBound {
    pub constant: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub from_t: f64,
    pub to_t: f64,
    /// Bound on `f`, when it decays fast enough.
    pub f: Option<ExpBound>,
    /// Bound on `f'`, when it decays fast enough.
    pub f_prime: Option<ExpBound>,
}

fn exp_bound(g: &dyn Fn(f64) -> f64, from: f64, to: f64) -> Option<ExpBound> {
    let samples: Vec<(f64, f64)> = (0..=16)
        .map(|j| {
            let t = from + (to - from) * j as f64 / 16.0;
            (t, g(t).abs())
        })
        .collect();
    if samples.iter().any(|&(_, v)| !v.is_finite()) {
        return None;
    }
    if samples.iter().all(|&(_, v)| v == 0.0) {
        return Some(ExpBound {
            constant: 0.0,
            rate: 1.0,
        });
    }
    if samples.iter().any(|&(_, v)| v == 0.0) {
        return None;
    }
    let rate = samples
        .windows(2)
        .map(|p| -(p[1].1 / p[0].1).ln() / (p[1].0 - p[0].0))
        .fold(f64::INFINITY, f64::min);
    if !(rate >= MIN_DECAY_RATE) {
        return None;
    }
    let constant = samples.iter().map(|&(t, v)| v * (rate * t).exp()).fold(0.0, f64::max);
    Some(ExpBound { constant, rate })
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function `f(t)` on `[0, ∞)` transported to `φ = f(w)`.
#[derive(Clone)]
pub struct TestFunction {
    label: String,
    f: Scalar,
    f_prime: Scalar,
    certificate: DecayCertificate,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl TestFunction {
    /// Wraps `f` and its derivative, certifying exponential decay on
    /// `[T_MAX/2, T_MAX]`.
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_parts(label.into(), Arc::new(f), Arc::new(f_prime))
    }

    fn from_parts(label: String, f: Scalar, f_prime: Scalar) -> Self {
        let (from, to) = (T_MAX / 2.0, T_MAX);
        let certificate = DecayCertificate {
            from_t: from,
            to_t: to,
            f: exp_bound(&*f, from, to),
            f_prime: exp_bound(&*f_prime, from, to),
        };
        TestFunction {
            label,
            f,
            f_prime,
            certificate,
        }
    }

    /// `λ f`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let (f, fp) = (Arc::clone(&self.f), Arc::clone(&self.f_prime));
        Self::from_parts(
            format!("{lambda} * {}", self.label),
            Arc::new(move |t| lambda * f(t)),
            Arc::new(move |t| lambda * fp(t)),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.f_prime)(t)
    }

    pub fn certificate(&self) -> &DecayCertificate {
        &self.certificate
    }

    fn require_decay(&self) -> Result<(ExpBound, ExpBound)> {
        match (self.certificate.f, self.certificate.f_prime) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::DivergentTail(format!(
                "test function `{}` is not certified to decay faster than e^(-t/2)",
                self.label
            ))),
        }
    }
}

/// `u0 = √(2/(1+r²)) / (1 + 1/r)`: the conformal factor taking the
/// Schwarzschild exterior of mass 2 to the unit round sphere.
pub fn model_conformal_factor(r: f64) -> f64 {
    (2.0 / (1.0 + r * r)).sqrt() / (1.0 + 1.0 / r)
}

/// Largest `|R - 6|` of `u0⁴ (1 + 1/r)⁴ g_euc` on a log grid over
/// `r ∈ [0.05, 50]`, with `R = -8ψ⁻⁵Δψ` from difference quotients of
/// `ψ = u0 (1 + 1/r)`.
pub fn model_curvature_defect() -> f64 {
    let psi = |r: f64| model_conformal_factor(r) * (1.0 + 1.0 / r);
    (0..=60)
        .map(|i| {
            let r = 0.05 * 1000f64.powf(i as f64 / 60.0);
            let d1 = derivative_with(psi, r, 1, 1e-2 * r, Stencil::Central);
            let d2 = derivative_with(psi, r, 2, 2e-2 * r, Stencil::Central);
            let scalar = -8.0 * (d2 + 2.0 * d1 / r) / psi(r).powi(5);
            (scalar - 6.0).abs()
        })
        .fold(0.0, f64::max)
}

/// The model test function `f(t) = u0(2e^t - 1)`, after checking that `u0`
/// does produce the round metric.
pub fn model_test_function() -> Result<TestFunction> {
    let defect = model_curvature_defect();
    if !(defect <= 1e-6) {
        return Err(Error::Hypothesis(format!(
            "model conformal factor does not give R = 6 (defect {defect:e})"
        )));
    }
    let f = |t: f64| {
        let r = 2.0 * t.exp() - 1.0;
        2f64.sqrt() * r / ((1.0 + r) * (1.0 + r * r).sqrt())
    };
    let f_prime = move |t: f64| {
        let r = 2.0 * t.exp() - 1.0;
        f(t) * (1.0 - r * r * r) / (r * (1.0 + r * r))
    };
    Ok(TestFunction::custom("model", f, f_prime))
}

/// A level integral truncated at `T` with its fitted exponential tail added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelIntegral {
    pub value: f64,
    /// Fitted contribution of `[T, ∞)`, included in `value`.
    pub tail: f64,
}

/// `∫_0^∞ g`, truncated at `t_max`, for `g` decaying at rate `rate`.
fn level_integral(g: impl Fn(f64) -> f64, t_max: f64, rate: f64) -> Result<LevelIntegral> {
    let head = integrate(&g, 0.0, t_max, QUOTIENT_RTOL, 0.0)?.require()?;
    let tail = g(t_max).abs() / rate;
    Ok(LevelIntegral {
        value: head + tail,
        tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumeratorEstimate {
    /// `∫ f'(t)² e^t dt`.
    pub integral: LevelIntegral,
    /// `∫|∇φ|² dV = C0 ∫ f'² e^t dt`.
    pub value: f64,
}

/// `∫|∇φ|² dV = C0 ∫_0^∞ f'(t)² e^t dt`.
pub fn quotient_numerator(f: &TestFunction, c0: f64) -> Result<NumeratorEstimate> {
    quotient_numerator_to(f, c0, T_MAX)
}

pub fn quotient_numerator_to(f: &TestFunction, c0: f64, t_max: f64) -> Result<NumeratorEstimate> {
    ensure_domain(t_max > 0.0, "t_max", t_max, "truncation must be positive")?;
    let bound = f
        .certificate
        .f_prime
        .ok_or_else(|| Error::DivergentTail(format!("derivative of `{}` is not certified to decay", f.label)))?;
    let integral = level_integral(
        |t| {
            let d = f.derivative(t);
            d * d * t.exp()
        },
        t_max,
        2.0 * bound.rate - 1.0,
    )?;
    Ok(NumeratorEstimate {
        value: c0 * integral.value,
        integral,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DenominatorEstimate {
    /// `∫φ⁶ dV = ∫ f⁶ (area/|∇w|) dt`.
    pub exact: LevelIntegral,
    /// `π⁻² C0³ ∫ f⁶ e^{3t} (2 - e^{-t})⁻⁴ dt`.
    pub lower: LevelIntegral,
}

fn require_minimal(h: &HarmonicSolution) -> Result<()> {
    let d = validate_profile(h.profile(), &ValidationOptions::default())?;
    if !d.boundary.minimal {
        return Err(Error::Hypothesis(format!(
            "boundary is not minimal (H = {:e}); the lower bound needs W(t) <= π(2 - e^-t)²",
            d.boundary.mean_curvature
        )));
    }
    Ok(())
}

/// Exact level-set denominator and its lower bound; refuses non-minimal
/// boundaries.
pub fn quotient_denominator(f: &TestFunction, h: &HarmonicSolution) -> Result<DenominatorEstimate> {
    quotient_denominator_to(f, h, T_MAX)
}

pub fn quotient_denominator_to(f: &TestFunction, h: &HarmonicSolution, t_max: f64) -> Result<DenominatorEstimate> {
    ensure_domain(t_max > 0.0, "t_max", t_max, "truncation must be positive")?;
    require_minimal(h)?;
    let bound = f
        .certificate
        .f
        .ok_or_else(|| Error::DivergentTail(format!("`{}` is not certified to decay", f.label)))?;
    let rate = 6.0 * bound.rate - 3.0;
    let c0 = h.boundary_flux();

    let failure = std::cell::RefCell::new(None);
    let exact = level_integral(
        |t| {
            let v = f.value(t);
            if v == 0.0 {
                return 0.0;
            }
            match level_set_report(h, t) {
                Ok(d) => v.powi(6) * d.area / d.grad_w,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        t_max,
        rate,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let exact = exact?;

    let lower = level_integral(
        |t| f.value(t).powi(6) * (3.0 * t).exp() / (2.0 - (-t).exp()).powi(4),
        t_max,
        rate,
    )?;
    let scale = c0.powi(3) / (PI * PI);
    Ok(DenominatorEstimate {
        exact,
        lower: LevelIntegral {
            value: scale * lower.value,
            tail: scale * lower.tail,
        },
    })
}

/// `∫|∇φ|² dV` computed directly over the manifold, `∫ f'(w)² |∇w|² dV`, as
/// an independent check of the level-parameter route.
pub fn coarea_numerator(f: &TestFunction, h: &HarmonicSolution) -> Result<f64> {
    let w = h.profile();
    let chart = w.chart();
    let failure = std::cell::RefCell::new(None);
    let integrand = |x: f64| {
        let u = match h.potential_at_chart(x) {
            Ok(u) => u,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return f64::NAN;
            }
        };
        if u <= 0.0 {
            return 0.0;
        }
        let rho = chart.radius(x).value;
        let grad = h.c() / (rho * rho * u);
        let d = f.derivative(-u.ln());
        d * d * grad * grad * 4.0 * PI * rho * rho * chart.stretch(x).value
    };
    let result = integrate_to_infinity_scaled(integrand, w.chart_start(), w.length_scale(), QUOTIENT_RTOL, 0.0);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(result?.require()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimates {
    pub numerator: f64,
    pub denominator: f64,
    pub denominator_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientReport {
    pub test_function: String,
    /// Boundary flux `C0`.
    pub c0: f64,
    /// `∫ f'(t)² e^t dt`.
    pub numerator_integral: f64,
    /// `8∫|∇φ|² dV`.
    pub numerator: f64,
    /// `8∫|∇φ|² dV` by direct integration over the manifold.
    pub numerator_coarea: f64,
    /// `∫φ⁶ dV`.
    pub denominator: f64,
    pub denominator_lower: f64,
    pub quotient: f64,
    pub quotient_upper: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Relative change of `quotient_upper` when `C0` is doubled.
    pub c0_invariance_defect: f64,
    pub truncation_t: f64,
    pub tail_estimate: TailEstimates,
}

/// Evaluates the transported quotient for `f` (the model test function when
/// `None`). Requires `R >= 0` and a minimal boundary.
pub fn yamabe_quotient(h: &HarmonicSolution, f: Option<&TestFunction>) -> Result<QuotientReport> {
    let model;
    let f = match f {
        Some(f) => f,
        None => {
            model = model_test_function()?;
            &model
        }
    };
    f.require_decay()?;
    let diagnostics = validate_profile(h.profile(), &ValidationOptions::default())?;
    if !diagnostics.nonneg_scalar.passed {
        return Err(Error::Hypothesis(format!(
            "scalar curvature is negative (min Rρ² = {:e} at s = {})",
            diagnostics.nonneg_scalar.min_scaled, diagnostics.nonneg_scalar.at_s
        )));
    }

    let c0 = h.boundary_flux();
    let (num, den) = rayon::join(|| quotient_numerator(f, c0), || quotient_denominator(f, h));
    let (num, den) = (num?, den?);
    let coarea = coarea_numerator(f, h)?;

    let numerator = 8.0 * num.value;
    let quotient = numerator / den.exact.value.cbrt();
    let quotient_upper = numerator / den.lower.value.cbrt();
    // Numerator ∝ C0, lower denominator ∝ C0³.
    let doubled = 8.0 * (2.0 * c0) * num.integral.value / (8.0 * den.lower.value).cbrt();
    let sigma = sigma_constants();
    Ok(QuotientReport {
        test_function: f.label.clone(),
        c0,
        numerator_integral: num.integral.value,
        numerator,
        numerator_coarea: 8.0 * coarea,
        denominator: den.exact.value,
        denominator_lower: den.lower.value,
        quotient,
        quotient_upper,
        sigma1: sigma.sigma1,
        sigma2: sigma.sigma2,
        c0_invariance_defect: (doubled / quotient_upper - 1.0).abs(),
        truncation_t: T_MAX,
        tail_estimate: TailEstimates {
            numerator: 8.0 * c0 * num.integral.tail,
            denominator: den.exact.tail,
            denominator_lower: den.lower.tail,
        },
    })
}

/// One row of the integrand table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrandRow {
    pub t: f64,
    pub f: f64,
    pub f_prime: f64,
    /// `8 C0 f'² e^t`; integrates to the numerator.
    pub num_integrand: f64,
    /// `f⁶ area/|∇w|`; integrates to the exact denominator.
    pub den_integrand: f64,
}

pub fn integrand_table(
    f: &TestFunction,
    h: &HarmonicSolution,
    t_max: f64,
    samples: usize,
) -> Result<Vec<IntegrandRow>> {
    ensure_domain(
        samples >= 2,
        "t_samples",
        samples as f64,
        "at least two samples are needed",
    )?;
    let c0 = h.boundary_flux();
    (0..samples)
        .map(|i| {
            let t = t_max * i as f64 / (samples - 1) as f64;
            let d = level_set_report(h, t)?;
            let (v, dv) = (f.value(t), f.derivative(t));
            Ok(IntegrandRow {
                t,
                f: v,
                f_prime: dv,
                num_integrand: 8.0 * c0 * dv * dv * t.exp(),
                den_integrand: v.powi(6) * d.area / d.grad_w,
            })
        })
        .collect()
}
