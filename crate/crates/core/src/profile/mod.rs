//! Rotationally symmetric asymptotically flat exterior metrics
//! `ds² + ρ(s)² dΩ²` and their curvature.
//!
//! A [`WarpedProfile`] is stored through a [`RadialChart`]: any radial
//! coordinate `x` on `[x0, ∞)` together with the areal radius `ρ(x)` and the
//! stretch `J(x) = ds/dx`. Isotropic Schwarzschild coordinates, tabulated
//! arclength samples and conformally transformed metrics are all charts, so
//! the heavy quadrature never has to invert the arclength map. The
//! arclength-facing API (`rho(s)`, `scalar_curvature(w, s)`, ...) inverts it
//! on demand.

mod conformal;
mod spec;
mod tabulated;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure_domain, Error, Result};
use crate::quad::{geometric_knots, RunningIntegral};

pub use conformal::{conformal_to_warped, flat_profile, schwarzschild_profile, ConformalChart, ConformalProfile};
pub use spec::ProfileSpec;
pub use tabulated::{load_tabulated, read_table, TabulatedChart, MIN_TABLE_SAMPLES};
pub use validate::{
    asymptotic_flatness, validate_profile, AsymptoticFlatness, BoundaryCheck, ProfileDiagnostics, ScalarCurvatureCheck,
    ValidationOptions,
};

/// Value with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Jet { value, d1, d2 }
    }

    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            d1: 0.0,
            d2: 0.0,
        }
    }
}

/// `a - b`, or zero when the difference is below the rounding level of its
/// terms.
pub(crate) fn flush_cancellation(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= 16.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0.0
    } else {
        d
    }
}

/// A radial coordinate on an exterior region.
pub trait RadialChart: fmt::Debug + Send + Sync {
    /// Inner boundary `x0`; the boundary sphere is `{x = x0}`.
    fn start(&self) -> f64;

    /// Areal radius `ρ` and its derivatives with respect to `x`.
    fn radius(&self, x: f64) -> Jet;

    /// `J = ds/dx` and its derivatives with respect to `x`.
    fn stretch(&self, x: f64) -> Jet;

    /// `J - dρ/dx`, i.e. `J (1 - ρ')`. Charts with an exact expression
    /// override this to avoid cancellation where `ρ' → 1`.
    fn slope_lag(&self, x: f64) -> f64 {
        flush_cancellation(self.stretch(x).value, self.radius(x).d1)
    }

    /// Typical length, in chart units, of features near the boundary.
    fn length_scale(&self) -> f64 {
        let x0 = self.start();
        let scale = self.radius(x0).value / self.stretch(x0).value;
        if scale.is_finite() && scale > 0.0 {
            scale
        } else {
            1.0
        }
    }
}

/// A closed-form areal radius in arclength, `x = s`.
pub struct ArclengthChart {
    s0: f64,
    rho: Box<dyn Fn(f64) -> Jet + Send + Sync>,
    label: String,
}

impl ArclengthChart {
    pub fn new(label: impl Into<String>, s0: f64, rho: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Self {
        ArclengthChart {
            s0,
            rho: Box::new(rho),
            label: label.into(),
        }
    }
}

impl fmt::Debug for ArclengthChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArclengthChart")
            .field("label", &self.label)
            .field("s0", &self.s0)
            .finish()
    }
}

impl RadialChart for ArclengthChart {
    fn start(&self) -> f64 {
        self.s0
    }

    fn radius(&self, x: f64) -> Jet {
        (self.rho)(x)
    }

    fn stretch(&self, _x: f64) -> Jet {
        Jet::constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Preset { name: String },
    Converted,
    Tabulated { samples: usize },
    ClosedForm { label: String },
    Transformed { k: f64 },
}

type Density = Box<dyn Fn(f64) -> f64 + Send + Sync>;

struct Inner {
    chart: Arc<dyn RadialChart>,
    s0: f64,
    arclength: RunningIntegral<Density>,
    source: ProfileSource,
    mass: Option<f64>,
}

/// Rotationally symmetric metric `ds² + ρ(s)² dΩ²` on `[s0, ∞)`.
#[derive(Clone)]
pub struct WarpedProfile {
    inner: Arc<Inner>,
    requires_nonneg_scalar: bool,
}

impl fmt::Debug for WarpedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpedProfile")
            .field("s0", &self.inner.s0)
            .field("source", &self.inner.source)
            .field("chart", &self.inner.chart)
            .finish()
    }
}

/// Areal radius and its arclength derivatives at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub x: f64,
    pub rho: f64,
    pub rho_s: f64,
    pub rho_ss: f64,
}

impl RadialSample {
    /// `R = (2(1 - ρ'²) - 4ρρ'') / ρ²`.
    pub fn scalar_curvature(&self) -> f64 {
        (2.0 * (1.0 - self.rho_s * self.rho_s) - 4.0 * self.rho * self.rho_ss) / (self.rho * self.rho)
    }

    /// Mean curvature `2ρ'/ρ` of the coordinate sphere.
    pub fn mean_curvature(&self) -> f64 {
        2.0 * self.rho_s / self.rho
    }

    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.rho * self.rho
    }

    /// `∫ H² da = 16π ρ'²`.
    pub fn willmore(&self) -> f64 {
        16.0 * std::f64::consts::PI * self.rho_s * self.rho_s
    }
}

/// Curvature of the coordinate sphere at arclength `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub s: f64,
    #[serde(rename = "R")]
    pub scalar: f64,
    #[serde(rename = "H")]
    pub mean: f64,
    pub area: f64,
    pub willmore: f64,
}

impl WarpedProfile {
    /// Wraps a chart, placing the boundary at arclength `s0`.
    pub fn from_chart(chart: Arc<dyn RadialChart>, s0: f64, source: ProfileSource) -> Result<Self> {
        let x0 = chart.start();
        let boundary = chart.radius(x0);
        let stretch = chart.stretch(x0);
        if !(boundary.value > 0.0 && boundary.value.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "boundary radius {} is not positive",
                boundary.value
            )));
        }
        if !(stretch.value > 0.0 && stretch.value.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "chart stretch {} is not positive",
                stretch.value
            )));
        }
        let scale = chart.length_scale();
        let knots = geometric_knots(x0, scale, 2f64.sqrt(), 1e10);
        let density_chart = Arc::clone(&chart);
        let density: Density = Box::new(move |x| density_chart.stretch(x).value);
        let arclength = RunningIntegral::new(density, knots, 1e-13)
            .map_err(|e| Error::NotAsymptoticallyFlat(format!("arclength integral failed: {e}")))?;
        Ok(WarpedProfile {
            inner: Arc::new(Inner {
                chart,
                s0,
                arclength,
                source,
                mass: None,
            }),
            requires_nonneg_scalar: false,
        })
    }

    /// Profile from a closed-form `ρ(s)` on `[s0, ∞)`.
    pub fn from_radius_fn(label: &str, s0: f64, rho: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Result<Self> {
        let chart = ArclengthChart::new(label, s0, rho);
        Self::from_chart(
            Arc::new(chart),
            s0,
            ProfileSource::ClosedForm {
                label: label.to_string(),
            },
        )
    }

    pub(crate) fn with_mass(mut self, mass: Option<f64>) -> Self {
        let inner = Arc::get_mut(&mut self.inner).expect("profile not yet shared");
        inner.mass = mass;
        self
    }

    /// Flags the profile as required to have `R >= 0`; validation reports a
    /// failure instead of a note when it does not.
    pub fn requiring_nonneg_scalar(mut self, required: bool) -> Self {
        self.requires_nonneg_scalar = required;
        self
    }

    pub fn requires_nonneg_scalar(&self) -> bool {
        self.requires_nonneg_scalar
    }

    pub fn s0(&self) -> f64 {
        self.inner.s0
    }

    pub fn source(&self) -> &ProfileSource {
        &self.inner.source
    }

    /// Mass parameter of a Schwarzschild preset, if this profile is one.
    pub fn preset_mass(&self) -> Option<f64> {
        self.inner.mass
    }

    pub fn chart(&self) -> &Arc<dyn RadialChart> {
        &self.inner.chart
    }

    pub fn chart_start(&self) -> f64 {
        self.inner.chart.start()
    }

    pub fn length_scale(&self) -> f64 {
        self.inner.chart.length_scale()
    }

    /// Areal radius at the boundary sphere.
    pub fn boundary_radius(&self) -> f64 {
        self.inner.chart.radius(self.chart_start()).value
    }

    /// Arclength of the chart point `x`.
    pub fn arclength_at(&self, x: f64) -> Result<f64> {
        Ok(self.inner.s0 + self.inner.arclength.eval(x)?)
    }

    /// Chart point at arclength `s`.
    pub fn chart_at(&self, s: f64) -> Result<f64> {
        ensure_domain(s >= self.inner.s0 && s.is_finite(), "s", s, "s must lie in [s0, ∞)")?;
        Ok(self.inner.arclength.solve(s - self.inner.s0)?)
    }

    pub fn sample_chart(&self, x: f64) -> RadialSample {
        let rho = self.inner.chart.radius(x);
        let stretch = self.inner.chart.stretch(x);
        let j = stretch.value;
        RadialSample {
            x,
            rho: rho.value,
            rho_s: rho.d1 / j,
            rho_ss: (rho.d2 - rho.d1 * stretch.d1 / j) / (j * j),
        }
    }

    pub fn sample(&self, s: f64) -> Result<RadialSample> {
        let x = self.chart_at(s)?;
        Ok(self.sample_chart(x))
    }

    pub fn rho(&self, s: f64) -> Result<f64> {
        Ok(self.sample(s)?.rho)
    }

    pub fn rho_prime(&self, s: f64) -> Result<f64> {
        Ok(self.sample(s)?.rho_s)
    }

    pub fn rho_double_prime(&self, s: f64) -> Result<f64> {
        Ok(self.sample(s)?.rho_ss)
    }

    pub fn curvature_at_chart(&self, x: f64) -> Result<CurvatureSample> {
        let sample = self.sample_chart(x);
        Ok(CurvatureSample {
            s: self.arclength_at(x)?,
            scalar: sample.scalar_curvature(),
            mean: sample.mean_curvature(),
            area: sample.area(),
            willmore: sample.willmore(),
        })
    }

    pub fn curvature_sample(&self, s: f64) -> Result<CurvatureSample> {
        let x = self.chart_at(s)?;
        let mut sample = self.curvature_at_chart(x)?;
        sample.s = s;
        Ok(sample)
    }

    /// Chart grid used by the validators and report writers: dense near the
    /// boundary, geometric out to `span` length scales.
    pub fn chart_grid(&self, near: usize, far: usize, span: f64) -> Vec<f64> {
        let x0 = self.chart_start();
        let scale = self.length_scale();
        let mut grid: Vec<f64> = (0..near).map(|i| x0 + 2.0 * scale * i as f64 / near as f64).collect();
        let ratio = (span / 2.0).powf(1.0 / far.max(1) as f64);
        grid.extend((0..=far).map(|i| x0 + 2.0 * scale * ratio.powi(i as i32)));
        grid
    }
}

/// Scalar curvature of the warped metric at arclength `s`.
pub fn scalar_curvature(w: &WarpedProfile, s: f64) -> Result<f64> {
    Ok(w.sample(s)?.scalar_curvature())
}

/// Mean curvature `2ρ'/ρ` of the sphere at arclength `s`.
pub fn mean_curvature(w: &WarpedProfile, s: f64) -> Result<f64> {
    Ok(w.sample(s)?.mean_curvature())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn shifted_flat() -> WarpedProfile {
        // ρ = s - 0.5 on [1, ∞).
        WarpedProfile::from_radius_fn("shifted", 1.0, |s| Jet::new(s - 0.5, 1.0, 0.0)).unwrap()
    }

    #[test]
    fn flat_profile_is_scalar_flat() {
        let w = shifted_flat();
        for s in [1.0, 2.0, 40.0, 1e5] {
            assert_eq!(scalar_curvature(&w, s).unwrap(), 0.0);
        }
        assert!((mean_curvature(&w, 1.0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_scalar_curvature_matches_symbolic_derivatives() {
        // ρ = s (1 + 0.1 e^{-s}); ρ' = 1 + 0.1 e^{-s}(1 - s); ρ'' = 0.1 e^{-s}(s - 2).
        let w = WarpedProfile::from_radius_fn("bump", 1.0, |s| {
            let e = 0.1 * (-s).exp();
            Jet::new(s * (1.0 + e), 1.0 + e * (1.0 - s), e * (s - 2.0))
        })
        .unwrap();
        // Independent route: differentiate the closed form numerically.
        let rho = |s: f64| s * (1.0 + 0.1 * (-s).exp());
        for s in [1.0, 1.5, 3.0, 7.0] {
            let r = rho(s);
            let r1 = crate::quad::derivative(rho, s, 1);
            let r2 = crate::quad::derivative(rho, s, 2);
            let expected = (2.0 * (1.0 - r1 * r1) - 4.0 * r * r2) / (r * r);
            let got = scalar_curvature(&w, s).unwrap();
            assert!((got - expected).abs() < 1e-8, "s = {s}: {got} vs {expected}");
        }
        // At s = 1: ρ' = 1, ρ'' = -0.1/e, so R = 0.4 e^{-1} / (1 + 0.1/e).
        let exact = 0.4 * (-1f64).exp() / (1.0 + 0.1 * (-1f64).exp());
        assert!((scalar_curvature(&w, 1.0).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn willmore_and_area_identity() {
        let w = WarpedProfile::from_radius_fn("bump", 1.0, |s| {
            let e = 0.1 * (-s).exp();
            Jet::new(s * (1.0 + e), 1.0 + e * (1.0 - s), e * (s - 2.0))
        })
        .unwrap();
        for s in [1.0, 2.0, 9.0] {
            let c = w.curvature_sample(s).unwrap();
            let rho_s = w.rho_prime(s).unwrap();
            assert!((c.area * c.mean * c.mean / (16.0 * PI) - rho_s * rho_s).abs() < 1e-14);
            assert!((c.willmore - 16.0 * PI * rho_s * rho_s).abs() < 1e-13);
        }
    }

    #[test]
    fn arclength_below_boundary_is_rejected() {
        let w = shifted_flat();
        assert!(matches!(w.rho(0.5), Err(Error::Domain { .. })));
    }
}
