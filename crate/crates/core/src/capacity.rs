//! Capacity potential of a warped exterior and its level-set quantities.
//!
//! In rotational symmetry the harmonic equation reduces to `(ρ² u')' = 0`,
//! so `u(s) = Q(s)/Q(s0)` with `Q(s) = ∫_s^∞ ρ⁻² dσ`. Integrals are taken in
//! the profile's chart `x`, where `ds = J dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_domain, Error, Result};
use crate::profile::{asymptotic_flatness, Jet, ValidationOptions, WarpedProfile};
use crate::quad::{derivative_with, geometric_knots, Stencil, TailIntegral};

type Density = Box<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Relative tolerance of the tail integral `Q`.
    pub rtol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rtol: 1e-10 }
    }
}

struct Inner {
    profile: WarpedProfile,
    tail: TailIntegral<Density>,
    /// `D(x) = Q(x) - 1/ρ(x) = ∫_x^∞ (J - ρ_x)/ρ²`.
    lag: TailIntegral<Density>,
    q0: f64,
    c: f64,
}

/// Capacity potential `u` with `u = 1` on the boundary and `u → 0` at infinity.
#[derive(Clone)]
pub struct HarmonicSolution {
    inner: Arc<Inner>,
}

impl fmt::Debug for HarmonicSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HarmonicSolution")
            .field("c", &self.inner.c)
            .field("profile", &self.inner.profile)
            .finish()
    }
}

pub fn solve_harmonic(w: &WarpedProfile) -> Result<HarmonicSolution> {
    solve_harmonic_with(w, &SolveOptions::default())
}

pub fn solve_harmonic_with(w: &WarpedProfile, opts: &SolveOptions) -> Result<HarmonicSolution> {
    ensure_domain(opts.rtol > 0.0, "rtol", opts.rtol, "tolerance must be positive")?;
    let af = asymptotic_flatness(w, &ValidationOptions::default())?;
    if !af.passed {
        return Err(Error::NotAsymptoticallyFlat(af.describe()));
    }
    let chart = Arc::clone(w.chart());
    let density: Density = Box::new(move |x| {
        let rho = chart.radius(x).value;
        chart.stretch(x).value / (rho * rho)
    });
    let x0 = w.chart_start();
    let scale = w.length_scale();
    let knots = geometric_knots(x0, scale, 2f64.sqrt(), 1e10);
    let tail = TailIntegral::new(density, knots.clone(), scale, opts.rtol)
        .map_err(|e| Error::DivergentTail(format!("capacity integral: {e}")))?;
    let chart = Arc::clone(w.chart());
    let lag_density: Density = Box::new(move |x| {
        let rho = chart.radius(x).value;
        chart.slope_lag(x) / (rho * rho)
    });
    // The lag integrand is only known to about ε J/ρ², so each panel of D
    // is resolved to that level relative to the matching panel of Q.
    let q = tail.tails();
    let mut atols: Vec<f64> = q.windows(2).map(|p| 64.0 * f64::EPSILON * (p[0] - p[1])).collect();
    atols.push(64.0 * f64::EPSILON * q[q.len() - 1]);
    let lag = TailIntegral::with_panel_atols(lag_density, knots, scale, opts.rtol, atols)
        .map_err(|e| Error::DivergentTail(format!("capacity integral: {e}")))?;
    let q0 = tail.total();
    let c = 1.0 / q0;
    assert!(c > 0.0 && c.is_finite(), "flux constant must be positive, got {c}");
    Ok(HarmonicSolution {
        inner: Arc::new(Inner {
            profile: w.clone(),
            tail,
            lag,
            q0,
            c,
        }),
    })
}

impl HarmonicSolution {
    pub fn profile(&self) -> &WarpedProfile {
        &self.inner.profile
    }

    /// Flux constant `c = 1/Q(s0) = -u' ρ²`.
    pub fn c(&self) -> f64 {
        self.inner.c
    }

    /// `Q(s0)`.
    pub fn q0(&self) -> f64 {
        self.inner.q0
    }

    /// Boundary flux `C0 = ∫_Σ |∇w| da = 4πc`.
    pub fn boundary_flux(&self) -> f64 {
        4.0 * PI * self.inner.c
    }

    /// `u` at chart point `x`.
    pub fn potential_at_chart(&self, x: f64) -> Result<f64> {
        if x == self.profile().chart_start() {
            return Ok(1.0);
        }
        Ok(self.inner.tail.eval(x)? / self.inner.q0)
    }

    /// `u`, `du/dx`, `d²u/dx²` at chart point `x`.
    pub fn potential_jet_at_chart(&self, x: f64) -> Result<Jet> {
        let chart = self.profile().chart();
        let rho = chart.radius(x);
        let j = chart.stretch(x);
        let c = self.inner.c;
        let r2 = rho.value * rho.value;
        Ok(Jet::new(
            self.potential_at_chart(x)?,
            -c * j.value / r2,
            -c * (j.d1 / r2 - 2.0 * j.value * rho.d1 / (r2 * rho.value)),
        ))
    }

    pub fn potential(&self, s: f64) -> Result<f64> {
        self.potential_at_chart(self.profile().chart_at(s)?)
    }

    /// `t = -log u(s)`.
    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        Ok(-self.potential(s)?.ln())
    }

    /// Chart point of the level set `{u = e^{-t}}`.
    pub fn chart_of_t(&self, t: f64) -> Result<f64> {
        ensure_domain(
            t >= 0.0 && t.is_finite(),
            "t",
            t,
            "level must be finite and non-negative",
        )?;
        if t == 0.0 {
            return Ok(self.profile().chart_start());
        }
        Ok(self.inner.tail.solve(self.inner.q0 * (-t).exp())?)
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        self.profile().arclength_at(self.chart_of_t(t)?)
    }

    /// Level-set quantities of the sphere through chart point `x`.
    pub fn level_set_at_chart(&self, x: f64) -> Result<LevelSetData> {
        let u = self.potential_at_chart(x)?;
        let t = if u >= 1.0 { 0.0 } else { -u.ln() };
        self.assemble(x, t, u)
    }

    /// `1 - ρ|∇w|` on the sphere through `x`, evaluated as `D/Q` so that
    /// `4π - W = 4π δ (2 - δ)` carries no cancellation as `W → 4π`.
    pub fn radial_gap(&self, x: f64) -> Result<f64> {
        Ok(self.inner.lag.eval(x)? / self.inner.tail.eval(x)?)
    }

    fn assemble(&self, x: f64, t: f64, u: f64) -> Result<LevelSetData> {
        let w = self.profile();
        let sample = w.sample_chart(x);
        let area = sample.area();
        let grad_w = self.inner.c / (sample.rho * sample.rho * u);
        let gap = self.radial_gap(x)?;
        let deficit = 4.0 * PI * gap * (2.0 - gap);
        let big_w = 4.0 * PI - deficit;
        Ok(LevelSetData {
            t,
            s: w.arclength_at(x)?,
            x,
            area,
            grad_w,
            w: big_w,
            b: t.exp() * deficit,
            c: grad_w * area,
            h: sample.mean_curvature(),
            willmore: sample.willmore(),
        })
    }

    /// Chart-coordinate derivative of `g`, central away from the boundary
    /// and one-sided next to it.
    fn chart_derivative(&self, g: impl Fn(f64) -> f64, x: f64) -> f64 {
        let x0 = self.profile().chart_start();
        let scale = self.profile().length_scale();
        let h = 1e-2 * (x - x0).max(scale);
        if x - x0 >= h {
            derivative_with(g, x, 1, h, Stencil::Central)
        } else {
            derivative_with(g, x, 1, 1e-2 * scale, Stencil::Forward)
        }
    }

    fn quiet_potential(&self, x: f64) -> f64 {
        self.potential_at_chart(x).unwrap_or(f64::NAN)
    }

    /// `(u' ρ² + c)/c` at chart point `x`, with `u'` obtained by differencing
    /// the quadrature.
    pub fn harmonicity_residual(&self, x: f64) -> f64 {
        let du_dx = self.chart_derivative(|y| self.quiet_potential(y), x);
        let sample = self.profile().sample_chart(x);
        let j = self.profile().chart().stretch(x).value;
        (du_dx / j * sample.rho * sample.rho + self.inner.c) / self.inner.c
    }

    /// Flux `C(t) e^{-t} / C0 - 1` on the sphere through `x`, with `|∇u|`
    /// obtained by differencing the quadrature.
    pub fn flux_defect(&self, x: f64) -> Result<f64> {
        let u = self.potential_at_chart(x)?;
        let du_dx = self.chart_derivative(|y| self.quiet_potential(y), x);
        let sample = self.profile().sample_chart(x);
        let j = self.profile().chart().stretch(x).value;
        let flux = (du_dx / j).abs() / u * sample.area();
        Ok(flux * u / self.boundary_flux() - 1.0)
    }

    /// Mean curvature of the level set through `x` in the form
    /// `|∇w| - ⟨∇|∇w|, ∇w⟩ / |∇w|²`, i.e. `w' - w''/w'`.
    pub fn level_set_mean_curvature(&self, x: f64) -> f64 {
        let c = self.inner.c;
        let chart = self.profile().chart();
        let grad = |y: f64| {
            let rho = chart.radius(y).value;
            c / (rho * rho * self.quiet_potential(y))
        };
        let w_s = grad(x);
        let w_ss = self.chart_derivative(grad, x) / chart.stretch(x).value;
        w_s - w_ss / w_s
    }
}

pub fn locate_level_set(h: &HarmonicSolution, t: f64) -> Result<f64> {
    h.s_of_t(t)
}

pub fn level_set_report(h: &HarmonicSolution, t: f64) -> Result<LevelSetData> {
    let x = h.chart_of_t(t)?;
    let u = h.potential_at_chart(x)?;
    h.assemble(x, t, u)
}

/// Quantities on the level set `Σ_t = {w = t}`, `w = -log u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetData {
    pub t: f64,
    pub s: f64,
    /// Chart point of the level set.
    #[serde(skip)]
    pub x: f64,
    pub area: f64,
    pub grad_w: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub willmore: f64,
}

/// Level parameters at which a solution is sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid {
    points: Vec<f64>,
}

impl TGrid {
    /// `n` evenly spaced levels on `[0, t_max]`.
    pub fn uniform(t_max: f64, n: usize) -> Result<Self> {
        ensure_domain(
            t_max > 0.0 && t_max.is_finite(),
            "t_max",
            t_max,
            "t_max must be positive",
        )?;
        ensure_domain(n >= 2, "t_samples", n as f64, "at least two levels are needed")?;
        let step = t_max / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        points[n - 1] = t_max;
        Ok(TGrid { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain {
                name: "t_samples",
                value: 0.0,
                requirement: "grid must not be empty",
            });
        }
        for &t in &points {
            ensure_domain(
                t >= 0.0 && t.is_finite(),
                "t",
                t,
                "levels must be finite and non-negative",
            )?;
        }
        Ok(TGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid::uniform(10.0, 512).expect("default grid is valid")
    }
}

/// Level-set data at every grid level, evaluated in parallel.
pub fn level_set_grid(h: &HarmonicSolution, grid: &TGrid) -> Result<Vec<LevelSetData>> {
    grid.points().par_iter().map(|&t| level_set_report(h, t)).collect()
}
