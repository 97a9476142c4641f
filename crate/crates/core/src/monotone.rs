//! Monotonicity bounds for `W(t)`, the conformal `k`-transform that realizes
//! their equality case, and rigidity detection.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::capacity::{level_set_grid, solve_harmonic, HarmonicSolution, LevelSetData, TGrid};
use crate::error::{ensure_domain, Result};
use crate::profile::{
    flush_cancellation, validate_profile, Jet, ProfileDiagnostics, ProfileSource, RadialChart, ValidationOptions,
    WarpedProfile,
};
use crate::quad::{derivative_with, Stencil};

/// `k = √(4π/W0)`, the parameter minimizing the transformed bound.
pub fn optimal_k(w0: f64) -> Result<f64> {
    ensure_domain(w0 > 0.0 && w0.is_finite(), "W0", w0, "W(0) must be positive")?;
    Ok((4.0 * PI / w0).sqrt())
}

/// `[e^{-t} √W0 + (1 - e^{-t}) √4π]²`.
pub fn monotonicity_bound(w0: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let rest = 1.0 - e;
    e * e * w0 + rest * (2.0 * e * (4.0 * PI * w0).sqrt() + rest * 4.0 * PI)
}

/// `π (2 - e^{-t})²`, the bound for a minimal boundary.
pub fn minimal_boundary_bound(t: f64) -> f64 {
    let a = 2.0 - (-t).exp();
    PI * a * a
}

/// `W(t)` on the Schwarzschild exterior of mass `m` outside `|x| = r`.
pub fn schwarzschild_energy(m: f64, r: f64, t: f64) -> f64 {
    let s = m + 2.0 * r;
    let a = s - m * (-t).exp();
    4.0 * PI * a * a / (s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `|slack| <= rigidity_tol` reads as equality.
    pub rigidity_tol: f64,
    /// `slack < -assert_tol` reads as a violation.
    pub assert_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rigidity_tol: 1e-6,
            assert_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Equality,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `W(t) <= [e^{-t}√W(0) + (1 - e^{-t})√4π]²`.
    Monotonicity,
    /// `W(t) <= π(2 - e^{-t})²`, minimal boundaries only.
    MinimalBoundary,
    /// `√(W(0)/π) <= √(∫H²/16π) + 1`.
    InitialEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub kind: BoundKind,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl BoundCheck {
    pub fn new(kind: BoundKind, t: f64, lhs: f64, rhs: f64, tol: &Tolerances) -> Self {
        let slack = rhs - lhs;
        let verdict = if slack.abs() <= tol.rigidity_tol {
            Verdict::Equality
        } else if slack < -tol.assert_tol || slack.is_nan() {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        BoundCheck {
            kind,
            t,
            lhs,
            rhs,
            slack,
            verdict,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

pub fn initial_estimate(d0: &LevelSetData, tol: &Tolerances) -> BoundCheck {
    let lhs = (d0.w / PI).sqrt();
    let rhs = (d0.willmore / (16.0 * PI)).sqrt() + 1.0;
    BoundCheck::new(BoundKind::InitialEstimate, d0.t, lhs, rhs, tol)
}

/// Chart of `ḡ = k⁻⁴ v⁴ g`, `v = k + (1 - k) u`, on the original chart.
struct TransformChart {
    base: HarmonicSolution,
    k: f64,
}

impl fmt::Debug for TransformChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformChart").field("k", &self.k).finish()
    }
}

impl TransformChart {
    /// `v²/k²` and its chart derivatives.
    fn factor(&self, x: f64) -> Jet {
        let u = self
            .base
            .potential_jet_at_chart(x)
            .unwrap_or(Jet::new(f64::NAN, f64::NAN, f64::NAN));
        let k = self.k;
        let v = k + (1.0 - k) * u.value;
        let v1 = (1.0 - k) * u.d1;
        let v2 = (1.0 - k) * u.d2;
        let k2 = k * k;
        Jet::new(v * v / k2, 2.0 * v * v1 / k2, 2.0 * (v1 * v1 + v * v2) / k2)
    }

    fn scaled(f: Jet, g: Jet) -> Jet {
        Jet::new(
            f.value * g.value,
            f.d1 * g.value + f.value * g.d1,
            f.d2 * g.value + 2.0 * f.d1 * g.d1 + f.value * g.d2,
        )
    }
}

impl RadialChart for TransformChart {
    fn start(&self) -> f64 {
        self.base.profile().chart_start()
    }

    fn radius(&self, x: f64) -> Jet {
        Self::scaled(self.factor(x), self.base.profile().chart().radius(x))
    }

    fn stretch(&self, x: f64) -> Jet {
        Self::scaled(self.factor(x), self.base.profile().chart().stretch(x))
    }

    fn slope_lag(&self, x: f64) -> f64 {
        let f = self.factor(x);
        let chart = self.base.profile().chart();
        // Cancels identically when ḡ is flat.
        flush_cancellation(f.value * chart.slope_lag(x), f.d1 * chart.radius(x).value)
    }

    fn length_scale(&self) -> f64 {
        self.base.profile().length_scale()
    }
}

/// The transformed manifold `(M, ḡ)` together with its own capacity potential.
#[derive(Debug, Clone)]
pub struct KTransform {
    k: f64,
    base: HarmonicSolution,
    transformed: WarpedProfile,
    transformed_solution: HarmonicSolution,
}

/// Builds `ḡ = k⁻⁴ v⁴ g` and solves its capacity problem independently.
///
/// The transformed boundary sits at arclength `s0 + ρ0 (k⁻² - 1)`, which
/// keeps `k = 1` the identity and maps a flat result to `s = |x|`.
pub fn conformal_k_transform(h: &HarmonicSolution, k: f64) -> Result<KTransform> {
    ensure_domain(k > 0.0 && k.is_finite(), "k", k, "k must be positive")?;
    let base = h.profile();
    let s0 = base.s0() + base.boundary_radius() * (1.0 / (k * k) - 1.0);
    let chart = TransformChart { base: h.clone(), k };
    let transformed = WarpedProfile::from_chart(Arc::new(chart), s0, ProfileSource::Transformed { k })?
        .requiring_nonneg_scalar(base.requires_nonneg_scalar());
    let transformed_solution = solve_harmonic(&transformed)?;
    Ok(KTransform {
        k,
        base: h.clone(),
        transformed,
        transformed_solution,
    })
}

impl KTransform {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn base(&self) -> &HarmonicSolution {
        &self.base
    }

    pub fn transformed(&self) -> &WarpedProfile {
        &self.transformed
    }

    pub fn transformed_solution(&self) -> &HarmonicSolution {
        &self.transformed_solution
    }

    /// `v = u + k(1 - u)` at chart point `x`.
    pub fn v_at_chart(&self, x: f64) -> Result<f64> {
        Ok(self.k + (1.0 - self.k) * self.base.potential_at_chart(x)?)
    }

    /// `ū = u/v` at chart point `x`.
    pub fn u_bar_at_chart(&self, x: f64) -> Result<f64> {
        Ok(self.base.potential_at_chart(x)? / self.v_at_chart(x)?)
    }

    /// `u/v - ū_solved`, where `ū_solved` is the capacity potential of `ḡ`.
    pub fn potential_defect(&self, x: f64) -> Result<f64> {
        Ok(self.u_bar_at_chart(x)? - self.transformed_solution.potential_at_chart(x)?)
    }

    /// Defect in `dw̄ = (k/v) dw`, both sides measured in `g`, with `w̄` from
    /// the independent solve. The `ḡ`-norm carries a further `(k/v)²`.
    pub fn gradient_ratio_defect(&self, x: f64) -> Result<f64> {
        let base = self.base.level_set_at_chart(x)?;
        let bar = self.transformed_solution.level_set_at_chart(x)?;
        let ratio = self.v_at_chart(x)? / self.k;
        Ok(bar.grad_w * ratio * ratio * ratio / base.grad_w - 1.0)
    }

    /// `dū/ds̄ ρ̄²` for `ū = u/v`, by differencing; harmonicity of `ū` makes
    /// this the constant `-c/k`.
    pub fn u_bar_flux(&self, x: f64) -> f64 {
        let x0 = self.transformed.chart_start();
        let scale = self.transformed.length_scale();
        let g = |y: f64| self.u_bar_at_chart(y).unwrap_or(f64::NAN);
        let h = 1e-2 * (x - x0).max(scale);
        let du = if x - x0 >= h {
            derivative_with(g, x, 1, h, Stencil::Central)
        } else {
            derivative_with(g, x, 1, 1e-2 * scale, Stencil::Forward)
        };
        let sample = self.transformed.sample_chart(x);
        let j = self.transformed.chart().stretch(x).value;
        du / j * sample.rho * sample.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rigidity {
    SchwarzschildRigid { m: f64, r: f64 },
    Strict,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub classification: Rigidity,
    /// Smallest `bound - W(t)` over levels `t > 0`.
    pub min_slack: f64,
    /// Smallest `e^t (bound - W(t))` over levels `t > 0`.
    pub min_scaled_slack: f64,
    /// Largest `|e^t (bound - W(t))|` over levels `t > 0`.
    pub max_scaled_slack: f64,
    /// Schwarzschild parameters matching `W(0)` and `C0`.
    pub fitted_m: f64,
    pub fitted_r: f64,
    /// Largest `e^t |W_fit(t) - W(t)|` over the grid.
    pub fit_defect: f64,
}

/// Schwarzschild `(m, r)` with the given `W(0)` and boundary flux `C0`.
///
/// `C0 = 2π(m + 2r)` and `W(0) = 16πr²/(m + 2r)²` invert in closed form.
pub fn fit_schwarzschild(w0: f64, c0: f64) -> (f64, f64) {
    let total = c0 / (2.0 * PI);
    let r = (w0 / (16.0 * PI)).sqrt() * total;
    (total - 2.0 * r, r)
}

/// Classifies the level data of `h` on `grid`.
///
/// Slack is measured in `B`-units, `e^t (bound - W)`, so that the decision
/// band does not shrink as `W(t) → 4π`. The boundary level is excluded
/// because the bound is attained there by construction.
pub fn rigidity_scan(h: &HarmonicSolution, grid: &TGrid, tol: &Tolerances) -> Result<RigidityReport> {
    let data = level_set_grid(h, grid)?;
    let w0 = h.level_set_at_chart(h.profile().chart_start())?.w;
    Ok(classify(&data, w0, h.boundary_flux(), tol))
}

fn classify(data: &[LevelSetData], w0: f64, c0: f64, tol: &Tolerances) -> RigidityReport {
    let (m, r) = fit_schwarzschild(w0, c0);
    let mut min_slack = f64::INFINITY;
    let mut min_scaled = f64::INFINITY;
    let mut max_scaled = 0.0f64;
    let mut fit_defect = 0.0f64;
    for d in data {
        let growth = d.t.exp();
        fit_defect = fit_defect.max(growth * (schwarzschild_energy(m, r, d.t) - d.w).abs());
        if d.t > 0.0 {
            let slack = monotonicity_bound(w0, d.t) - d.w;
            min_slack = min_slack.min(slack);
            min_scaled = min_scaled.min(growth * slack);
            max_scaled = max_scaled.max((growth * slack).abs());
        }
    }
    let classification = if max_scaled <= tol.rigidity_tol && fit_defect <= tol.rigidity_tol {
        Rigidity::SchwarzschildRigid { m, r }
    } else if min_scaled > tol.rigidity_tol {
        Rigidity::Strict
    } else {
        Rigidity::Indeterminate
    };
    RigidityReport {
        classification,
        min_slack,
        min_scaled_slack: min_scaled,
        max_scaled_slack: max_scaled,
        fitted_m: m,
        fitted_r: r,
        fit_defect,
    }
}

/// Output of [`verify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub profile: ProfileDiagnostics,
    pub bounds: Vec<BoundCheck>,
    pub rigidity: RigidityReport,
    #[serde(rename = "B_monotone")]
    pub b_monotone: bool,
    /// Smallest `B(t_{i+1}) - B(t_i)` on the grid.
    pub min_b_increment: f64,
    /// All verdicts hold, `B` is monotone, and `R >= 0` holds where required.
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.bounds.iter().filter(|b| !b.holds())
    }
}

/// Runs every bound on the grid: the monotonicity bound at each level, the
/// minimal-boundary bound when the boundary is minimal, and the initial
/// estimate at `t = 0`.
pub fn verify(h: &HarmonicSolution, grid: &TGrid, tol: &Tolerances) -> Result<VerifyReport> {
    let profile = validate_profile(h.profile(), &ValidationOptions::default())?;
    let data = level_set_grid(h, grid)?;
    let d0 = h.level_set_at_chart(h.profile().chart_start())?;

    let mut bounds = vec![initial_estimate(&d0, tol)];
    bounds.extend(
        data.iter()
            .map(|d| BoundCheck::new(BoundKind::Monotonicity, d.t, d.w, monotonicity_bound(d0.w, d.t), tol)),
    );
    if profile.boundary.minimal {
        bounds.extend(
            data.iter()
                .map(|d| BoundCheck::new(BoundKind::MinimalBoundary, d.t, d.w, minimal_boundary_bound(d.t), tol)),
        );
    }

    let min_b_increment = data.windows(2).map(|p| p[1].b - p[0].b).fold(f64::INFINITY, f64::min);
    let b_monotone = !(min_b_increment < -tol.assert_tol);
    let rigidity = classify(&data, d0.w, h.boundary_flux(), tol);
    let scalar_ok = !profile.nonneg_scalar.required || profile.nonneg_scalar.passed;
    let passed = bounds.iter().all(BoundCheck::holds) && b_monotone && scalar_ok;
    Ok(VerifyReport {
        profile,
        bounds,
        rigidity,
        b_monotone,
        min_b_increment,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::level_set_report;
    use crate::profile::{conformal_to_warped, flat_profile, schwarzschild_profile};

    fn schwarzschild(m: f64, r: f64) -> HarmonicSolution {
        solve_harmonic(&conformal_to_warped(&schwarzschild_profile(m, r).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn optimal_k_values() {
        assert!((optimal_k(PI).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(optimal_k(4.0 * PI).unwrap(), 1.0);
        assert!((optimal_k(16.0 * PI).unwrap() - 0.5).abs() < 1e-15);
        assert!(optimal_k(0.0).is_err());
        assert!(optimal_k(-1.0).is_err());
    }

    #[test]
    fn bound_values() {
        assert_eq!(monotonicity_bound(2.5, 0.0), 2.5);
        for t in [0.0f64, 0.3, 1.0, 5.0, 30.0] {
            let e = (-t).exp();
            assert!((monotonicity_bound(PI, t) - PI * (2.0 - e).powi(2)).abs() < 1e-13);
            assert!((monotonicity_bound(4.0 * PI, t) - 4.0 * PI).abs() < 1e-13);
        }
        assert_eq!(minimal_boundary_bound(0.0), PI);
        assert!((minimal_boundary_bound(2f64.ln()) - 9.0 * PI / 4.0).abs() < 1e-15);
        assert!((minimal_boundary_bound(50.0) - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn equality_closure_over_the_mass_family() {
        for m in [-0.5, 0.0, 0.5, 2.0, 5.0] {
            let r = (0.6 * f64::abs(m)).max(1.0);
            let w0 = schwarzschild_energy(m, r, 0.0);
            assert!((w0 - 16.0 * PI * r * r / (m + 2.0 * r).powi(2)).abs() < 1e-14);
            for i in 0..=40 {
                let t = i as f64 * 0.25;
                let a = monotonicity_bound(w0, t);
                let b = schwarzschild_energy(m, r, t);
                assert!((a - b).abs() <= 1e-14 * b, "m = {m}, t = {t}");
            }
        }
    }

    #[test]
    fn fit_inverts_closed_forms() {
        for (m, r) in [(5.0, 3.0), (-0.5, 1.0), (0.0, 2.0)] {
            let c0 = 2.0 * PI * (m + 2.0 * r);
            let (fm, fr) = fit_schwarzschild(schwarzschild_energy(m, r, 0.0), c0);
            assert!((fm - m).abs() < 1e-13 && (fr - r).abs() < 1e-13);
        }
    }

    #[test]
    fn verdict_bands() {
        let tol = Tolerances::default();
        assert_eq!(
            BoundCheck::new(BoundKind::Monotonicity, 1.0, 1.0, 1.0 + 5e-7, &tol).verdict,
            Verdict::Equality
        );
        assert_eq!(
            BoundCheck::new(BoundKind::Monotonicity, 1.0, 1.0, 1.1, &tol).verdict,
            Verdict::Pass
        );
        assert_eq!(
            BoundCheck::new(BoundKind::Monotonicity, 1.0, 1.0, 0.9, &tol).verdict,
            Verdict::Fail
        );
    }

    #[test]
    fn initial_estimate_equality_cases() {
        let tol = Tolerances::default();
        let horizon = initial_estimate(&level_set_report(&schwarzschild(2.0, 1.0), 0.0).unwrap(), &tol);
        assert!((horizon.lhs - 1.0).abs() < 1e-12 && (horizon.rhs - 1.0).abs() < 1e-12);
        assert_eq!(horizon.verdict, Verdict::Equality);
        let flat = solve_harmonic(&conformal_to_warped(&flat_profile(1.0).unwrap()).unwrap()).unwrap();
        let flat = initial_estimate(&level_set_report(&flat, 0.0).unwrap(), &tol);
        assert!((flat.lhs - 2.0).abs() < 1e-12 && (flat.rhs - 2.0).abs() < 1e-12);
        assert_eq!(flat.verdict, Verdict::Equality);
    }

    #[test]
    fn horizon_transform_is_flat() {
        let h = schwarzschild(2.0, 1.0);
        let kt = conformal_k_transform(&h, 2.0).unwrap();
        assert!((kt.transformed().boundary_radius() - 1.0).abs() < 1e-14);
        assert!((kt.transformed().s0() - 1.0).abs() < 1e-14);
        assert!((kt.transformed_solution().c() - 1.0).abs() < 1e-10);
        for d in level_set_grid(kt.transformed_solution(), &TGrid::uniform(10.0, 24).unwrap()).unwrap() {
            assert!((d.w - 4.0 * PI).abs() < 1e-8, "t = {}: W = {}", d.t, d.w);
            assert!(d.b.abs() < 1e-8, "t = {}: B = {}", d.t, d.b);
        }
        for x in [1.0, 1.5, 3.0, 40.0, 1e4] {
            // ū = 1/r̃ on the flattened exterior.
            assert!((kt.u_bar_at_chart(x).unwrap() - 1.0 / x).abs() < 1e-12);
            assert!(kt.potential_defect(x).unwrap().abs() < 1e-10);
            assert!(kt.gradient_ratio_defect(x).unwrap().abs() < 1e-8);
            assert!((kt.u_bar_flux(x) + 1.0).abs() < 1e-8, "x = {x}: {}", kt.u_bar_flux(x));
        }
    }

    #[test]
    fn unit_k_is_identity() {
        let h = schwarzschild(0.5, 1.0);
        let kt = conformal_k_transform(&h, 1.0).unwrap();
        assert_eq!(kt.transformed().s0(), h.profile().s0());
        for x in [1.0, 2.0, 17.0, 1e6] {
            assert_eq!(kt.transformed().sample_chart(x), h.profile().sample_chart(x));
            assert_eq!(kt.u_bar_at_chart(x).unwrap(), h.potential_at_chart(x).unwrap());
        }
        assert_eq!(kt.transformed_solution().c(), h.c());
    }

    #[test]
    fn flat_transform_with_k_three_is_negative_mass_schwarzschild() {
        // v = 3 - 2/r̃ turns the flat exterior of the unit ball into
        // (1 - 2/(3r̃))⁴ g_euc, i.e. mass -4/3 outside r̃ = 1.
        let h = solve_harmonic(&conformal_to_warped(&flat_profile(1.0).unwrap()).unwrap()).unwrap();
        let kt = conformal_k_transform(&h, 3.0).unwrap();
        let m = -4.0 / 3.0;
        for t in [0.0, 0.5, 2.0, 6.0] {
            let d = level_set_report(kt.transformed_solution(), t).unwrap();
            assert!((d.w / schwarzschild_energy(m, 1.0, t) - 1.0).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn transform_with_k_three_flattens_mass_four() {
        let h = schwarzschild(4.0, 1.0);
        let w0 = h.level_set_at_chart(1.0).unwrap().w;
        let k = optimal_k(w0).unwrap();
        assert!((k - 3.0).abs() < 1e-10);
        let kt = conformal_k_transform(&h, k).unwrap();
        assert!((kt.transformed().boundary_radius() - 1.0).abs() < 1e-10);
        for t in [0.5, 3.0] {
            let d = level_set_report(kt.transformed_solution(), t).unwrap();
            assert!((d.w - 4.0 * PI).abs() < 1e-8);
        }
    }

    #[test]
    fn rigidity_of_presets() {
        let grid = TGrid::uniform(10.0, 64).unwrap();
        let tol = Tolerances::default();
        let report = rigidity_scan(&schwarzschild(5.0, 3.0), &grid, &tol).unwrap();
        match report.classification {
            Rigidity::SchwarzschildRigid { m, r } => {
                assert!((m / 5.0 - 1.0).abs() < 1e-5 && (r / 3.0 - 1.0).abs() < 1e-5, "{m} {r}");
            }
            other => panic!("{other:?}"),
        }
        let flat = solve_harmonic(&conformal_to_warped(&flat_profile(1.0).unwrap()).unwrap()).unwrap();
        match rigidity_scan(&flat, &grid, &tol).unwrap().classification {
            Rigidity::SchwarzschildRigid { m, r } => assert!(m.abs() < 1e-5 && (r - 1.0).abs() < 1e-5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_horizon() {
        let report = verify(
            &schwarzschild(2.0, 1.0),
            &TGrid::uniform(10.0, 64).unwrap(),
            &Tolerances::default(),
        )
        .unwrap();
        assert!(report.passed);
        assert!(report.b_monotone);
        assert!(report.bounds.iter().any(|b| b.kind == BoundKind::MinimalBoundary));
        assert!(matches!(
            report.rigidity.classification,
            Rigidity::SchwarzschildRigid { .. }
        ));
    }
}
