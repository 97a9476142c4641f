use serde::Serialize;

use super::WarpedProfile;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationOptions {
    /// Bound on `C/σ` and `|ρ' - 1|` at the far end of the admission grid.
    pub af_tol: f64,
    /// Far end of the admission grid, in boundary length scales.
    pub af_span: f64,
    /// `R ρ² >= -scalar_tol` counts as non-negative scalar curvature.
    pub scalar_tol: f64,
    /// `|H(s0) ρ(s0)| <= minimal_tol` counts as a minimal boundary.
    pub minimal_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            af_tol: 1e-3,
            af_span: 1e8,
            scalar_tol: 1e-8,
            minimal_tol: 1e-8,
        }
    }
}

/// Grid test of `|ρ/σ - 1| <= C/σ` where `σ = s - s0 + ρ(s0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFlatness {
    pub passed: bool,
    /// `C`, estimated as the largest `|ρ - σ|` over the last decade of the grid.
    pub decay_constant: f64,
    /// `C / σ` at the far end of the grid.
    pub far_ratio: f64,
    /// `ρ'` at the far end of the grid.
    pub far_slope: f64,
    /// Grid points where `|ρ - σ|` exceeds `2C + ρ(s0)`.
    pub grid_violations: usize,
    /// Whether `ρ` and `ρ'` stay positive over the last decade.
    pub eventually_increasing: bool,
}

impl AsymptoticFlatness {
    pub fn describe(&self) -> String {
        format!(
            "C = {:.3e}, C/σ = {:.3e}, ρ' = {:.6}, grid violations = {}, eventually increasing = {}",
            self.decay_constant, self.far_ratio, self.far_slope, self.grid_violations, self.eventually_increasing
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCurvatureCheck {
    pub passed: bool,
    /// Whether the profile was flagged as required to have `R >= 0`.
    pub required: bool,
    /// Smallest `R ρ²` on the grid.
    pub min_scaled: f64,
    /// Arclength where the minimum occurs.
    pub at_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub mean_curvature: f64,
    pub minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileDiagnostics {
    pub asymptotic_flatness: AsymptoticFlatness,
    pub nonneg_scalar: ScalarCurvatureCheck,
    pub boundary: BoundaryCheck,
    /// Vanishing of `H_2(M, Σ)` has no rotationally symmetric test; it is
    /// recorded, not checked.
    pub relative_homology: &'static str,
}

impl ProfileDiagnostics {
    /// Admission verdict: asymptotically flat, and `R >= 0` when required.
    pub fn admitted(&self) -> bool {
        self.asymptotic_flatness.passed && (!self.nonneg_scalar.required || self.nonneg_scalar.passed)
    }
}

pub fn asymptotic_flatness(w: &WarpedProfile, opts: &ValidationOptions) -> Result<AsymptoticFlatness> {
    let x0 = w.chart_start();
    let scale = w.length_scale();
    let rho0 = w.boundary_radius();
    let per_decade = 8;
    let decades = opts.af_span.log10().ceil() as i32;

    let mut deviations = Vec::new();
    let mut last = None;
    let mut eventually_increasing = true;
    for j in per_decade..=(decades * per_decade) {
        let x = x0 + scale * 10f64.powf(j as f64 / per_decade as f64);
        let sample = w.sample_chart(x);
        let sigma = w.arclength_at(x)? - w.s0() + rho0;
        let dev = (sample.rho - sigma).abs();
        if !dev.is_finite() {
            deviations.push(f64::INFINITY);
            eventually_increasing = false;
            continue;
        }
        let in_last_decade = j > (decades - 1) * per_decade;
        if in_last_decade && !(sample.rho > 0.0 && sample.rho_s > 0.0) {
            eventually_increasing = false;
        }
        deviations.push(dev);
        last = Some((sigma, sample.rho_s));
    }

    let tail = &deviations[deviations.len() - per_decade as usize - 1..];
    let decay_constant = tail.iter().fold(0.0f64, |acc, &d| acc.max(d));
    let (sigma_far, far_slope) = last.unwrap_or((f64::NAN, f64::NAN));
    let far_ratio = decay_constant / sigma_far;
    let allowance = 2.0 * decay_constant + rho0;
    let grid_violations = deviations.iter().filter(|&&d| !(d <= allowance)).count();

    let passed = far_ratio <= opts.af_tol
        && (far_slope - 1.0).abs() <= opts.af_tol
        && grid_violations == 0
        && eventually_increasing;
    Ok(AsymptoticFlatness {
        passed,
        decay_constant,
        far_ratio,
        far_slope,
        grid_violations,
        eventually_increasing,
    })
}

/// Structured admission report; never fails on a bad profile, only on a
/// quadrature breakdown while measuring it.
pub fn validate_profile(w: &WarpedProfile, opts: &ValidationOptions) -> Result<ProfileDiagnostics> {
    let asymptotic_flatness = asymptotic_flatness(w, opts)?;

    let mut min_scaled = f64::INFINITY;
    let mut at_x = w.chart_start();
    for x in w.chart_grid(64, 96, 1e6) {
        let sample = w.sample_chart(x);
        let scaled = sample.scalar_curvature() * sample.rho * sample.rho;
        if scaled < min_scaled || scaled.is_nan() {
            min_scaled = scaled;
            at_x = x;
        }
    }
    let nonneg_scalar = ScalarCurvatureCheck {
        passed: min_scaled >= -opts.scalar_tol,
        required: w.requires_nonneg_scalar(),
        min_scaled,
        at_s: w.arclength_at(at_x)?,
    };

    let boundary_sample = w.sample_chart(w.chart_start());
    let mean_curvature = boundary_sample.mean_curvature();
    let boundary = BoundaryCheck {
        mean_curvature,
        minimal: (mean_curvature * boundary_sample.rho).abs() <= opts.minimal_tol,
    };

    Ok(ProfileDiagnostics {
        asymptotic_flatness,
        nonneg_scalar,
        boundary,
        relative_homology: "assumed",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{conformal_to_warped, schwarzschild_profile, Jet};

    #[test]
    fn schwarzschild_horizon_is_admitted_and_minimal() {
        let w = conformal_to_warped(&schwarzschild_profile(2.0, 1.0).unwrap()).unwrap();
        let d = validate_profile(&w, &ValidationOptions::default()).unwrap();
        assert!(d.asymptotic_flatness.passed, "{}", d.asymptotic_flatness.describe());
        assert!(d.nonneg_scalar.passed);
        assert!(d.nonneg_scalar.min_scaled.abs() < 1e-12);
        assert!(d.boundary.minimal);
        assert_eq!(d.relative_homology, "assumed");
    }

    #[test]
    fn shifted_flat_is_admitted_but_not_minimal() {
        let w = WarpedProfile::from_radius_fn("shifted", 1.0, |s| Jet::new(s - 0.5, 1.0, 0.0)).unwrap();
        let d = validate_profile(&w, &ValidationOptions::default()).unwrap();
        assert!(d.asymptotic_flatness.passed);
        assert_eq!(d.asymptotic_flatness.decay_constant, 0.0);
        assert!(d.nonneg_scalar.passed);
        assert!(!d.boundary.minimal);
        assert!((d.boundary.mean_curvature - 4.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_growth_is_not_asymptotically_flat() {
        let w = WarpedProfile::from_radius_fn("quadratic", 1.0, |s| Jet::new(s * s, 2.0 * s, 2.0)).unwrap();
        let d = validate_profile(&w, &ValidationOptions::default()).unwrap();
        assert!(!d.asymptotic_flatness.passed);
        assert!(!d.admitted());
    }

    #[test]
    fn negative_scalar_curvature_is_caught_only_when_required() {
        // ρ = s (1 + 0.1 e^{-s}) dips below R = 0 around s = 3.
        let bump = |s: f64| {
            let e = 0.1 * (-s).exp();
            Jet::new(s * (1.0 + e), 1.0 + e * (1.0 - s), e * (s - 2.0))
        };
        let w = WarpedProfile::from_radius_fn("bump", 1.0, bump).unwrap();
        let d = validate_profile(&w, &ValidationOptions::default()).unwrap();
        assert!(!d.nonneg_scalar.passed);
        assert!(d.admitted());
        let strict = w.requiring_nonneg_scalar(true);
        let d = validate_profile(&strict, &ValidationOptions::default()).unwrap();
        assert!(!d.admitted());
    }
}
