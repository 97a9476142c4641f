use std::sync::Arc;

use serde::Serialize;

use super::{asymptotic_flatness, Jet, ProfileSource, RadialChart, ValidationOptions, WarpedProfile};
use crate::error::{ensure_domain, Error, Result};

/// Conformally flat exterior metric `φ(r)⁴ g_euc` on `|x| >= r0`, with
/// `φ(r) = 1 + Σ cᵢ / rⁱ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalProfile {
    r0: f64,
    coeffs: Vec<f64>,
    mass: Option<f64>,
    horizon: bool,
}

impl ConformalProfile {
    /// `φ = 1 + Σ coeffs[i-1] / r^i` on `[r0, ∞)`.
    pub fn series(r0: f64, coeffs: Vec<f64>) -> Result<Self> {
        ensure_domain(r0 > 0.0 && r0.is_finite(), "r0", r0, "inner radius must be positive")?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProfile("conformal coefficients must be finite".into()));
        }
        let profile = ConformalProfile {
            r0,
            coeffs,
            mass: None,
            horizon: false,
        };
        // φ > 0 on the admission grid: dense near r0, then geometric.
        let grid = (0..64)
            .map(|i| r0 * (1.0 + i as f64 / 32.0))
            .chain((0..=48).map(|i| 3.0 * r0 * 10f64.powf(i as f64 / 6.0)));
        for r in grid {
            let phi = profile.phi(r).value;
            if !(phi > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "conformal factor φ({r}) = {phi} is not positive"
                )));
            }
        }
        Ok(profile)
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mass(&self) -> Option<f64> {
        self.mass
    }

    /// True when the inner sphere is the Schwarzschild horizon `r0 = m/2`.
    pub fn horizon(&self) -> bool {
        self.horizon
    }

    /// `φ`, `φ'`, `φ''` at radius `r`.
    pub fn phi(&self, r: f64) -> Jet {
        let inv = 1.0 / r;
        let mut power = inv;
        let (mut value, mut d1, mut d2) = (1.0, 0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            let i = (k + 1) as f64;
            value += c * power;
            d1 -= i * c * power * inv;
            d2 += i * (i + 1.0) * c * power * inv * inv;
            power *= inv;
        }
        Jet::new(value, d1, d2)
    }

    /// `C` in `|φ(r) - 1| <= C / r` on `[r0, ∞)`.
    pub fn decay_constant(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * self.r0.powi(-(k as i32)))
            .sum()
    }

    /// `R = -8 φ⁻⁵ Δφ` evaluated directly from the conformal factor.
    pub fn scalar_curvature(&self, r: f64) -> f64 {
        let phi = self.phi(r);
        let laplacian = phi.d2 + 2.0 * phi.d1 / r;
        -8.0 * laplacian / phi.value.powi(5)
    }
}

/// Spatial Schwarzschild exterior `(1 + m / 2|x|)⁴ g_euc` on `|x| >= r`.
pub fn schwarzschild_profile(m: f64, r: f64) -> Result<ConformalProfile> {
    ensure_domain(r > 0.0 && r.is_finite(), "r", r, "inner radius must be positive")?;
    ensure_domain(m.is_finite(), "m", m, "mass must be finite")?;
    if m < 0.0 {
        ensure_domain(r > m.abs() / 2.0, "r", r, "negative mass requires r > |m|/2")?;
    }
    let coeffs = if m == 0.0 { Vec::new() } else { vec![m / 2.0] };
    let mut profile = ConformalProfile::series(r, coeffs)?;
    profile.mass = Some(m);
    profile.horizon = m > 0.0 && (r - m / 2.0).abs() <= 1e-12 * r;
    Ok(profile)
}

/// Euclidean exterior of the ball of radius `r`.
pub fn flat_profile(r: f64) -> Result<ConformalProfile> {
    schwarzschild_profile(0.0, r)
}

/// Isotropic chart `x = r`: `ρ = φ² r`, `J = φ²`.
#[derive(Debug, Clone)]
pub struct ConformalChart {
    profile: ConformalProfile,
}

impl ConformalChart {
    pub fn new(profile: ConformalProfile) -> Self {
        ConformalChart { profile }
    }

    pub fn profile(&self) -> &ConformalProfile {
        &self.profile
    }
}

impl RadialChart for ConformalChart {
    fn start(&self) -> f64 {
        self.profile.r0
    }

    fn radius(&self, r: f64) -> Jet {
        let p = self.profile.phi(r);
        Jet::new(
            p.value * p.value * r,
            2.0 * p.value * p.d1 * r + p.value * p.value,
            2.0 * p.d1 * p.d1 * r + 2.0 * p.value * p.d2 * r + 4.0 * p.value * p.d1,
        )
    }

    fn stretch(&self, r: f64) -> Jet {
        let p = self.profile.phi(r);
        Jet::new(
            p.value * p.value,
            2.0 * p.value * p.d1,
            2.0 * p.d1 * p.d1 + 2.0 * p.value * p.d2,
        )
    }

    fn slope_lag(&self, r: f64) -> f64 {
        let p = self.profile.phi(r);
        -2.0 * p.value * p.d1 * r
    }

    fn length_scale(&self) -> f64 {
        self.profile.r0
    }
}

/// Rewrites `φ⁴ g_euc` as `ds² + ρ² dΩ²` with `ds = φ² dr`, `ρ = φ² r`.
///
/// Arclength is measured so that the boundary sits at `s0 = ρ(r0)`; for the
/// flat exterior this makes `s = r`.
pub fn conformal_to_warped(p: &ConformalProfile) -> Result<WarpedProfile> {
    let chart = ConformalChart::new(p.clone());
    let s0 = chart.radius(p.r0).value;
    let source = match p.mass {
        Some(0.0) => ProfileSource::Preset { name: "flat".into() },
        Some(_) => ProfileSource::Preset {
            name: "schwarzschild".into(),
        },
        None => ProfileSource::Converted,
    };
    let warped = WarpedProfile::from_chart(Arc::new(chart), s0, source)?.with_mass(p.mass);
    let af = asymptotic_flatness(&warped, &ValidationOptions::default())?;
    if !af.passed {
        return Err(Error::NotAsymptoticallyFlat(af.describe()));
    }
    Ok(warped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::derivative;
    use std::f64::consts::PI;

    #[test]
    fn schwarzschild_horizon_preset() {
        let p = schwarzschild_profile(2.0, 1.0).unwrap();
        assert_eq!(p.phi(1.0).value, 2.0);
        assert!(p.horizon());
        assert_eq!(p.mass(), Some(2.0));
    }

    #[test]
    fn zero_mass_is_flat() {
        let p = schwarzschild_profile(0.0, 1.0).unwrap();
        for r in [1.0, 3.0, 1e6] {
            assert_eq!(p.phi(r), Jet::new(1.0, 0.0, 0.0));
        }
        assert!(!p.horizon());
    }

    #[test]
    fn negative_mass_admissibility() {
        assert!(matches!(schwarzschild_profile(-1.0, 0.4), Err(Error::Domain { .. })));
        assert!(matches!(schwarzschild_profile(-1.0, 0.5), Err(Error::Domain { .. })));
        assert!(schwarzschild_profile(-1.0, 0.51).is_ok());
        assert!(matches!(schwarzschild_profile(1.0, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn horizon_boundary_area_and_minimality() {
        let w = conformal_to_warped(&schwarzschild_profile(2.0, 1.0).unwrap()).unwrap();
        let s0 = w.s0();
        assert_eq!(w.rho(s0).unwrap(), 4.0);
        let c = w.curvature_sample(s0).unwrap();
        assert!((c.area - 64.0 * PI).abs() < 1e-12);
        assert_eq!(w.rho_prime(s0).unwrap(), 0.0);

        // Finite-difference oracle for dρ/ds at the boundary on the converted profile.
        let rho_of_s = |s: f64| w.rho(s).unwrap();
        let fd = crate::quad::derivative_with(rho_of_s, s0, 1, 1e-2, crate::quad::Stencil::Forward);
        assert!(fd.abs() < 1e-7, "{fd}");
    }

    #[test]
    fn flat_conversion_is_identity_up_to_shift() {
        let w = conformal_to_warped(&flat_profile(1.0).unwrap()).unwrap();
        assert_eq!(w.s0(), 1.0);
        for r in [1.0, 2.0, 37.5, 1e4] {
            let s = w.arclength_at(r).unwrap();
            assert!((s - r).abs() < 1e-12 * r);
            assert!((w.rho(s).unwrap() - r).abs() < 1e-10 * r);
        }
        assert!((super::super::mean_curvature(&w, 1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn schwarzschild_arclength_matches_antiderivative() {
        // ∫ φ² dr = r + m ln r - m²/(4r) for φ = 1 + m/(2r).
        let m = 2.0;
        let w = conformal_to_warped(&schwarzschild_profile(m, 1.0).unwrap()).unwrap();
        let anti = |r: f64| r + m * r.ln() - m * m / (4.0 * r);
        for r in [1.5, 3.0, 1e3, 1e7] {
            let s = w.arclength_at(r).unwrap() - w.s0();
            let exact = anti(r) - anti(1.0);
            assert!((s - exact).abs() < 1e-11 * exact.max(1.0), "r = {r}: {s} vs {exact}");
        }
    }

    #[test]
    fn schwarzschild_is_scalar_flat_and_asymptotically_minimal() {
        let w = conformal_to_warped(&schwarzschild_profile(2.0, 1.0).unwrap()).unwrap();
        for x in w.chart_grid(16, 32, 1e6) {
            let sample = w.sample_chart(x);
            assert!(sample.scalar_curvature().abs() * sample.rho * sample.rho < 1e-12);
        }
        let far = w.sample_chart(1e8);
        assert!((far.mean_curvature() - 2.0 / far.rho).abs() < 1e-15);
    }

    #[test]
    fn warped_curvature_matches_conformal_laplacian() {
        let p = ConformalProfile::series(0.8, vec![0.7, -0.2, 0.05]).unwrap();
        let w = conformal_to_warped(&p).unwrap();
        for i in 0..40 {
            let r = 0.8 * 10f64.powf(i as f64 / 8.0);
            let warped = w.sample_chart(r).scalar_curvature();
            let direct = p.scalar_curvature(r);
            let scale = direct.abs().max(1e-300);
            assert!((warped - direct).abs() <= 1e-6 * scale, "r = {r}: {warped} vs {direct}");
        }
        // Near the boundary, also against a finite-difference Laplacian of φ.
        let phi = |x: f64| p.phi(x).value;
        for r in [0.8, 1.0, 1.7] {
            let lap = derivative(phi, r, 2) + 2.0 * derivative(phi, r, 1) / r;
            let direct = -8.0 * lap / phi(r).powi(5);
            let warped = w.sample_chart(r).scalar_curvature();
            assert!(
                (warped - direct).abs() <= 1e-6 * direct.abs(),
                "r = {r}: {warped} vs {direct}"
            );
        }
    }
}
