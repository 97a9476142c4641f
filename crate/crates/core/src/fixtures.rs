//! Reference profiles for tests, benchmarks and the acceptance suite.
//!
//! Perturbed fixtures are conformally flat with
//! `φ = 1 + a1/r + a2/r² + a3/r³`, `a1 >= 0` and `a2, a3 <= 0`. Each term
//! `a_i r^-i` has Laplacian `i(i-1) a_i r^(-i-2)`, so `Δφ <= 0` and the
//! scalar curvature `-8 φ⁻⁵ Δφ` is non-negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::profile::{ProfileSpec, WarpedProfile};
use crate::quad::bracketed_root;

/// Seed used when `GEOFLOW_SEED` is unset or unparseable.
pub const DEFAULT_SEED: u64 = 0x6765_6f66;

/// Seed for randomized fixture suites, from `GEOFLOW_SEED` if set.
pub fn seed_from_env() -> u64 {
    std::env::var("GEOFLOW_SEED")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub spec: ProfileSpec,
    /// Boundary is a minimal sphere.
    pub minimal: bool,
    /// Schwarzschild `(m, r)` when the fixture is a preset.
    pub preset: Option<(f64, f64)>,
}

impl Fixture {
    /// Builds the profile, flagged as required to have `R >= 0`.
    pub fn build(&self) -> Result<WarpedProfile> {
        Ok(self.spec.build()?.requiring_nonneg_scalar(true))
    }
}

/// Schwarzschild presets `m ∈ {-0.5, 0, 0.5, 2, 5}` with `r = max(1, 0.6|m|)`,
/// plus the horizon preset `(2, 1)`.
pub fn presets() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = [-0.5, 0.0, 0.5, 2.0, 5.0]
        .into_iter()
        .map(|m: f64| {
            let r = (0.6 * m.abs()).max(1.0);
            Fixture {
                name: format!("schwarzschild m={m} r={r}"),
                spec: ProfileSpec::Schwarzschild { m, r },
                minimal: false,
                preset: Some((m, r)),
            }
        })
        .collect();
    out.push(Fixture {
        name: "schwarzschild m=2 r=1".into(),
        spec: ProfileSpec::Schwarzschild { m: 2.0, r: 1.0 },
        minimal: true,
        preset: Some((2.0, 1.0)),
    });
    out
}

/// Non-minimal fixtures with `R >= 0`: `r0 ∈ [1, 2]`, `a1 ∈ [0.1, 1]`,
/// `a2 ∈ [-0.2, -0.01]`, `a3 ∈ [-0.05, 0]`. Along these, `ρ` is
/// increasing from the boundary on.
pub fn perturbed(n: usize, seed: u64) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let r0 = rng.gen_range(1.0..2.0);
            let coeffs = vec![
                rng.gen_range(0.1..1.0),
                -rng.gen_range(0.01..0.2),
                -rng.gen_range(0.0..0.05),
            ];
            Fixture {
                name: format!("perturbed-{i}"),
                spec: ProfileSpec::ConformalSeries { r0, coeffs },
                minimal: false,
                preset: None,
            }
        })
        .collect()
}

/// Fixtures with `R >= 0` and a minimal boundary.
///
/// With `y = 2r/m`, `φ = 1 + 1/y - b/y² - c/y³` and `ρ = φ² r` has
/// `dρ/dr = φ (1 - 1/y + 3b/y² + 5c/y³)`; the boundary is the largest root of
/// `y³ - y² + 3by + 5c`, which lies in `(1/2, 1)` for `b <= 0.03`,
/// `c <= 0.01`.
pub fn minimal_boundary(n: usize, seed: u64) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_6e69);
    (0..n)
        .map(|i| {
            let m: f64 = rng.gen_range(0.5..4.0);
            let b: f64 = rng.gen_range(0.0..0.03);
            let c: f64 = rng.gen_range(0.0..0.01);
            let cubic = |y: f64| ((y - 1.0) * y + 3.0 * b) * y + 5.0 * c;
            let y0 = bracketed_root(cubic, 0.5, 1.0, 1e-16).expect("cubic changes sign on [1/2, 1]");
            let half = m / 2.0;
            Fixture {
                name: format!("minimal-{i}"),
                spec: ProfileSpec::ConformalSeries {
                    r0: y0 * half,
                    coeffs: vec![half, -b * half * half, -c * half * half * half],
                },
                minimal: true,
                preset: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{validate_profile, ValidationOptions};

    #[test]
    fn presets_cover_the_mass_family() {
        let p = presets();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0].spec, ProfileSpec::Schwarzschild { m: -0.5, r: 1.0 });
        assert_eq!(p[4].spec, ProfileSpec::Schwarzschild { m: 5.0, r: 3.0 });
    }

    #[test]
    fn same_seed_same_fixtures() {
        assert_eq!(perturbed(4, 7), perturbed(4, 7));
        assert_ne!(perturbed(4, 7), perturbed(4, 8));
    }

    #[test]
    fn randomized_fixtures_are_admitted() {
        let opts = ValidationOptions::default();
        for f in perturbed(5, DEFAULT_SEED)
            .iter()
            .chain(&minimal_boundary(5, DEFAULT_SEED))
        {
            let w = f.build().unwrap();
            let d = validate_profile(&w, &opts).unwrap();
            assert!(d.admitted(), "{}: {:?}", f.name, d);
            assert!(d.nonneg_scalar.passed, "{}", f.name);
            assert_eq!(
                d.boundary.minimal, f.minimal,
                "{}: H = {}",
                f.name, d.boundary.mean_curvature
            );
        }
    }
}
