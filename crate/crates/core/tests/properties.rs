use std::f64::consts::PI;

use geoflow_core::capacity::{level_set_grid, solve_harmonic, TGrid};
use geoflow_core::fixtures::perturbed;
use geoflow_core::monotone::{fit_schwarzschild, minimal_boundary_bound, monotonicity_bound, schwarzschild_energy};
use geoflow_core::yamabe::{model_test_function, yamabe_quotient};
use geoflow_core::ProfileSpec;
use proptest::prelude::*;

fn spec(s: ProfileSpec) -> geoflow_core::HarmonicSolution {
    solve_harmonic(&s.build().unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_moves_monotonically_toward_sphere(w0 in 0.1f64..60.0, t1 in 0.0f64..20.0, dt in 0.0f64..5.0) {
        let (a, b) = (monotonicity_bound(w0, t1), monotonicity_bound(w0, t1 + dt));
        let sphere = 4.0 * PI;
        if w0 <= sphere {
            prop_assert!(b >= a - 1e-12 && b <= sphere + 1e-12);
        } else {
            prop_assert!(b <= a + 1e-12 && b >= sphere - 1e-12);
        }
        prop_assert!(minimal_boundary_bound(t1 + dt) >= minimal_boundary_bound(t1));
    }

    #[test]
    fn flat_exteriors_have_zero_deficit(r in 0.05f64..50.0) {
        let h = spec(ProfileSpec::Flat { r });
        prop_assert!((h.boundary_flux() / (4.0 * PI * r) - 1.0).abs() < 1e-10);
        for d in level_set_grid(&h, &TGrid::uniform(12.0, 16).unwrap()).unwrap() {
            prop_assert_eq!(d.w, 4.0 * PI);
            prop_assert_eq!(d.b, 0.0);
        }
    }

    #[test]
    fn schwarzschild_energy_matches_pipeline(m in -1.0f64..6.0, extra in 0.05f64..3.0) {
        let r = m.abs() / 2.0 + extra;
        let h = spec(ProfileSpec::Schwarzschild { m, r });
        for d in level_set_grid(&h, &TGrid::uniform(8.0, 12).unwrap()).unwrap() {
            prop_assert!((d.w / schwarzschild_energy(m, r, d.t) - 1.0).abs() < 1e-9, "t = {}", d.t);
        }
        let w0 = schwarzschild_energy(m, r, 0.0);
        let (fm, fr) = fit_schwarzschild(w0, h.boundary_flux());
        prop_assert!((fm - m).abs() < 1e-8 * (1.0 + m.abs()));
        prop_assert!((fr / r - 1.0).abs() < 1e-8);
    }

    #[test]
    fn area_and_willmore_identities(seed in any::<u64>()) {
        let fixture = &perturbed(1, seed)[0];
        let h = solve_harmonic(&fixture.build().unwrap()).unwrap();
        let w = h.profile();
        for d in level_set_grid(&h, &TGrid::uniform(10.0, 12).unwrap()).unwrap() {
            let s = w.sample_chart(d.x);
            prop_assert!((d.area / (4.0 * PI * s.rho * s.rho) - 1.0).abs() < 1e-14);
            prop_assert!((d.willmore - d.h * d.h * d.area).abs() <= 1e-12 * d.willmore.max(1.0));
            // W is computed without forming |∇w|² area directly.
            prop_assert!((d.w / (d.grad_w * d.grad_w * d.area) - 1.0).abs() < 1e-10);
            prop_assert!((d.b - d.t.exp() * (4.0 * PI - d.w)).abs() < 1e-9 * d.b.abs().max(1.0));
        }
    }

    #[test]
    fn quotient_is_invariant_under_scaling(lambda in 1e-3f64..1e3, m in 0.5f64..6.0) {
        let h = spec(ProfileSpec::Schwarzschild { m, r: m / 2.0 });
        let f = model_test_function().unwrap();
        let a = yamabe_quotient(&h, Some(&f)).unwrap();
        let b = yamabe_quotient(&h, Some(&f.scaled(lambda))).unwrap();
        prop_assert!((a.quotient / b.quotient - 1.0).abs() < 1e-10);
        prop_assert!((a.quotient_upper / b.quotient_upper - 1.0).abs() < 1e-10);
    }
}
