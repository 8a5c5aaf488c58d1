//! Invariants checked over randomized parameters.

use std::f64::consts::PI;

use proptest::prelude::*;

use mwdiff::dynamics::{ladder_pair, Envelope, LadderConfig};
use mwdiff::farfield::{farfield_density, screen_grid, FarFieldConfig};
use mwdiff::grating::{
    absorption_probability, default_diffraction_cutoff, ladder_cutoff, plane_wave_diffraction,
    MeasurementProfile,
};
use mwdiff::nearfield::{kdtli_signal, CoefficientSource, KdtliConfig};
use mwdiff::params::{
    derive_n0, derive_phi0, polarizability_from_angstrom3, BeamSetup, GratingParameters, AMU,
};
use mwdiff::rabi::{population_trajectory, RabiConfig};
use mwdiff::talbot::{b_conditional, b_unconditional, Absorption, Variant};
use mwdiff::C64;

fn grating(phi0: f64, n0: f64) -> GratingParameters {
    GratingParameters::new(phi0, n0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn absorption_probabilities_are_complete(x in 0.0..1.0f64, phi0 in 0.0..6.0f64, n0 in 0.0..6.0f64) {
        let g = grating(phi0, n0);
        let total: f64 = (0..=ladder_cutoff(&g) as u32).map(|l| absorption_probability(x, l, &g)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total {total}");
    }

    #[test]
    fn diffraction_conserves_probability(phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let cutoff = default_diffraction_cutoff(&g);
        let total: f64 = (0..=ladder_cutoff(&g) as u32)
            .map(|l| plane_wave_diffraction(&MeasurementProfile::new(g, l), cutoff).unwrap().total_probability())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-8, "total {total}");
    }

    #[test]
    fn talbot_coefficients_have_period_two(j in -6i64..=6, xi in -2.0..2.0f64, phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let a = b_unconditional(j, xi, &g, Variant::Quantum).unwrap();
        let b = b_unconditional(j, xi + 2.0, &g, Variant::Quantum).unwrap();
        prop_assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn talbot_coefficients_are_hermitian(j in -6i64..=6, xi in -2.0..2.0f64, phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        for ell in 0..3 {
            let a = b_conditional(j, xi, ell, &g).unwrap();
            let b = b_conditional(-j, -xi, ell, &g).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn classical_reverses_harmonic_order(j in -6i64..=6, xi in -2.0..2.0f64, phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let c = b_unconditional(j, xi, &g, Variant::Classical).unwrap();
        let q = b_unconditional(-j, xi, &g, Variant::Quantum).unwrap();
        prop_assert!((c - q).norm() < 1e-10);
    }

    #[test]
    fn conditional_coefficients_sum_to_unconditional(j in -6i64..=6, xi in 0.0..2.0f64, phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let sum: C64 = (0..=ladder_cutoff(&g) as u32).map(|l| b_conditional(j, xi, l, &g).unwrap()).sum();
        let full = b_unconditional(j, xi, &g, Variant::Quantum).unwrap();
        prop_assert!((sum - full).norm() < 1e-8, "{sum} vs {full}");
    }

    #[test]
    fn coincident_points_give_no_harmonics(j in -6i64..=6, phi0 in 0.0..5.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let b = b_unconditional(j, 0.0, &g, Variant::Quantum).unwrap();
        let expected = if j == 0 { 1.0 } else { 0.0 };
        prop_assert!((b - expected).norm() < 1e-12);
    }

    #[test]
    fn grating_strengths_depend_on_power_over_velocity(k in 0.2..5.0f64) {
        let base = BeamSetup {
            power: 2.0,
            waist_y: 500e-6,
            waist_z: 20e-6,
            wavelength: 532e-9,
            polarizability: polarizability_from_angstrom3(100.0),
            cross_section: 1e-21,
            velocity: 150.0,
            mass: 840.0 * AMU,
        };
        let scaled = BeamSetup { power: base.power * k, velocity: base.velocity * k, ..base };
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
        prop_assert!(rel(derive_phi0(&base).unwrap(), derive_phi0(&scaled).unwrap()) < 1e-12);
        prop_assert!(rel(derive_n0(&base).unwrap(), derive_n0(&scaled).unwrap()) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fringe_signal_is_nonnegative_and_splits_by_channel(
        phi0 in 0.0..4.0f64,
        n0 in 0.0..2.0f64,
        f in 0.1..0.9f64,
        tau in 0.1..4.0f64,
    ) {
        let g = grating(phi0, n0);
        let base = KdtliConfig::new(f, tau, g).unwrap();
        let full = kdtli_signal(&base).unwrap();
        prop_assert!(full.values.iter().all(|&v| v >= -1e-12));
        let mut sum = vec![0.0; full.values.len()];
        for l in 0..=ladder_cutoff(&g) as u32 {
            let s = kdtli_signal(&base.clone().with_source(CoefficientSource::conditional(l))).unwrap();
            for (acc, v) in sum.iter_mut().zip(&s.values) {
                *acc += v;
            }
        }
        for (a, b) in sum.iter().zip(&full.values) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn farfield_is_even_and_splits_by_channel(phi0 in 0.0..4.0f64, n0 in 0.0..3.0f64) {
        let g = grating(phi0, n0);
        let cfg = FarFieldConfig::new(10.0, 1e-3, g, screen_grid(2.0, 161)).unwrap();
        let full = farfield_density(&cfg, Absorption::Unconditional).unwrap();
        let peak = full.peak();
        let n = full.values.len();
        for i in 0..n {
            prop_assert!((full.values[i] - full.values[n - 1 - i]).abs() <= 1e-8 * peak);
        }
        let mut sum = vec![0.0; n];
        for l in 0..=ladder_cutoff(&g) as u32 {
            let d = farfield_density(&cfg, Absorption::Conditional(l)).unwrap();
            for (acc, v) in sum.iter_mut().zip(&d.values) {
                *acc += v;
            }
        }
        for (a, b) in sum.iter().zip(&full.values) {
            prop_assert!((a - b).abs() <= 1e-8 * peak);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ladder_kernels_are_hermitian_and_conserve_probability(
        x in 0.0..1.0f64,
        xp in 0.0..1.0f64,
        phi0 in 0.0..3.0f64,
        n0 in 0.0..2.0f64,
        eta_p in 0.5..2.0f64,
        eta_a in 0.5..2.0f64,
        gaussian in any::<bool>(),
    ) {
        let g = grating(phi0, n0).with_eta(eta_p, eta_a).unwrap();
        let env = if gaussian { Envelope::Gaussian } else { Envelope::Constant };
        let cfg = LadderConfig::new(g, env).unwrap();
        let a = ladder_pair(&cfg, x, xp).unwrap();
        let b = ladder_pair(&cfg, xp, x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v.conj()).norm() < 1e-9);
        }
        let diag = ladder_pair(&cfg, x, x).unwrap();
        prop_assert!(diag.iter().all(|v| v.re >= -1e-12 && v.im.abs() < 1e-12));
        let trace: f64 = diag.iter().map(|v| v.re).sum();
        prop_assert!((trace - 1.0).abs() < 1e-9, "trace {trace}");
    }

    #[test]
    fn envelope_shape_is_irrelevant_without_excited_state_change(
        x in 0.0..1.0f64,
        xp in 0.0..1.0f64,
        phi0 in 0.0..3.0f64,
        n0 in 0.0..2.0f64,
    ) {
        let g = grating(phi0, n0);
        let a = ladder_pair(&LadderConfig::new(g, Envelope::Gaussian).unwrap(), x, xp).unwrap();
        let b = ladder_pair(&LadderConfig::new(g, Envelope::Constant).unwrap(), x, xp).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).norm() < 1e-8);
        }
    }

    #[test]
    fn rabi_populations_are_conserved(
        x in 0.0..1.0f64,
        area in 0.0..(8.0 * PI),
        detuning in -20.0..20.0f64,
        lifetime in 0.05..5.0f64,
    ) {
        let cfg = RabiConfig::new(area, detuning, lifetime).unwrap();
        let mut last_p2 = 0.0;
        for (_, p) in population_trajectory(&cfg, x).unwrap() {
            prop_assert!(p.iter().all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p[2] >= last_p2 - 1e-12, "decayed population must not shrink");
            last_p2 = p[2];
        }
    }
}
