use std::f64::consts::PI;
use std::time::Instant;

use casimir_shift::lifshitz::{LifshitzSettings, MatsubaraCutoff, PlateSolver};
use casimir_shift::optics::{DrudeParams, PermittivityMode, PermittivitySpec};
use casimir_shift::units::HBAR_C_J_M;
use proptest::prelude::*;

fn ideal_metal_solver() -> PlateSolver {
    let spec = PermittivitySpec::pure_plasma(DrudeParams::new(1e4, 0.0).unwrap()).unwrap();
    let settings = LifshitzSettings {
        max_terms: 400_000,
        ..LifshitzSettings::at_temperature(1.0)
    };
    PlateSolver::new(spec, settings).unwrap()
}

#[test]
fn ideal_metal_laws_at_one_kelvin() {
    let a = 100e-9;
    let start = Instant::now();
    let r = ideal_metal_solver().evaluate(a).unwrap();
    let elapsed = start.elapsed();
    let p_exact = PI * PI * HBAR_C_J_M / (240.0 * a.powi(4));
    let f_exact = PI * PI * HBAR_C_J_M / (720.0 * a.powi(3));
    assert!((p_exact - 13.0).abs() < 0.05);
    assert!((f_exact / 4.33e-7 - 1.0).abs() < 2e-3);
    assert!(
        (r.pressure.abs() / p_exact - 1.0).abs() < 0.01,
        "{r:?} vs {p_exact}"
    );
    assert!(
        (r.free_energy_per_area.abs() / f_exact - 1.0).abs() < 0.01,
        "{r:?} vs {f_exact}"
    );
    assert!(r.pressure < 0.0 && r.free_energy_per_area < 0.0);
    eprintln!("ideal metal: {r:?} in {elapsed:?}");
}

#[test]
fn zero_temperature_ideal_metal() {
    let a = 100e-9;
    let spec = PermittivitySpec::pure_plasma(DrudeParams::new(1e4, 0.0).unwrap()).unwrap();
    let r = PlateSolver::new(spec, LifshitzSettings::zero_temperature())
        .unwrap()
        .evaluate(a)
        .unwrap();
    let p_exact = PI * PI * HBAR_C_J_M / (240.0 * a.powi(4));
    assert!((r.pressure.abs() / p_exact - 1.0).abs() < 0.01, "{r:?}");
}

#[test]
fn zero_temperature_matches_one_kelvin() {
    let a = 100e-9;
    for mode in [PermittivityMode::PureDrude, PermittivityMode::PurePlasma] {
        let spec = PermittivitySpec::new(mode, DrudeParams::GOLD, None).unwrap();
        let zero = PlateSolver::new(spec.clone(), LifshitzSettings::zero_temperature())
            .unwrap()
            .evaluate(a)
            .unwrap();
        let one_k = PlateSolver::new(
            spec,
            LifshitzSettings {
                max_terms: 400_000,
                ..LifshitzSettings::at_temperature(1.0)
            },
        )
        .unwrap()
        .evaluate(a)
        .unwrap();
        let rel_p = (zero.pressure / one_k.pressure - 1.0).abs();
        let rel_f = (zero.free_energy_per_area / one_k.free_energy_per_area - 1.0).abs();
        assert!(
            rel_p < 5e-3 && rel_f < 5e-3,
            "{mode}: {zero:?} vs {one_k:?}"
        );
    }
}

#[test]
fn doubling_cutoff_is_within_twice_term_tolerance() {
    for mode in [PermittivityMode::PureDrude, PermittivityMode::PurePlasma] {
        let spec = PermittivitySpec::new(mode, DrudeParams::GOLD, None).unwrap();
        let settings = LifshitzSettings::at_temperature(300.0);
        for a in [60e-9, 150e-9, 400e-9] {
            let auto = PlateSolver::new(spec.clone(), settings).unwrap();
            let (p, terms) = auto.pressure_with_terms(a).unwrap();
            let doubled = PlateSolver::new(
                spec.clone(),
                LifshitzSettings {
                    l_max: MatsubaraCutoff::Fixed(2 * terms),
                    ..settings
                },
            )
            .unwrap()
            .pressure(a)
            .unwrap();
            assert!(
                (doubled / p - 1.0).abs() < 2.0 * settings.term_tolerance,
                "{mode} a={a}: {p} vs {doubled}"
            );
        }
    }
}

fn fd_settings() -> LifshitzSettings {
    LifshitzSettings {
        term_tolerance: 1e-11,
        k_quad_tolerance: 1e-11,
        ..LifshitzSettings::at_temperature(300.0)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pressure_matches_finite_difference(
        a_nm in 60.0f64..500.0,
        plasma in any::<bool>(),
        temperature in 10.0f64..400.0,
    ) {
        let mode = if plasma { PermittivityMode::PurePlasma } else { PermittivityMode::PureDrude };
        let spec = PermittivitySpec::new(mode, DrudeParams::GOLD, None).unwrap();
        let settings = LifshitzSettings { temperature_k: temperature, ..fd_settings() };
        let s = PlateSolver::new(spec, settings).unwrap();
        let a = a_nm * 1e-9;
        let h = 1e-3 * a;
        let fd = -(s.free_energy(a + h).unwrap() - s.free_energy(a - h).unwrap()) / (2.0 * h);
        let p = s.pressure(a).unwrap();
        prop_assert!((fd / p - 1.0).abs() < 1e-4, "fd {} vs p {}", fd, p);
    }

    #[test]
    fn attraction_and_decreasing_magnitude(a1 in 50.0f64..499.0, gap in 1.0f64..100.0, plasma in any::<bool>()) {
        let mode = if plasma { PermittivityMode::PurePlasma } else { PermittivityMode::PureDrude };
        let spec = PermittivitySpec::new(mode, DrudeParams::GOLD, None).unwrap();
        let s = PlateSolver::new(spec, LifshitzSettings::default()).unwrap();
        let a2 = (a1 + gap).min(500.0);
        let r1 = s.evaluate(a1 * 1e-9).unwrap();
        let r2 = s.evaluate(a2 * 1e-9).unwrap();
        prop_assert!(r1.pressure < 0.0 && r1.free_energy_per_area < 0.0);
        prop_assert!(r1.pressure.abs() > r2.pressure.abs());
    }
}
