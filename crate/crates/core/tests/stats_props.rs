use casimir_shift::sphere_plate::{Averaging, FrequencyShiftCurve};
use casimir_shift::stats::{
    chi2, chi2_survival, exclusion_subset, incomplete_gamma_pq, MeasurementDataset,
    MeasurementPoint, SigmaMode,
};
use proptest::prelude::*;
use rand_like::Lcg;

/// Tiny deterministic generator so fixtures need no RNG dependency.
mod rand_like {
    pub struct Lcg(pub u64);

    impl Lcg {
        pub fn uniform(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        }

        /// Box–Muller standard normal.
        pub fn normal(&mut self) -> f64 {
            let (u, v) = (self.uniform(), self.uniform());
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        }
    }
}

fn theory(n: usize) -> FrequencyShiftCurve {
    let pts = (0..n)
        .map(|i| {
            let z = (118.0 + 112.0 * i as f64 / (n - 1) as f64) * 1e-9;
            (z, -50.0 * (118e-9 / z).powi(4))
        })
        .collect();
    FrequencyShiftCurve::from_points(pts, None, Averaging::Exact).unwrap()
}

fn dataset_from(
    curve: &FrequencyShiftCurve,
    offsets_sigma: impl Fn(usize) -> f64,
    sigma: f64,
) -> MeasurementDataset {
    let points = curve
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| MeasurementPoint {
            z: p.z,
            delta_f: p.delta_f + offsets_sigma(i) * sigma,
            sigma_f: sigma,
            sigma_z: None,
        })
        .collect();
    MeasurementDataset::new(points, "synthetic").unwrap()
}

#[test]
fn fifteen_of_thirty_two_displaced_points() {
    let curve = theory(32);
    // Every other point in the first 30, displaced by 4.5σ with alternating sign.
    let offsets = |i: usize| {
        if i < 30 && i.is_multiple_of(2) {
            if i.is_multiple_of(4) {
                4.5
            } else {
                -4.6
            }
        } else {
            0.3
        }
    };
    let data = dataset_from(&curve, offsets, 1.0);
    let report = chi2(&data, &curve, SigmaMode::FOnly)
        .unwrap()
        .with_fit_params(2)
        .unwrap()
        .with_exclusion(1.0);
    let sub = report.subset_bound.unwrap();
    assert_eq!(sub.count, 15);
    // each of the 15 contributes at least 4.5² = 20.25, so partial ≥ 303.75 > 300
    assert!(sub.partial_chi2 >= 15.0 * 20.25);
    assert!(report.probability.unwrap() < 1e-8);
}

#[test]
fn self_consistent_noise_gives_chi2_near_dof() {
    let curve = theory(200);
    let mut rng = Lcg(7);
    let noise: Vec<f64> = (0..200).map(|_| rng.normal()).collect();
    let data = dataset_from(&curve, |i| noise[i], 0.5);
    let report = chi2(&data, &curve, SigmaMode::FOnly)
        .unwrap()
        .with_fit_params(0)
        .unwrap();
    // χ²₂₀₀ has standard deviation 20
    assert!((report.chi2 - 200.0).abs() < 60.0, "{}", report.chi2);
    let q = report.probability.unwrap();
    assert!(q > 1e-3 && q < 1.0 - 1e-3, "{q}");
}

#[test]
fn exact_match_gives_full_probability() {
    let curve = theory(10);
    let data = dataset_from(&curve, |_| 0.0, 1.0);
    let report = chi2(&data, &curve, SigmaMode::FOnly)
        .unwrap()
        .with_fit_params(2)
        .unwrap();
    assert_eq!(report.chi2, 0.0);
    assert_eq!(report.probability, Some(1.0));
}

/// Within a few ulps of 1, where Q can no longer move in f64.
fn saturated(q: f64) -> bool {
    q >= 1.0 - 4.0 * f64::EPSILON
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4096, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn survival_decreases_in_chi2(dof in 1usize..200, x in 0.0f64..400.0, dx in 0.01f64..20.0) {
        let a = chi2_survival(x, dof).unwrap();
        let b = chi2_survival(x + dx, dof).unwrap();
        // Strict unless Q has saturated near 1 or underflowed to 0.
        prop_assert!(b < a || (saturated(a) && b <= a) || b == 0.0, "{} {}", a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn survival_increases_in_dof(dof in 1usize..200, x in 0.1f64..300.0) {
        let a = chi2_survival(x, dof).unwrap();
        let b = chi2_survival(x, dof + 1).unwrap();
        prop_assert!(b > a || (saturated(b) && b >= a) || (a == 0.0 && b == 0.0), "{} {}", a, b);
    }

    #[test]
    fn lower_and_upper_sum_to_one(a in 0.05f64..150.0, x in 0.0f64..400.0) {
        let (p, q) = incomplete_gamma_pq(a, x).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partial_never_exceeds_total(offsets in proptest::collection::vec(-6.0f64..6.0, 2..40), threshold in 0.0f64..5.0) {
        let curve = theory(offsets.len().max(2));
        let data = dataset_from(&curve, |i| offsets[i], 0.7);
        let report = chi2(&data, &curve, SigmaMode::FOnly).unwrap();
        let sub = exclusion_subset(&report, threshold);
        prop_assert!(sub.partial_chi2 <= report.chi2 * (1.0 + 1e-12));
        prop_assert!(report.per_point.iter().all(|&c| c >= 0.0));
    }
}
