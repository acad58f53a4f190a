use harvest_core::correlators::{
    self, compute_f, fourier_smearing, log_f, PairGeometry, CROSS_CHECK_TOL,
};
use harvest_core::scenario::{DetectorSpec, Label};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn detector(
    label: Label,
    position: [f64; 3],
    time: f64,
    coupling: f64,
    sigma: f64,
) -> DetectorSpec {
    DetectorSpec {
        smearing_width: sigma,
        ..DetectorSpec::new(label, position, time, coupling)
    }
}

/// `(2π)^{-3/2} ∫d³x e^{-i k z} exp(-x²/2σ²)` by a midpoint rule on a cube.
fn fourier_transform_3d(k: f64, sigma: f64) -> f64 {
    let n = 121;
    let half = 8.0 * sigma;
    let h = 2.0 * half / n as f64;
    let node = |i: usize| -half + h * (i as f64 + 0.5);
    let mut sum = 0.0;
    for i in 0..n {
        let x = node(i);
        for j in 0..n {
            let y = node(j);
            for l in 0..n {
                let z = node(l);
                sum += (-(x * x + y * y + z * z) / (2.0 * sigma * sigma)).exp() * (k * z).cos();
            }
        }
    }
    sum * h * h * h / (2.0 * PI).powf(1.5)
}

struct McEstimate {
    mean: f64,
    se: f64,
}

/// Monte Carlo over the unreduced wave-vector integral of `weight(k_vec, |k|)`
/// times `F̃_D F̃_E / (8|k|)`, sampling k from the Gaussian `exp(-s²k²)`.
fn monte_carlo(
    sd: f64,
    se: f64,
    samples: usize,
    seed: u64,
    weight: impl Fn([f64; 3], f64) -> f64,
) -> McEstimate {
    let s2 = 0.5 * (sd * sd + se * se);
    let amplitude = (sd * se).powi(3) * (PI / s2).powf(1.5) / 8.0;
    let std = (0.5 / s2).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let k: [f64; 3] = [0; 3].map(|_| {
            std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let v = amplitude * weight(k, kn) / kn;
        sum += v;
        sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    McEstimate {
        mean,
        se: ((sq / n - mean * mean) / (n - 1.0)).sqrt(),
    }
}

#[test]
fn fourier_smearing_matches_3d_transform() {
    assert!((fourier_transform_3d(0.0, 1.0) - 1.0).abs() < 1e-10);
    assert!((fourier_smearing(0.0, 1.0) - 1.0).abs() < 1e-15);
    let expected = fourier_transform_3d(2.0, 0.5);
    assert!((expected - 0.125 * (-0.5f64).exp()).abs() < 1e-10);
    assert!((fourier_smearing(2.0, 0.5) - expected).abs() < 1e-10);
}

#[test]
fn decay_factor_examples() {
    assert_eq!(compute_f(&detector(Label::A, [0.0; 3], 0.0, 0.0, 1.0)), 1.0);
    let f1 = compute_f(&detector(Label::A, [0.0; 3], 0.0, 1.0, 1.0));
    assert!((f1 - (-PI / 8.0).exp()).abs() < 1e-15);
    assert!((f1 - 0.6752).abs() < 1e-4);
    let heavy = detector(Label::A, [0.0; 3], 0.0, 10.0, 1.0);
    assert!((log_f(&heavy) + 12.5 * PI).abs() < 1e-12);
    let f10 = compute_f(&heavy);
    assert!(f10 > 0.0 && (f10 / 8.8e-18 - 1.0).abs() < 0.01, "{f10:e}");
    let quad = correlators::log_f_quadrature(&heavy, 1e-12).unwrap().value;
    assert!((quad - log_f(&heavy)).abs() < 1e-10);

    // ln f = -½ ∫d³k λ² F̃² / (8|k|)
    let mc = monte_carlo(1.0, 1.0, 4_000_000, 11, |_, _| -0.5);
    assert!(
        (mc.mean - (-PI / 8.0)).abs() < 3.0 * mc.se.max(1e-12),
        "{} ± {}",
        mc.mean,
        mc.se
    );
}

#[test]
fn theta_matches_monte_carlo_to_three_figures() {
    let d = detector(Label::A, [0.0; 3], 0.0, 1.0, 1.0);
    let e = detector(Label::B, [1.0, 0.0, 0.0], 0.25, 1.0, 1.0);
    let closed = PairGeometry::new(&d, &e).theta();
    let mc = monte_carlo(1.0, 1.0, 20_000_000, 5, |k, kn| {
        -2.0 * (kn * 0.25 - k[0]).sin()
    });
    assert!(
        (mc.mean - closed).abs() <= 3.0 * mc.se,
        "{} ± {} vs {closed}",
        mc.mean,
        mc.se
    );
    assert!(
        (mc.mean - closed).abs() <= 5e-4 * closed.abs(),
        "{} vs {closed}",
        mc.mean
    );
}

#[test]
fn spacelike_omega_matches_monte_carlo() {
    let d = detector(Label::A, [0.0; 3], 0.0, 1.0, 1.0);
    let e = detector(Label::B, [2.8, 0.0, 0.0], 0.0, 1.0, 1.0);
    let closed = PairGeometry::new(&d, &e).omega();
    assert!(closed.abs() > 1e-3);
    let mc = monte_carlo(1.0, 1.0, 20_000_000, 6, |k, _| -(2.8 * k[0]).cos());
    assert!(
        (mc.mean - closed).abs() <= 3.0 * mc.se,
        "{} ± {} vs {closed}",
        mc.mean,
        mc.se
    );
}

#[test]
fn theta_decays_outside_the_lightcone() {
    for dt in [0.25, 1.0, 3.0] {
        for sigma in [0.5, 1.0, 2.0] {
            let g = |r: f64| {
                PairGeometry::new(
                    &detector(Label::A, [0.0; 3], 0.0, 1.0, sigma),
                    &detector(Label::B, [r, 0.0, 0.0], dt, 1.0, sigma),
                )
            };
            let near = g(dt).theta().abs();
            let far = g(dt + 10.0 * sigma).theta().abs();
            assert!(
                far <= 1e-3 * near,
                "dt {dt} sigma {sigma}: {near:e} -> {far:e}"
            );
        }
    }
}

#[test]
fn omega_decays_as_the_massless_wightman_function() {
    // ω is not signalling-limited: far from the lightcone it falls off like
    // 1/(d² - ΔT²) rather than as a Gaussian.
    for dt in [0.0, 1.0, 3.0] {
        let g = |r: f64| {
            PairGeometry::new(
                &detector(Label::A, [0.0; 3], 0.0, 1.0, 1.0),
                &detector(Label::B, [r, 0.0, 0.0], dt, 1.0, 1.0),
            )
            .omega()
        };
        let mut previous = g(dt + 3.0).abs();
        for i in 1..=40 {
            let r = dt + 3.0 + 0.5 * i as f64;
            let current = g(r).abs();
            assert!(current < previous, "dt {dt}: not decreasing at d = {r}");
            previous = current;
        }
        let r = dt + 200.0;
        let interval = r * r - dt * dt;
        // -π λλ' σ³σ'³ / (4 s²) · 2s² / (d² - ΔT²) with s = σ = 1.
        let asymptote = -PI / (2.0 * interval);
        assert!(
            (g(r) / asymptote - 1.0).abs() < 1e-3,
            "dt {dt}: {} vs {asymptote}",
            g(r)
        );
    }
}

#[test]
fn coincident_omega_is_twice_log_f() {
    for sigma in [0.5, 1.0, 1.7] {
        let d = detector(Label::A, [0.3; 3], 1.0, 2.0, sigma);
        let e = detector(Label::B, [0.3; 3], 1.0, 2.0, sigma);
        assert!((PairGeometry::new(&d, &e).omega() - 2.0 * log_f(&d)).abs() < 1e-12);
    }
}

fn arb_pair() -> impl Strategy<Value = (DetectorSpec, DetectorSpec)> {
    (
        prop::array::uniform3(-2.0f64..2.0),
        prop::array::uniform3(-2.0f64..2.0),
        -3.0f64..3.0,
        0.0f64..5.0,
        0.0f64..5.0,
        0.5f64..2.0,
        0.5f64..2.0,
    )
        .prop_map(|(x, y, dt, ld, le, sd, se)| {
            (
                detector(Label::A, x, 0.0, ld, sd),
                detector(Label::B, y, dt, le, se),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_agrees_with_closed_forms((d, e) in arb_pair()) {
        let g = PairGeometry::new(&d, &e);
        let theta = g.theta_quadrature(1e-10).unwrap().value;
        let omega = g.omega_quadrature(1e-10).unwrap().value;
        prop_assert!((theta - g.theta()).abs() <= CROSS_CHECK_TOL);
        prop_assert!((omega - g.omega()).abs() <= CROSS_CHECK_TOL);
        let lf = correlators::log_f_quadrature(&d, 1e-10).unwrap().value;
        prop_assert!((lf.exp() - compute_f(&d)).abs() <= 1e-10);
    }

    #[test]
    fn swap_symmetries((d, e) in arb_pair()) {
        let forward = PairGeometry::new(&d, &e);
        let backward = PairGeometry::new(&e, &d);
        prop_assert!((forward.theta() + backward.theta()).abs() <= 1e-14 * forward.theta().abs().max(1e-300));
        prop_assert_eq!(forward.omega(), backward.omega());
    }

    #[test]
    fn bilinear_in_couplings((d, e) in arb_pair(), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let base = PairGeometry::new(&d, &e);
        let scaled = PairGeometry::new(
            &DetectorSpec { coupling: a * d.coupling, ..d },
            &DetectorSpec { coupling: b * e.coupling, ..e },
        );
        let tol = |x: f64| 1e-13 * x.abs() + 1e-300;
        prop_assert!((scaled.theta() - a * b * base.theta()).abs() <= tol(scaled.theta()));
        prop_assert!((scaled.omega() - a * b * base.omega()).abs() <= tol(scaled.omega()));
        let doubled = DetectorSpec { coupling: 2.0 * d.coupling, ..d };
        prop_assert!((log_f(&doubled) - 4.0 * log_f(&d)).abs() <= 1e-13 * log_f(&doubled).abs());
    }

    #[test]
    fn equal_time_theta_vanishes((d, e) in arb_pair()) {
        let e = DetectorSpec { switch_time: d.switch_time, ..e };
        let g = PairGeometry::new(&d, &e);
        prop_assert_eq!(g.theta(), 0.0);
        prop_assert!(g.theta_quadrature(1e-10).unwrap().value.abs() <= 1e-10);
    }
}
