use std::f64::consts::PI;

use proptest::prelude::*;
use psqi_core::perturbation::{apply_perturbation, perturbation_deviation, sample_noise};
use psqi_core::rng::GaussianStream;
use psqi_core::signal::{global_snr, useful_component, Signal, SnrConfig};
use psqi_core::PerturbationParams;

const FS: f64 = 250.0;

fn random_signal(seed: u64, n: usize) -> Signal {
    let mut g = GaussianStream::new(seed);
    let f = g.uniform_in(0.7, 20.0);
    let drift = g.uniform_in(-2.0, 2.0);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            (2.0 * PI * f * t).sin() + drift * t + 0.3 * g.normal()
        })
        .collect();
    Signal::new(samples, FS).unwrap()
}

fn band(lo_frac: f64, width_frac: f64) -> PerturbationParams {
    let f_low = 0.1 + lo_frac * 100.0;
    let f_high = (f_low + 0.5 + width_frac * 100.0).min(0.45 * FS);
    PerturbationParams::new(f_low, f_high)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn global_and_local_budgets_hold(
        seed in any::<u64>(),
        noise_seed in any::<u64>(),
        lo in 0.0f64..1.0,
        width in 0.0f64..1.0,
        gamma_db in -5.0f64..40.0,
        beta_db in -20.0f64..30.0,
    ) {
        let x = random_signal(seed, 1000);
        let x_filt = useful_component(&x).unwrap();
        let z = sample_noise(noise_seed, x.len()).unwrap();
        let cfg = SnrConfig::new(gamma_db, beta_db);
        let dev = perturbation_deviation(&x_filt, &z, band(lo, width), &cfg).unwrap();

        let pre = global_snr(x_filt.samples(), &dev.unclipped).unwrap();
        prop_assert!((pre - cfg.gamma()).abs() / cfg.gamma() < 1e-9);
        let post = global_snr(x_filt.samples(), &dev.clipped).unwrap_or(f64::INFINITY);
        prop_assert!(post >= cfg.gamma());

        let sqrt_beta = cfg.beta().sqrt();
        for (d, xf) in dev.clipped.iter().zip(x_filt.samples()) {
            prop_assert!(d.abs() <= xf.abs() / sqrt_beta + 1e-12);
        }

        let y = apply_perturbation(&x, &x_filt, &z, band(lo, width), &cfg).unwrap();
        for ((a, b), d) in y.samples().iter().zip(x.samples()).zip(&dev.clipped) {
            prop_assert!((a - b - d).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    /// `p(x) - x` only sees `x` through `|x_filt|`: negating the signal keeps
    /// both the norm and the bounds.
    #[test]
    fn deviation_ignores_the_sign_of_the_signal(seed in any::<u64>(), noise_seed in any::<u64>(), lo in 0.0f64..1.0) {
        let x = random_signal(seed, 800);
        let neg = Signal::new(x.samples().iter().map(|v| -v).collect(), FS).unwrap();
        let z = sample_noise(noise_seed, x.len()).unwrap();
        let cfg = SnrConfig::default();
        let theta = band(lo, 0.2);
        let a = perturbation_deviation(&useful_component(&x).unwrap(), &z, theta, &cfg).unwrap();
        let b = perturbation_deviation(&useful_component(&neg).unwrap(), &z, theta, &cfg).unwrap();
        prop_assert_eq!(a.clipped, b.clipped);
    }
}

#[test]
fn huge_local_snr_freezes_the_signal() {
    for seed in 0..20 {
        let x = random_signal(seed, 600);
        let x_filt = useful_component(&x).unwrap();
        let z = sample_noise(seed + 100, x.len()).unwrap();
        let cfg = SnrConfig::new(25.0, 300.0);
        let y =
            apply_perturbation(&x, &x_filt, &z, PerturbationParams::new(3.0, 40.0), &cfg).unwrap();
        for (a, b) in y.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

/// Energy of `d` in `[lo, hi]` Hz over its total energy, by a direct DFT.
fn band_energy_fraction(d: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = d.len();
    let (mut inside, mut total) = (0.0, 0.0);
    for k in 0..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in d.iter().enumerate() {
            let a = -2.0 * PI * (k * i % n) as f64 / n as f64;
            re += v * a.cos();
            im += v * a.sin();
        }
        let p = re * re + im * im;
        let f = k as f64 * fs / n as f64;
        total += p;
        if (lo..=hi).contains(&f) {
            inside += p;
        }
    }
    inside / total
}

#[test]
fn noise_energy_stays_in_its_band() {
    let n = 2500;
    let x = Signal::new(
        (0..n)
            .map(|i| (2.0 * PI * 2.0 * i as f64 / FS).sin())
            .collect(),
        FS,
    )
    .unwrap();
    let x_filt = useful_component(&x).unwrap();
    let cfg = SnrConfig::new(25.0, -35.0);
    for seed in 0..3 {
        let z = sample_noise(seed, n).unwrap();
        let y =
            apply_perturbation(&x, &x_filt, &z, PerturbationParams::new(40.0, 60.0), &cfg).unwrap();
        let d: Vec<f64> = y
            .samples()
            .iter()
            .zip(x.samples())
            .map(|(a, b)| a - b)
            .collect();
        let frac = band_energy_fraction(&d, FS, 35.0, 65.0);
        assert!(frac >= 0.99, "seed {seed}: {frac}");
    }
}
