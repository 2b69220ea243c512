use std::f64::consts::TAU;

use elaa_velocity::geometry::{ArrayGeometry, TargetState};
use elaa_velocity::waveform::{doppler_shift, synthesize_noise_free, ChannelNoise, WaveformConfig};

fn setup() -> (TargetState, ArrayGeometry, WaveformConfig, ChannelNoise) {
    let geom = ArrayGeometry::half_wavelength(16, 28e9).unwrap();
    let target = TargetState::new(0.9, 0.35, 0.4, -0.7).unwrap();
    let config = WaveformConfig::new(28e9, 4, 120e3, 14, 16.6e-3, 2.0).unwrap();
    let noise = ChannelNoise::new(0.7, 0.01).unwrap();
    (target, geom, config, noise)
}

fn wrap(phase: f64) -> f64 {
    (phase + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
}

#[test]
fn every_cell_has_the_pilot_amplitude() {
    let (target, geom, config, noise) = setup();
    let cube = synthesize_noise_free(&target, &geom, &config, &noise).unwrap();
    let expected = (2.0f64 / 4.0).sqrt() * 0.7;
    assert_eq!(cube.dims(), (14, 4, 16));
    for s in cube.samples() {
        assert!((s.norm() - expected).abs() < 1e-12);
    }
    let energy: f64 = cube.samples().iter().map(|s| s.norm_sqr()).sum();
    assert!((energy - 14.0 * 16.0 * 2.0 * 0.49).abs() < 1e-9);
}

#[test]
fn slow_time_phase_advances_by_the_doppler() {
    let (target, geom, config, noise) = setup();
    let cube = synthesize_noise_free(&target, &geom, &config, &noise).unwrap();
    for n in 0..4 {
        for k in 0..16 {
            let nu = doppler_shift(&target, &geom, &config, n, k).unwrap();
            let step = wrap(TAU * nu * config.symbol_time());
            for m in 0..13 {
                let ratio = cube.get(m + 1, n, k) / cube.get(m, n, k);
                assert!((wrap(ratio.arg() - step)).abs() < 1e-9, "n={n} k={k} m={m}");
            }
        }
    }
}

#[test]
fn static_target_sees_only_the_delay_phase() {
    let (target, geom, config, noise) = setup();
    let still = target.with_velocity(0.0, 0.0);
    let cube = synthesize_noise_free(&still, &geom, &config, &noise).unwrap();
    for m in 1..14 {
        for n in 0..4 {
            for k in 0..16 {
                assert!((cube.get(m, n, k) - cube.get(0, n, k)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn added_noise_has_the_configured_variance() {
    let (target, geom, config, _) = setup();
    let noise = ChannelNoise::new(1.0, 0.25).unwrap();
    let clean = synthesize_noise_free(&target, &geom, &config, &noise).unwrap();
    let mut residual = Vec::new();
    for seed in 0..40 {
        let noisy = clean.clone().add_noise(seed);
        residual.extend(noisy.samples().iter().zip(clean.samples()).map(|(a, b)| a - b));
    }
    let n = residual.len() as f64;
    let mean = residual.iter().sum::<num_complex::Complex64>() / n;
    let var = residual.iter().map(|r| r.norm_sqr()).sum::<f64>() / n;
    let re_var = residual.iter().map(|r| r.re * r.re).sum::<f64>() / n;
    // 35840 complex samples: standard error of the variance is ~0.5%
    assert!(mean.norm() < 0.01);
    assert!((var / 0.25 - 1.0).abs() < 0.03, "variance {var}");
    assert!((re_var / 0.125 - 1.0).abs() < 0.03, "real-part variance {re_var}");
}

#[test]
fn independent_realizations_differ_by_twice_the_variance() {
    let (target, geom, config, _) = setup();
    let noise = ChannelNoise::new(1.0, 0.5).unwrap();
    let clean = synthesize_noise_free(&target, &geom, &config, &noise).unwrap();
    let mut total = 0.0;
    let mut count = 0.0;
    for seed in 0..20 {
        let a = clean.clone().add_noise(2 * seed);
        let b = clean.clone().add_noise(2 * seed + 1);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            total += (x - y).norm_sqr();
            count += 1.0;
        }
    }
    assert!((total / count / (2.0 * 0.5) - 1.0).abs() < 0.04);
    let again = clean.clone().add_noise(3);
    assert_eq!(again.samples(), clean.add_noise(3).samples());
}
