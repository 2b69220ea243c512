//! Acceptance checks for the velocity-bound toolkit.
//!
//! Runs without the libtest harness so that every criterion prints exactly
//! one `PASS`/`FAIL` line, even on success. The process exits non-zero if
//! any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use elaa_velocity::bounds::{
    crlb, crlb_vr_far_field, crossover_distance, fim_closed_form, fim_numeric, j_rr_boresight,
    j_tt_boresight_approx, j_tt_boresight_aperture_form, j_tt_halfwavelength, FisherInfo,
};
use elaa_velocity::estimator::{monte_carlo_mse, Scenario};
use elaa_velocity::experiments::logspace;
use elaa_velocity::geometry::{ArrayGeometry, TargetState};
use elaa_velocity::units::db_to_linear;
use elaa_velocity::waveform::WaveformConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const ORACLE_TOL: f64 = 1e-10;
const ORACLE_SCENARIOS: usize = 500;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const FAR_FIELD_TOL: f64 = 1e-3;
const SLOPE_TARGET: f64 = 2.0;
const SLOPE_TOL: f64 = 0.02;
const CARRIER_TOL: f64 = 4.0 * f64::EPSILON;
const CROSSOVER_TOL: f64 = 1e-9;
const DECOUPLING_TOL: f64 = 1e-3;
const MC_RATIO: (f64, f64) = (0.8, 1.5);
const MC_TRIALS: usize = 1000;
const MC_BUDGET: Duration = Duration::from_secs(300);

const CARRIER: f64 = 28e9;
const ELEMENTS: usize = 101;

fn defaults(carrier: f64) -> WaveformConfig {
    WaveformConfig::new(carrier, 1, 120e3, 14, 16.6e-3, 1.0).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Largest entry-wise relative gap of `numeric` from `reference`. Diagonal
/// entries are relative to themselves; the cross term is relative to
/// `sqrt(J_rr J_tt)`. An entry that is exactly zero in the reference (a
/// single element has no transverse lever) is measured against `J_rr`.
fn fim_gap(numeric: &FisherInfo, reference: &FisherInfo) -> f64 {
    let entry = |a: f64, b: f64, scale: f64| {
        let scale = if scale > 0.0 { scale } else { reference.j_rr };
        rel(a, b, scale)
    };
    entry(numeric.j_rr, reference.j_rr, reference.j_rr)
        .max(entry(numeric.j_tt, reference.j_tt, reference.j_tt))
        .max(entry(numeric.j_rt, reference.j_rt, (reference.j_rr * reference.j_tt).sqrt()))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_SCENARIOS {
        let k = rng.random_range(1..=51usize);
        let m = rng.random_range(1..=16usize);
        let n = rng.random_range(1..=8usize);
        let carrier = rng.random_range(1e9..100e9);
        let spacing = rng.random_range(0.25..2.0) * 299_792_458.0 / carrier;
        let geom = ArrayGeometry::new(k, spacing).unwrap();
        let scale = geom.aperture().max(spacing);
        let d = scale * 10f64.powf(rng.random_range(-1.0..3.0));
        let angle = rng.random_range(-FRAC_PI_2..FRAC_PI_2) * 0.999_999;
        let target = TargetState::new(d, angle, rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0))
            .unwrap();
        let config = WaveformConfig::new(carrier, n, 120e3, m, 16.6e-3, 1.0).unwrap();
        let snr = db_to_linear(rng.random_range(-20.0..30.0));
        let (a, b) = match (
            fim_numeric(&target, &geom, &config, snr),
            fim_closed_form(&target, &geom, &config, snr),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            // target on an element: both paths must agree on rejecting it
            (Err(_), Err(_)) => continue,
            _ => return check(false, format!("paths disagree on validity at d={d}, theta={angle}")),
        };
        worst = worst.max(fim_gap(&a, &b));
    }
    let elapsed = start.elapsed();
    check(
        worst < ORACLE_TOL && elapsed < ORACLE_BUDGET,
        format!(
            "{ORACLE_SCENARIOS} scenarios, max relative gap {worst:.3e} (tol {ORACLE_TOL:e}), {:.2} s (budget {} s)",
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

fn far_field_limit() -> Outcome {
    let config = defaults(CARRIER);
    let geom = ArrayGeometry::half_wavelength(ELEMENTS, CARRIER).unwrap();
    let d = 100.0 * geom.aperture();
    let near = 1.0 / j_rr_boresight(d, &geom, &config, 1.0);
    let far = crlb_vr_far_field(&config, ELEMENTS, 1.0);
    let gap = rel(near, far, far);
    check(gap < FAR_FIELD_TOL, format!("d = 100 D: |1/J_rr / far-field - 1| = {gap:.3e} (tol {FAR_FIELD_TOL:e})"))
}

fn transverse_square_law() -> Outcome {
    let config = defaults(CARRIER);
    let geom = ArrayGeometry::half_wavelength(ELEMENTS, CARRIER).unwrap();
    let ds = logspace(10.0 * geom.aperture(), 1000.0 * geom.aperture(), 50);
    let pts: Vec<(f64, f64)> = ds
        .iter()
        .map(|&d| {
            let (_, r) = crlb(&TargetState::at(d, 0.0).unwrap(), &geom, &config, 1.0).unwrap();
            (d.ln(), r.crlb_vt.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    check(
        (slope - SLOPE_TARGET).abs() <= SLOPE_TOL,
        format!("log-log slope of crlb_vt over [10, 1000] D = {slope:.5} (target {SLOPE_TARGET} +/- {SLOPE_TOL})"),
    )
}

fn carrier_independence() -> Outcome {
    let d = 3.0;
    let snr = 1.0;
    let values: Vec<(f64, f64)> = [6e9, 28e9]
        .iter()
        .map(|&fc| {
            let config = defaults(fc);
            let geom = ArrayGeometry::half_wavelength(ELEMENTS, fc).unwrap();
            (
                j_tt_halfwavelength(d, ELEMENTS, &config.slow_time(), snr),
                j_tt_boresight_approx(d, &geom, &config, snr),
            )
        })
        .collect();
    let exact = values[0].0 == values[1].0;
    let substituted = rel(values[0].1, values[1].1, values[0].0);
    let matches = values.iter().map(|v| rel(v.0, v.1, v.0)).fold(0.0, f64::max);
    check(
        exact && substituted <= CARRIER_TOL && matches <= CARRIER_TOL,
        format!(
            "half-wavelength J_tt at 6 and 28 GHz bit-identical: {exact}; delta-substituted forms differ by {substituted:.2e}, from carrier-free form by {matches:.2e} (tol {CARRIER_TOL:.2e})"
        ),
    )
}

fn crossover_identity() -> Outcome {
    let config = defaults(CARRIER);
    let mut worst = 0.0f64;
    let mut first_line = 0.0;
    for k in [2usize, 5, 21, 101, 256] {
        let geom = ArrayGeometry::half_wavelength(k, CARRIER).unwrap();
        let d = crossover_distance(&geom);
        let far = crlb_vr_far_field(&config, k, 1.0);
        worst = worst.max((far * j_tt_boresight_aperture_form(d, &geom, &config, 1.0) - 1.0).abs());
        if k == ELEMENTS {
            first_line = far * j_tt_boresight_approx(d, &geom, &config, 1.0);
        }
    }
    check(
        worst < CROSSOVER_TOL,
        format!(
            "|crlb_ff * J_tt(D, T_obs form) - 1| = {worst:.3e} at d = D/(4 sqrt 3) over K in {{2,5,21,101,256}} (tol {CROSSOVER_TOL:e}); (K^2-1) delta^2 form gives {first_line:.6} = (K+1)/(K-1) for K = {ELEMENTS}"
        ),
    )
}

fn endfire_singularity() -> Outcome {
    let config = defaults(CARRIER);
    let geom = ArrayGeometry::half_wavelength(ELEMENTS, CARRIER).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for angle in [FRAC_PI_2, -FRAC_PI_2] {
        let (fim, r) = crlb(&TargetState::at(10.0, angle).unwrap(), &geom, &config, 1.0).unwrap();
        let pass = fim.j_tt == 0.0 && r.singular && r.crlb_vt == f64::INFINITY && r.crlb_vr.is_finite();
        ok &= pass;
        notes.push(format!(
            "theta={:+.0}deg: J_tt={:e}, singular={}, crlb_vt={}, crlb_vr={:.3e}",
            angle.to_degrees(),
            fim.j_tt,
            r.singular,
            r.crlb_vt,
            r.crlb_vr
        ));
    }
    check(ok, notes.join("; "))
}

fn decoupling_regime() -> Outcome {
    let config = defaults(CARRIER);
    let geom = ArrayGeometry::half_wavelength(ELEMENTS, CARRIER).unwrap();
    let target = TargetState::at(10.0, 45f64.to_radians()).unwrap();
    let (fim, r) = crlb(&target, &geom, &config, 1.0).unwrap();
    let gap = (r.crlb_vr * fim.j_rr - 1.0).abs();
    check(
        gap < DECOUPLING_TOL,
        format!("theta = 45 deg, d = 10 m: |crlb_vr * J_rr - 1| = {gap:.3e} (tol {DECOUPLING_TOL:e})"),
    )
}

fn monte_carlo_tightness() -> Outcome {
    let geometry = ArrayGeometry::half_wavelength(21, CARRIER).unwrap();
    let d = 5.0 * geometry.aperture();
    let scenario = Scenario {
        target: TargetState::new(d, 0.0, 0.05, 0.03).unwrap(),
        waveform: defaults(CARRIER),
        snr: db_to_linear(20.0),
        geometry,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let report = pool
        .install(|| monte_carlo_mse(&scenario, &scenario.default_search().unwrap(), MC_TRIALS, 20_240_601))
        .unwrap();
    let elapsed = start.elapsed();
    let inside = |x: f64| (MC_RATIO.0..=MC_RATIO.1).contains(&x);
    check(
        inside(report.ratio_vr())
            && inside(report.ratio_vt())
            && report.degenerate_vr == 0
            && report.degenerate_vt == 0
            && elapsed < MC_BUDGET,
        format!(
            "K=21, d=5D, 20 dB, {MC_TRIALS} trials: MSE/CRLB v_r = {:.4}, v_t = {:.4} (range [{}, {}]), single-threaded {:.1} s (budget {} s)",
            report.ratio_vr(),
            report.ratio_vt(),
            MC_RATIO.0,
            MC_RATIO.1,
            elapsed.as_secs_f64(),
            MC_BUDGET.as_secs()
        ),
    )
}

fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_elaa-velocity");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "# small montecarlo + sweep\nelements = 21\ndistance = 0.5\ntrials = 200\nsnr_list = 10dB, 20dB\npoints = 25\n",
    )
    .unwrap();
    let runs: [(&str, &[&str]); 4] = [
        ("montecarlo", &["--seed", "7"]),
        ("fig2", &[]),
        ("fig4", &["--set", "nx=21", "--set", "ny=11"]),
        ("crlb", &[]),
    ];
    let mut failures = Vec::new();
    for (cmd, extra) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let out = Command::new(exe)
                .arg(cmd)
                .arg("--config")
                .arg(&config)
                .args(["--threads", threads])
                .args(extra)
                .output()
                .unwrap();
            if !out.status.success() {
                failures.push(format!("{cmd} exited {:?}", out.status.code()));
            }
            outputs.push(out.stdout);
        }
        let via_file = dir.path().join(format!("{cmd}.csv"));
        let status = Command::new(exe)
            .arg(cmd)
            .arg("--config")
            .arg(&config)
            .args(extra)
            .arg("--out")
            .arg(&via_file)
            .status()
            .unwrap();
        outputs.push(if status.success() { std::fs::read(&via_file).unwrap() } else { Vec::new() });
        if outputs.iter().any(|o| o != &outputs[0] || o.is_empty()) {
            failures.push(format!("{cmd} output differs between runs"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "montecarlo, fig2, fig4, crlb byte-identical across repeats, thread counts and --out".into()
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("far-field limit", far_field_limit),
        ("transverse square law", transverse_square_law),
        ("carrier independence", carrier_independence),
        ("crossover identity", crossover_identity),
        ("endfire singularity", endfire_singularity),
        ("decoupled regime", decoupling_regime),
        ("monte carlo tightness", monte_carlo_tightness),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", i + 1, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
