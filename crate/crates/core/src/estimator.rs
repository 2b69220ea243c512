//! Matched-filter ML velocity estimator and Monte Carlo efficiency harness.
//!
//! With the target position known, the only unknowns are `(v_r, v_t)` and an
//! unknown common complex gain. The estimator maximizes
//!
//! ```text
//! L(v_r, v_t) = | sum_{m,n,k} r[m,n,k] conj(y_hat[m,n,k](v_r, v_t)) |^2
//! ```
//!
//! over a rectangular search region: a coarse grid search, then alternating
//! three-point parabolic refinement along each axis.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bounds::{crlb, CrlbResult};
use crate::error::{Error, Result};
use crate::geometry::{projections, ArrayGeometry, TargetState};
use crate::waveform::{round_trip_delay, synthesize_noise_free, ChannelNoise, ObservationCube, WaveformConfig};
use crate::{symmetric_offsets, SPEED_OF_LIGHT};

/// Relative curvature floor (second difference at the coarse step over the
/// peak value) below which an axis is reported unidentifiable.
const CURVATURE_FLOOR: f64 = 1e-9;

/// Finest refinement step as a fraction of the coarse grid step.
const MIN_STEP_FRACTION: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MlSearchConfig {
    pub radial_range: (f64, f64),
    pub transverse_range: (f64, f64),
    pub radial_points: usize,
    pub transverse_points: usize,
    pub max_iterations: usize,
    /// Stop once both refinement moves fall below this, m/s.
    pub tolerance: f64,
}

impl MlSearchConfig {
    /// Rejects empty ranges, grids under three points and a non-positive
    /// tolerance.
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi), points) in [
            ("radial", self.radial_range, self.radial_points),
            ("transverse", self.transverse_range, self.transverse_points),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::EmptySearchRegion(format!("{name} range [{lo}, {hi}]")));
            }
            if points < 3 {
                return Err(Error::EmptySearchRegion(format!(
                    "{name} grid needs at least 3 points, got {points}"
                )));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }

    fn radial_step(&self) -> f64 {
        (self.radial_range.1 - self.radial_range.0) / (self.radial_points - 1) as f64
    }

    fn transverse_step(&self) -> f64 {
        (self.transverse_range.1 - self.transverse_range.0) / (self.transverse_points - 1) as f64
    }

    /// Search region centered on `center`, sized from the scenario's slow-time
    /// ambiguity.
    ///
    /// The radial half-width is a fifth of the Doppler ambiguity interval
    /// `c / (2 f_c T_sym)`; the transverse half-width is the radial one scaled
    /// by `2 / max|p_k|`, the transverse phase lever relative to the radial
    /// one. Grid counts give roughly eight points per main lobe.
    pub fn around(center: &TargetState, geom: &ArrayGeometry, config: &WaveformConfig) -> Result<Self> {
        let ambiguity = SPEED_OF_LIGHT / (2.0 * config.carrier() * config.symbol_time());
        let radial_half = 0.2 * ambiguity;
        let lever = projections(center, geom)?
            .iter()
            .map(|p| p.transverse.abs())
            .fold(0.0, f64::max);
        let transverse_half = if lever > 0.0 {
            radial_half * 2.0 / lever
        } else {
            radial_half
        };
        let points = ((3.2 * config.num_symbols() as f64).ceil() as usize).max(8) | 1;
        Ok(Self {
            radial_range: (center.radial_velocity - radial_half, center.radial_velocity + radial_half),
            transverse_range: (
                center.transverse_velocity - transverse_half,
                center.transverse_velocity + transverse_half,
            ),
            radial_points: points,
            transverse_points: points,
            max_iterations: 200,
            tolerance: 1e-7,
        })
    }

    /// Same region with the coarse grid step halved on both axes.
    pub fn refined_grid(&self) -> Self {
        Self {
            radial_points: 2 * self.radial_points - 1,
            transverse_points: 2 * self.transverse_points - 1,
            ..self.clone()
        }
    }
}

/// Velocity estimate; `None` marks an axis the statistic cannot resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    pub radial: Option<f64>,
    pub transverse: Option<f64>,
}

/// Precomputed matched-filter statistic for one cube and target position.
struct Statistic {
    num_symbols: usize,
    /// Derotated slow-time sequences, one per `(n, k)`, each of length `M`.
    sequences: Vec<Complex64>,
    /// Per-`(n, k)` phase-per-symbol coefficients on `v_r` and `v_t`.
    radial_coeff: Vec<f64>,
    transverse_coeff: Vec<f64>,
    first_symbol: f64,
}

impl Statistic {
    fn new(cube: &ObservationCube, distance: f64, angle: f64) -> Result<Self> {
        if let Some(i) = cube.samples().iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFiniteSample(i));
        }
        let position = TargetState::at(distance, angle)?;
        let geom = cube.geometry();
        let config = cube.config();
        let (mm, nn, kk) = cube.dims();
        let proj = projections(&position, geom)?;
        let tsym = config.symbol_time();

        let mut sequences = Vec::with_capacity(mm * nn * kk);
        let mut radial_coeff = Vec::with_capacity(nn * kk);
        let mut transverse_coeff = Vec::with_capacity(nn * kk);
        for n in 0..nn {
            let f = config.subcarrier_frequency(n);
            let w = std::f64::consts::TAU * f / SPEED_OF_LIGHT * tsym;
            for (k, pr) in proj.iter().enumerate() {
                let tau = round_trip_delay(&position, geom, k)?;
                let derotate = Complex64::from_polar(1.0, std::f64::consts::TAU * (f * tau).fract());
                sequences.extend((0..mm).map(|m| cube.get(m, n, k) * derotate));
                radial_coeff.push(w * (1.0 + pr.radial));
                transverse_coeff.push(w * pr.transverse);
            }
        }
        Ok(Self {
            num_symbols: mm,
            sequences,
            radial_coeff,
            transverse_coeff,
            first_symbol: symmetric_offsets(mm).next().unwrap_or(0.0),
        })
    }

    fn eval(&self, radial: f64, transverse: f64) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for ((seq, a), b) in self
            .sequences
            .chunks_exact(self.num_symbols)
            .zip(&self.radial_coeff)
            .zip(&self.transverse_coeff)
        {
            let phi = a * radial + b * transverse;
            let step = Complex64::from_polar(1.0, -phi);
            let mut rot = Complex64::from_polar(1.0, -phi * self.first_symbol);
            let mut acc = Complex64::new(0.0, 0.0);
            for s in seq {
                acc += s * rot;
                rot *= step;
            }
            total += acc;
        }
        total.norm_sqr()
    }
}

/// Vertex offset of the parabola through `(-h, lm), (0, l0), (h, lp)`, clamped
/// to `[-h, h]`. Climbs toward the larger neighbor when not concave.
fn parabolic_offset(lm: f64, l0: f64, lp: f64, h: f64) -> f64 {
    let curvature = lm - 2.0 * l0 + lp;
    if curvature >= 0.0 {
        return if lp > lm {
            h
        } else if lm > lp {
            -h
        } else {
            0.0
        };
    }
    (0.5 * h * (lm - lp) / curvature).clamp(-h, h)
}

fn identifiable(lm: f64, l0: f64, lp: f64) -> bool {
    -(lm - 2.0 * l0 + lp) > CURVATURE_FLOOR * l0.abs()
}

/// ML estimate of `(v_r, v_t)` with known target position `(distance, angle)`.
pub fn ml_estimate(
    cube: &ObservationCube,
    distance: f64,
    angle: f64,
    search: &MlSearchConfig,
) -> Result<VelocityEstimate> {
    search.validate()?;
    let stat = Statistic::new(cube, distance, angle)?;

    let (r_lo, r_hi) = search.radial_range;
    let (t_lo, t_hi) = search.transverse_range;
    let hr0 = search.radial_step();
    let ht0 = search.transverse_step();

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..search.radial_points {
        let vr = r_lo + i as f64 * hr0;
        for j in 0..search.transverse_points {
            let vt = t_lo + j as f64 * ht0;
            let l = stat.eval(vr, vt);
            if l > best.0 {
                best = (l, vr, vt);
            }
        }
    }
    let (l0, mut vr, mut vt) = best;

    let radial_ok = identifiable(stat.eval(vr - hr0, vt), l0, stat.eval(vr + hr0, vt));
    let transverse_ok = identifiable(stat.eval(vr, vt - ht0), l0, stat.eval(vr, vt + ht0));

    let (mut hr, mut ht) = (hr0, ht0);
    let stop = search.tolerance * 0.1;
    for _ in 0..search.max_iterations {
        let mut moved: f64 = 0.0;
        if radial_ok {
            let c = stat.eval(vr, vt);
            let dr = parabolic_offset(stat.eval(vr - hr, vt), c, stat.eval(vr + hr, vt), hr);
            vr = (vr + dr).clamp(r_lo, r_hi);
            moved = moved.max(dr.abs());
            if dr.abs() < 0.999 * hr {
                hr = (hr * 0.5).max(hr0 * MIN_STEP_FRACTION);
            }
        }
        if transverse_ok {
            let c = stat.eval(vr, vt);
            let dt = parabolic_offset(stat.eval(vr, vt - ht), c, stat.eval(vr, vt + ht), ht);
            vt = (vt + dt).clamp(t_lo, t_hi);
            moved = moved.max(dt.abs());
            if dt.abs() < 0.999 * ht {
                ht = (ht * 0.5).max(ht0 * MIN_STEP_FRACTION);
            }
        }
        if moved < stop {
            break;
        }
    }

    Ok(VelocityEstimate {
        radial: radial_ok.then_some(vr),
        transverse: transverse_ok.then_some(vt),
    })
}

/// One radar scenario: layout, true target, waveform, per-cell SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub target: TargetState,
    pub waveform: WaveformConfig,
    pub snr: f64,
}

impl Scenario {
    pub fn crlb(&self) -> Result<CrlbResult> {
        Ok(crlb(&self.target, &self.geometry, &self.waveform, self.snr)?.1)
    }

    pub fn noise(&self) -> Result<ChannelNoise> {
        ChannelNoise::from_snr(&self.waveform, self.snr)
    }

    pub fn noise_free_cube(&self) -> Result<ObservationCube> {
        synthesize_noise_free(&self.target, &self.geometry, &self.waveform, &self.noise()?)
    }

    pub fn default_search(&self) -> Result<MlSearchConfig> {
        MlSearchConfig::around(&self.target, &self.geometry, &self.waveform)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub seed: u64,
    /// Trials where the radial / transverse axis was reported unidentifiable.
    pub degenerate_vr: usize,
    pub degenerate_vt: usize,
    pub bias_vr: f64,
    pub bias_vt: f64,
    /// Empirical MSE over the identifiable trials; `+inf` when there are none.
    pub mse_vr: f64,
    pub mse_vt: f64,
    pub crlb_vr: f64,
    pub crlb_vt: f64,
}

impl MonteCarloReport {
    pub fn ratio_vr(&self) -> f64 {
        ratio(self.mse_vr, self.crlb_vr)
    }

    pub fn ratio_vt(&self) -> f64 {
        ratio(self.mse_vt, self.crlb_vt)
    }
}

fn ratio(mse: f64, bound: f64) -> f64 {
    if mse.is_infinite() {
        f64::INFINITY
    } else if bound.is_infinite() {
        // a finite error against an unbounded floor
        0.0
    } else {
        mse / bound
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise seed of trial `trial` under master `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ mix(trial)
}

/// Runs `trials` independent noisy realizations through [`ml_estimate`] and
/// compares the empirical MSE against the CRLB. Deterministic in
/// `(scenario, search, trials, seed)` regardless of thread count.
pub fn monte_carlo_mse(
    scenario: &Scenario,
    search: &MlSearchConfig,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if trials < 100 {
        return Err(Error::invalid("trials", format!("need at least 100, got {trials}")));
    }
    let bound = scenario.crlb()?;
    let clean = scenario.noise_free_cube()?;
    let truth = scenario.target;

    let estimates = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let cube = clean.clone().add_noise(trial_seed(seed, t));
            ml_estimate(&cube, truth.distance, truth.angle, search)
        })
        .collect::<Result<Vec<_>>>()?;

    let errors_vr: Vec<f64> = estimates
        .iter()
        .filter_map(|e| e.radial.map(|v| v - truth.radial_velocity))
        .collect();
    let errors_vt: Vec<f64> = estimates
        .iter()
        .filter_map(|e| e.transverse.map(|v| v - truth.transverse_velocity))
        .collect();
    let (bias_vr, mse_vr) = moments(&errors_vr);
    let (bias_vt, mse_vt) = moments(&errors_vt);

    Ok(MonteCarloReport {
        trials,
        seed,
        degenerate_vr: trials - errors_vr.len(),
        degenerate_vt: trials - errors_vt.len(),
        bias_vr,
        bias_vt,
        mse_vr,
        mse_vt,
        crlb_vr: bound.crlb_vr,
        crlb_vt: bound.crlb_vt,
    })
}

/// `(mean, mean square)`; infinite mean square for an empty sample.
fn moments(errors: &[f64]) -> (f64, f64) {
    if errors.is_empty() {
        return (0.0, f64::INFINITY);
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let msq = errors.iter().map(|e| e * e).sum::<f64>() / n;
    (mean, msq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(k: usize, d_over_aperture: f64, angle: f64, vr: f64, vt: f64, snr_db: f64) -> Scenario {
        let geometry = ArrayGeometry::half_wavelength(k, 28e9).unwrap();
        let d = d_over_aperture * geometry.aperture();
        Scenario {
            target: TargetState::new(d, angle, vr, vt).unwrap(),
            waveform: WaveformConfig::new(28e9, 1, 120e3, 14, 16.6e-3, 1.0).unwrap(),
            snr: crate::units::db_to_linear(snr_db),
            geometry,
        }
    }

    #[test]
    fn parabola_vertex() {
        // f(x) = -(x - 0.3)^2 sampled at -1, 0, 1
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0), 1.0) - 0.3).abs() < 1e-15);
        assert_eq!(parabolic_offset(0.0, 1.0, 5.0, 0.5), 0.5);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0, 0.5), 0.0);
    }

    #[test]
    fn noise_free_recovery() {
        let s = scenario(21, 5.0, 0.0, 0.05, 0.03, 20.0);
        let search = s.default_search().unwrap();
        let est = ml_estimate(&s.noise_free_cube().unwrap(), s.target.distance, 0.0, &search).unwrap();
        assert!((est.radial.unwrap() - 0.05).abs() <= search.tolerance);
        assert!((est.transverse.unwrap() - 0.03).abs() <= search.tolerance);
    }

    #[test]
    fn endfire_transverse_axis_is_flagged() {
        let s = scenario(21, 5.0, std::f64::consts::FRAC_PI_2, 0.02, 0.7, 20.0);
        let mut search = s.default_search().unwrap();
        search.transverse_range = (-1.0, 2.0);
        let cube = s.noise_free_cube().unwrap().add_noise(5);
        let est = ml_estimate(&cube, s.target.distance, s.target.angle, &search).unwrap();
        assert!(est.transverse.is_none());
        assert!(est.radial.is_some());
    }

    #[test]
    fn rejects_empty_region_and_bad_samples() {
        let s = scenario(5, 5.0, 0.0, 0.0, 0.0, 0.0);
        let cube = s.noise_free_cube().unwrap();
        let mut search = s.default_search().unwrap();
        search.radial_range = (1.0, 1.0);
        assert!(matches!(
            ml_estimate(&cube, s.target.distance, 0.0, &search),
            Err(Error::EmptySearchRegion(_))
        ));
        let mut search = s.default_search().unwrap();
        search.transverse_points = 2;
        assert!(ml_estimate(&cube, s.target.distance, 0.0, &search).is_err());

        let mut bad = cube.clone();
        bad.samples_mut()[7] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(
            ml_estimate(&bad, s.target.distance, 0.0, &s.default_search().unwrap()),
            Err(Error::NonFiniteSample(7))
        );
    }

    #[test]
    fn common_phase_does_not_move_the_estimate() {
        let s = scenario(15, 3.0, 0.4, -0.03, 0.1, 15.0);
        let search = s.default_search().unwrap();
        let cube = s.noise_free_cube().unwrap().add_noise(11);
        let a = ml_estimate(&cube, s.target.distance, s.target.angle, &search).unwrap();
        let rotated = cube.scaled(Complex64::from_polar(1.0, 2.1));
        let b = ml_estimate(&rotated, s.target.distance, s.target.angle, &search).unwrap();
        assert!((a.radial.unwrap() - b.radial.unwrap()).abs() < 1e-12);
        assert!((a.transverse.unwrap() - b.transverse.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn monte_carlo_needs_enough_trials() {
        let s = scenario(5, 5.0, 0.0, 0.0, 0.0, 10.0);
        assert!(monte_carlo_mse(&s, &s.default_search().unwrap(), 10, 1).is_err());
    }
}
