//! Fisher information and Cramér-Rao bounds for `(v_r, v_t)`.
//!
//! Two independent routes produce the 2x2 FIM:
//!
//! - [`fim_numeric`] sums `2/sigma^2 Re{ conj(dy/da) dy/db }` over every cell
//!   of a synthesized cube, with derivatives taken from Cartesian
//!   line-of-sight vectors.
//! - [`fim_closed_form`] uses the reduced sums `sum_n I_n sum_k (...)` with the
//!   scalar projection coefficients `q_k`, `p_k`.
//!
//! The boresight and far-field helpers below use `f_n = f_c`; the two FIM
//! routes use the exact subcarrier frequencies.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{line_of_sight, projections, ArrayGeometry, TargetState};
use crate::waveform::{synthesize_noise_free, ChannelNoise, SlowTime, WaveformConfig};
use crate::{symmetric_offsets, SPEED_OF_LIGHT};

/// Relative determinant floor below which the FIM is treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Tolerance on negative determinant / diagonal before the FIM is rejected.
const PSD_SLACK: f64 = 1e-9;

/// Symmetric 2x2 information matrix over `(v_r, v_t)`, in `(m/s)^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo {
    pub j_rr: f64,
    pub j_tt: f64,
    pub j_rt: f64,
}

impl FisherInfo {
    pub fn det(&self) -> f64 {
        self.j_rr * self.j_tt - self.j_rt * self.j_rt
    }

    /// PSD up to the float slack `det >= -1e-9 max(J_rr J_tt, 1)`.
    pub fn is_psd(&self) -> bool {
        let scale = (self.j_rr * self.j_tt).max(1.0);
        self.j_rr >= 0.0 && self.j_tt >= 0.0 && self.det() >= -PSD_SLACK * scale
    }

    /// `J_rt^2 / (J_rr J_tt)`, zero when either diagonal vanishes.
    pub fn correlation_squared(&self) -> f64 {
        let denom = self.j_rr * self.j_tt;
        if denom > 0.0 {
            self.j_rt * self.j_rt / denom
        } else {
            0.0
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            j_rr: self.j_rr * factor,
            j_tt: self.j_tt * factor,
            j_rt: self.j_rt * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    /// Bound on the radial velocity MSE, `(m/s)^2`; `+inf` when unidentifiable.
    pub crlb_vr: f64,
    /// Bound on the transverse velocity MSE, `(m/s)^2`; `+inf` when unidentifiable.
    pub crlb_vt: f64,
    pub singular: bool,
}

impl CrlbResult {
    pub fn root_vr(&self) -> f64 {
        self.crlb_vr.sqrt()
    }

    pub fn root_vt(&self) -> f64 {
        self.crlb_vt.sqrt()
    }
}

/// Second moment of the symmetric slow-time grid, `sum_m m^2`, by direct
/// summation.
pub fn slow_time_moment(num_symbols: usize) -> f64 {
    symmetric_offsets(num_symbols).map(|m| m * m).sum()
}

/// FIM by direct triple summation over the noise-free cube.
///
/// `dy/dv_r = y * j 2 pi (f_n/c) (1 + u_r . e_k) m T_sym` and
/// `dy/dv_t = y * j 2 pi (f_n/c) (u_t . e_k) m T_sym`, with the dot products
/// evaluated on Cartesian vectors in compensated arithmetic. Unit gain and `sigma^2 = P / snr`.
pub fn fim_numeric(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    snr: f64,
) -> Result<FisherInfo> {
    let noise = ChannelNoise::from_snr(config, snr)?;
    let cube = synthesize_noise_free(target, geom, config, &noise)?;
    let (mm, nn, kk) = cube.dims();

    let ur = target.radial_unit();
    let ut = target.transverse_unit();
    let mut radial_dot = Vec::with_capacity(kk);
    let mut transverse_dot = Vec::with_capacity(kk);
    for k in 0..kk {
        // rejects a target sitting on the element
        line_of_sight(target, geom, k)?;
        let offset = CompensatedOffset::new(target, geom.element_positions()[k]);
        let norm = offset.norm();
        radial_dot.push(offset.dot(ur) / norm);
        transverse_dot.push(offset.dot(ut) / norm);
    }

    let tsym = config.symbol_time();
    let (mut s_rr, mut s_tt, mut s_rt) = (0.0, 0.0, 0.0);
    for (mi, m) in symmetric_offsets(mm).enumerate() {
        for n in 0..nn {
            let w = 2.0 * PI * config.subcarrier_frequency(n) / SPEED_OF_LIGHT * m * tsym;
            for k in 0..kk {
                let y = cube.get(mi, n, k);
                let jy = Complex64::new(0.0, 1.0) * y;
                let dr = jy * (w * (1.0 + radial_dot[k]));
                let dt = jy * (w * transverse_dot[k]);
                s_rr += (dr.conj() * dr).re;
                s_tt += (dt.conj() * dt).re;
                s_rt += (dr.conj() * dt).re;
            }
        }
    }
    let scale = 2.0 / noise.noise_variance;
    Ok(FisherInfo {
        j_rr: scale * s_rr,
        j_tt: scale * s_tt,
        j_rt: scale * s_rt,
    })
}

/// `a * b` as an unevaluated sum `hi + lo`, exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `a + b` as an unevaluated sum `hi + lo`, exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Element-minus-target offset carried in double-double precision.
///
/// Near broadside of an element (`|p_k|` tiny) the transverse dot product
/// `u_t . (x_k - p)` cancels two terms of size `d sin(theta) cos(theta)`;
/// keeping the rounding residues of the Cartesian target coordinates makes
/// that cancellation exact, so the projection keeps full relative accuracy.
struct CompensatedOffset {
    x: (f64, f64),
    y: (f64, f64),
}

impl CompensatedOffset {
    fn new(target: &TargetState, element: f64) -> Self {
        let (s, c) = target.sin_cos();
        let (px, px_lo) = two_prod(target.distance, s);
        let (py, py_lo) = two_prod(target.distance, c);
        let (x, x_lo) = two_sum(element, -px);
        Self {
            x: (x, x_lo - px_lo),
            y: (-py, -py_lo),
        }
    }

    fn norm(&self) -> f64 {
        (self.x.0 + self.x.1).hypot(self.y.0 + self.y.1)
    }

    fn dot(&self, u: [f64; 2]) -> f64 {
        let (a, a_lo) = two_prod(u[0], self.x.0);
        let (b, b_lo) = two_prod(u[1], self.y.0);
        let (sum, sum_lo) = two_sum(a, b);
        sum + (sum_lo + a_lo + b_lo + u[0] * self.x.1 + u[1] * self.y.1)
    }
}

/// Per-subcarrier information `I_n = 2 pi^2 f_n^2 M SNR (M^2-1) T_sym^2 / (3 c^2)`.
pub fn subcarrier_information(frequency: f64, config: &WaveformConfig, snr: f64) -> f64 {
    let m = config.num_symbols() as f64;
    2.0 * PI * PI * frequency * frequency * m * snr * (m * m - 1.0) * config.symbol_time().powi(2)
        / (3.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// FIM from the reduced sums over `q_k` and `p_k`.
pub fn fim_closed_form(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    snr: f64,
) -> Result<FisherInfo> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::invalid("snr", format!("must be positive, got {snr}")));
    }
    let info: f64 = config
        .subcarrier_frequencies()
        .into_iter()
        .map(|f| subcarrier_information(f, config, snr))
        .sum();
    let (mut a_rr, mut a_tt, mut a_rt) = (0.0, 0.0, 0.0);
    for pr in projections(target, geom)? {
        let r = 1.0 + pr.radial;
        a_rr += r * r;
        a_tt += pr.transverse * pr.transverse;
        a_rt += pr.transverse * r;
    }
    Ok(FisherInfo {
        j_rr: info * a_rr,
        j_tt: info * a_tt,
        j_rt: info * a_rt,
    })
}

/// Inverts the 2x2 FIM.
///
/// Singular when `det < 1e-12 max(J_rr J_tt, f64::MIN_POSITIVE)`. A singular
/// matrix with one diagonal entry negligible against the other keeps the
/// finite bound of the identifiable component; otherwise both are infinite.
pub fn crlb_from_fim(fim: &FisherInfo) -> Result<CrlbResult> {
    let det = fim.det();
    let all_finite = fim.j_rr.is_finite() && fim.j_tt.is_finite() && fim.j_rt.is_finite();
    if !all_finite || !fim.is_psd() {
        return Err(Error::NotPositiveSemidefinite {
            j_rr: fim.j_rr,
            j_tt: fim.j_tt,
            det,
        });
    }
    let floor = SINGULAR_THRESHOLD * (fim.j_rr * fim.j_tt).max(f64::MIN_POSITIVE);
    if det >= floor {
        return Ok(CrlbResult {
            crlb_vr: fim.j_tt / det,
            crlb_vt: fim.j_rr / det,
            singular: false,
        });
    }
    let (crlb_vr, crlb_vt) = if fim.j_rr > 0.0 && fim.j_tt <= SINGULAR_THRESHOLD * fim.j_rr {
        (1.0 / fim.j_rr, f64::INFINITY)
    } else if fim.j_tt > 0.0 && fim.j_rr <= SINGULAR_THRESHOLD * fim.j_tt {
        (f64::INFINITY, 1.0 / fim.j_tt)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(CrlbResult {
        crlb_vr,
        crlb_vt,
        singular: true,
    })
}

/// Closed-form FIM and its inverse in one call.
pub fn crlb(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    snr: f64,
) -> Result<(FisherInfo, CrlbResult)> {
    let fim = fim_closed_form(target, geom, config, snr)?;
    Ok((fim, crlb_from_fim(&fim)?))
}

/// Conventional far-field radial bound
/// `3 c^2 / (8 pi^2 f_c^2 M N K SNR (M^2-1) T_sym^2)`.
pub fn crlb_vr_far_field(config: &WaveformConfig, num_elements: usize, snr: f64) -> f64 {
    let m = config.num_symbols() as f64;
    let n = config.num_subcarriers() as f64;
    let k = num_elements as f64;
    3.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT
        / (8.0 * PI * PI * config.carrier().powi(2) * m * n * k * snr * (m * m - 1.0)
            * config.symbol_time().powi(2))
}

/// Common factor `2 pi^2 f_c^2 M N SNR (M^2-1) T_sym^2 / (3 c^2)` of the
/// boresight expressions.
pub fn boresight_prefactor(config: &WaveformConfig, snr: f64) -> f64 {
    config.num_subcarriers() as f64 * subcarrier_information(config.carrier(), config, snr)
}

/// Radial information at boresight:
/// prefactor `* sum_k (1 + 1/sqrt(1 + k^2 delta^2/d^2))^2`.
pub fn j_rr_boresight(distance: f64, geom: &ArrayGeometry, config: &WaveformConfig, snr: f64) -> f64 {
    let sum: f64 = geom
        .element_positions()
        .iter()
        .map(|x| {
            let r = x / distance;
            let t = 1.0 + 1.0 / (1.0 + r * r).sqrt();
            t * t
        })
        .sum();
    boresight_prefactor(config, snr) * sum
}

/// Transverse information at boresight:
/// prefactor `* delta^2/d^2 * sum_k k^2 / (1 + k^2 delta^2/d^2)`.
pub fn j_tt_boresight_exact(distance: f64, geom: &ArrayGeometry, config: &WaveformConfig, snr: f64) -> f64 {
    let delta = geom.spacing();
    let u = (delta / distance).powi(2);
    let sum: f64 = (0..geom.num_elements())
        .map(|i| {
            let k = geom.element_offset(i);
            k * k / (1.0 + k * k * u)
        })
        .sum();
    boresight_prefactor(config, snr) * u * sum
}

/// Small-aperture approximation of the boresight transverse information:
/// `pi^2 f_c^2 M N K SNR (M^2-1) T_sym^2 (K^2-1) delta^2 / (18 c^2 d^2)`.
pub fn j_tt_boresight_approx(distance: f64, geom: &ArrayGeometry, config: &WaveformConfig, snr: f64) -> f64 {
    let m = config.num_symbols() as f64;
    let n = config.num_subcarriers() as f64;
    let k = geom.num_elements() as f64;
    PI * PI * config.carrier().powi(2) * m * n * k * snr * (m * m - 1.0)
        * config.symbol_time().powi(2)
        * (k * k - 1.0)
        * geom.spacing().powi(2)
        / (18.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT * distance * distance)
}

/// Aperture form of [`j_tt_boresight_approx`]:
/// `pi^2 f_c^2 M N K SNR T_obs^2 D^2 / (18 c^2 d^2)` with the squared signal
/// duration taken as `T_obs^2 = (M^2-1) T_sym^2`.
///
/// Differs from the first form by exactly `(K-1)/(K+1)`.
pub fn j_tt_boresight_aperture_form(
    distance: f64,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    snr: f64,
) -> f64 {
    let m = config.num_symbols() as f64;
    let n = config.num_subcarriers() as f64;
    let k = geom.num_elements() as f64;
    let t_obs_sq = (m * m - 1.0) * config.symbol_time().powi(2);
    PI * PI * config.carrier().powi(2) * m * n * k * snr * t_obs_sq * geom.aperture().powi(2)
        / (18.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT * distance * distance)
}

/// Boresight transverse information for a half-wavelength array,
/// `pi^2 M N K SNR (M^2-1) T_sym^2 (K^2-1) / (72 d^2)`. Carrier-free.
pub fn j_tt_halfwavelength(distance: f64, num_elements: usize, slow: &SlowTime, snr: f64) -> f64 {
    let m = slow.num_symbols as f64;
    let n = slow.num_subcarriers as f64;
    let k = num_elements as f64;
    PI * PI * m * n * k * snr * (m * m - 1.0) * slow.symbol_time.powi(2) * (k * k - 1.0)
        / (72.0 * distance * distance)
}

/// Distance `D / (4 sqrt 3)` at which the far-field radial bound equals the
/// inverse aperture-form transverse information at boresight.
pub fn crossover_distance(geom: &ArrayGeometry) -> f64 {
    geom.aperture() / (4.0 * 3f64.sqrt())
}
