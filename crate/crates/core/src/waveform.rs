//! OFDM pilot model and synthesis of the received observation cube.
//!
//! After CP removal and FFT, cell `(m, n, k)` holds
//!
//! ```text
//! r[m,n,k] = sqrt(P) * beta * exp(-j 2 pi f_n tau_k) * exp(j 2 pi nu[n,k] m T_sym) + z[m,n,k]
//! ```
//!
//! with pilots `u = 1`, `f_n = f_c + n df`, round-trip delay
//! `tau_k = (d + d_k) / c` and Doppler `nu[n,k] = f_n / c * (v_r + q_k v_r + p_k v_t)`.
//! Symbol and subcarrier indices both run over symmetric grids.

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{
    distance_to_element, radial_projection_coeff, transverse_projection_coeff, ArrayGeometry,
    TargetState,
};
use crate::{symmetric_offsets, BOLTZMANN, SPEED_OF_LIGHT};

/// Bandwidth-to-carrier ratio above which the narrowband model is flagged.
const NARROWBAND_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    carrier: f64,
    num_subcarriers: usize,
    subcarrier_spacing: f64,
    num_symbols: usize,
    symbol_time: f64,
    tx_power: f64,
}

impl WaveformConfig {
    /// `symbol_time` is the full symbol duration including the cyclic prefix,
    /// so it must be at least `1 / subcarrier_spacing`.
    pub fn new(
        carrier: f64,
        num_subcarriers: usize,
        subcarrier_spacing: f64,
        num_symbols: usize,
        symbol_time: f64,
        tx_power: f64,
    ) -> Result<Self> {
        positive("carrier", carrier)?;
        positive("subcarrier_spacing", subcarrier_spacing)?;
        positive("symbol_time", symbol_time)?;
        positive("tx_power", tx_power)?;
        if num_subcarriers == 0 {
            return Err(Error::invalid("num_subcarriers", "must be at least 1"));
        }
        if num_symbols == 0 {
            return Err(Error::invalid("num_symbols", "must be at least 1"));
        }
        let useful = 1.0 / subcarrier_spacing;
        if symbol_time < useful * (1.0 - 1e-12) {
            return Err(Error::invalid(
                "symbol_time",
                format!("{symbol_time} s is shorter than the useful symbol 1/df = {useful} s (negative cyclic prefix)"),
            ));
        }
        let config = Self {
            carrier,
            num_subcarriers,
            subcarrier_spacing,
            num_symbols,
            symbol_time,
            tx_power,
        };
        if !config.is_narrowband() {
            warn!(
                "bandwidth {} Hz exceeds {} of the carrier {} Hz; equal-gain narrowband model is questionable",
                config.bandwidth(),
                NARROWBAND_LIMIT,
                carrier
            );
        }
        Ok(config)
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn symbol_time(&self) -> f64 {
        self.symbol_time
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    /// `T_cp = T_sym - 1/df`, never negative.
    pub fn cyclic_prefix(&self) -> f64 {
        (self.symbol_time - 1.0 / self.subcarrier_spacing).max(0.0)
    }

    /// Per-subcarrier power `P = P_tx / N`.
    pub fn subcarrier_power(&self) -> f64 {
        self.tx_power / self.num_subcarriers as f64
    }

    /// `B = N df`.
    pub fn bandwidth(&self) -> f64 {
        self.num_subcarriers as f64 * self.subcarrier_spacing
    }

    pub fn is_narrowband(&self) -> bool {
        self.bandwidth() <= NARROWBAND_LIMIT * self.carrier
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Packet duration `T_obs = M T_sym`.
    pub fn observation_time(&self) -> f64 {
        self.num_symbols as f64 * self.symbol_time
    }

    /// `f_n = f_c + n df` for subcarrier `index` in `0..N` (offset `n` on the
    /// symmetric grid).
    pub fn subcarrier_frequency(&self, index: usize) -> f64 {
        let offset = index as f64 - (self.num_subcarriers as f64 - 1.0) / 2.0;
        self.carrier + offset * self.subcarrier_spacing
    }

    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        (0..self.num_subcarriers)
            .map(|n| self.subcarrier_frequency(n))
            .collect()
    }

    /// Slow-time symbol offsets `m` on the symmetric grid.
    pub fn symbol_offsets(&self) -> Vec<f64> {
        symmetric_offsets(self.num_symbols).collect()
    }

    /// Same waveform at a different carrier.
    pub fn with_carrier(&self, carrier: f64) -> Result<Self> {
        Self::new(
            carrier,
            self.num_subcarriers,
            self.subcarrier_spacing,
            self.num_symbols,
            self.symbol_time,
            self.tx_power,
        )
    }

    pub fn slow_time(&self) -> SlowTime {
        SlowTime {
            num_symbols: self.num_symbols,
            num_subcarriers: self.num_subcarriers,
            symbol_time: self.symbol_time,
        }
    }
}

/// Carrier-free part of the waveform: what the half-wavelength transverse
/// bound depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowTime {
    pub num_symbols: usize,
    pub num_subcarriers: usize,
    pub symbol_time: f64,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and positive, got {value}")))
    }
}

/// Channel gain and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelNoise {
    pub gain: f64,
    pub noise_variance: f64,
}

impl ChannelNoise {
    pub fn new(gain: f64, noise_variance: f64) -> Result<Self> {
        positive("gain", gain)?;
        positive("noise_variance", noise_variance)?;
        Ok(Self {
            gain,
            noise_variance,
        })
    }

    /// Unit gain with `sigma^2 = P / snr`.
    pub fn from_snr(config: &WaveformConfig, snr: f64) -> Result<Self> {
        positive("snr", snr)?;
        Self::new(1.0, config.subcarrier_power() / snr)
    }

    /// Thermal noise `sigma^2 = k_B T_0 F df` with linear noise figure `F`.
    pub fn from_noise_figure(
        gain: f64,
        config: &WaveformConfig,
        noise_figure: f64,
        temperature: f64,
    ) -> Result<Self> {
        positive("noise_figure", noise_figure)?;
        positive("temperature", temperature)?;
        Self::new(
            gain,
            BOLTZMANN * temperature * noise_figure * config.subcarrier_spacing(),
        )
    }

    /// `SNR = P beta^2 / sigma^2`.
    pub fn snr(&self, config: &WaveformConfig) -> f64 {
        config.subcarrier_power() * self.gain * self.gain / self.noise_variance
    }
}

/// Complex samples on the `M x N x K` grid, stored symbol-major:
/// flat index `(m * N + n) * K + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationCube {
    samples: Vec<Complex64>,
    config: WaveformConfig,
    geometry: ArrayGeometry,
    noise: ChannelNoise,
}

impl ObservationCube {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn config(&self) -> &WaveformConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn noise(&self) -> &ChannelNoise {
        &self.noise
    }

    /// `(M, N, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.config.num_symbols(),
            self.config.num_subcarriers(),
            self.geometry.num_elements(),
        )
    }

    pub fn index(&self, m: usize, n: usize, k: usize) -> usize {
        let (_, nn, kk) = self.dims();
        (m * nn + n) * kk + k
    }

    pub fn get(&self, m: usize, n: usize, k: usize) -> Complex64 {
        self.samples[self.index(m, n, k)]
    }

    /// Adds circularly-symmetric complex Gaussian noise of total variance
    /// `sigma^2` to every cell. Deterministic in `seed`.
    pub fn add_noise(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (self.noise.noise_variance / 2.0).sqrt();
        for s in &mut self.samples {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(re * scale, im * scale);
        }
        self
    }

    /// Multiplies every sample by a common complex factor.
    pub fn scaled(mut self, factor: Complex64) -> Self {
        for s in &mut self.samples {
            *s *= factor;
        }
        self
    }
}

/// `nu[n,k] = f_n / c * (v_r + q_k v_r + p_k v_t)` for subcarrier index `n`
/// and element index `k`.
pub fn doppler_shift(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    n: usize,
    k: usize,
) -> Result<f64> {
    let q = radial_projection_coeff(target, geom, k)?;
    let p = transverse_projection_coeff(target, geom, k)?;
    let fnn = config.subcarrier_frequency(n);
    Ok(fnn / SPEED_OF_LIGHT
        * (target.radial_velocity + q * target.radial_velocity + p * target.transverse_velocity))
}

/// Round-trip delay `tau_k = (d + d_k) / c`.
pub fn round_trip_delay(target: &TargetState, geom: &ArrayGeometry, k: usize) -> Result<f64> {
    Ok((target.distance + distance_to_element(target, geom, k)?) / SPEED_OF_LIGHT)
}

/// Noise-free cube `y[m,n,k]` for unit pilots.
pub fn synthesize_noise_free(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    noise: &ChannelNoise,
) -> Result<ObservationCube> {
    let (mm, nn, kk) = (
        config.num_symbols(),
        config.num_subcarriers(),
        geom.num_elements(),
    );
    let amplitude = config.subcarrier_power().sqrt() * noise.gain;
    let tsym = config.symbol_time();

    // per-(n, k) delay phase and Doppler
    let mut delay_phase = Vec::with_capacity(nn * kk);
    let mut doppler = Vec::with_capacity(nn * kk);
    for n in 0..nn {
        let fnn = config.subcarrier_frequency(n);
        for k in 0..kk {
            let tau = round_trip_delay(target, geom, k)?;
            // reduce f_n * tau modulo one cycle before scaling by 2 pi
            delay_phase.push(-std::f64::consts::TAU * (fnn * tau).fract());
            doppler.push(doppler_shift(target, geom, config, n, k)?);
        }
    }

    let mut samples = Vec::with_capacity(mm * nn * kk);
    for m in symmetric_offsets(mm) {
        for (phase, nu) in delay_phase.iter().zip(&doppler) {
            let slow = std::f64::consts::TAU * nu * m * tsym;
            samples.push(Complex64::from_polar(amplitude, phase + slow));
        }
    }
    Ok(ObservationCube {
        samples,
        config: config.clone(),
        geometry: geom.clone(),
        noise: *noise,
    })
}

/// Radar-equation terms other than range and waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Radar cross section, m^2.
    pub rcs: f64,
    /// Linear transmit antenna gain.
    pub tx_gain: f64,
    /// Linear receive element gain.
    pub rx_gain: f64,
    /// Linear receiver noise figure.
    pub noise_figure: f64,
    /// Noise reference temperature, K.
    pub temperature: f64,
}

impl Default for LinkBudget {
    /// 1 m^2 target, 0 dBi antennas, 9 dB noise figure at 290 K.
    fn default() -> Self {
        Self {
            rcs: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            noise_figure: crate::units::db_to_linear(9.0),
            temperature: crate::REFERENCE_TEMPERATURE,
        }
    }
}

/// Per-subcarrier monostatic SNR at range `distance`:
///
/// ```text
/// SNR(d) = (P_tx / N) G_t G_r lambda^2 rcs / ((4 pi)^3 d^4 k_B T_0 F df)
/// ```
pub fn snr_from_link_budget(distance: f64, config: &WaveformConfig, budget: &LinkBudget) -> Result<f64> {
    positive("distance", distance)?;
    positive("rcs", budget.rcs)?;
    positive("tx_gain", budget.tx_gain)?;
    positive("rx_gain", budget.rx_gain)?;
    let noise = ChannelNoise::from_noise_figure(1.0, config, budget.noise_figure, budget.temperature)?;
    let lambda = config.wavelength();
    let four_pi_cubed = (4.0 * std::f64::consts::PI).powi(3);
    Ok(config.subcarrier_power() * budget.tx_gain * budget.rx_gain * lambda * lambda * budget.rcs
        / (four_pi_cubed * distance.powi(4) * noise.noise_variance))
}
