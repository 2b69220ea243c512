//! Plain-text `key = value` configuration with unit suffixes.
//!
//! One assignment per line; `#` starts a comment. Values are stored in SI
//! units. Accepted suffixes (case-insensitive):
//!
//! | kind        | suffixes                        | bare number    |
//! |-------------|---------------------------------|----------------|
//! | frequency   | `Hz`, `kHz`, `MHz`, `GHz`       | Hz             |
//! | time        | `s`, `ms`, `us`, `ns`           | s              |
//! | length      | `m`, `cm`, `mm`                 | m              |
//! | angle       | `deg`                           | degrees        |
//! | power       | `W`, `mW`, `dBm`, `dBW`         | W              |
//! | ratio       | `dB`, `dBi`                     | linear         |
//!
//! `dBm` converts as `10^(x/10) / 1000` W; `dB`/`dBi` as `10^(x/10)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{ArrayGeometry, TargetState};
use crate::units::{db_to_linear, dbm_to_watts};
use crate::waveform::{LinkBudget, WaveformConfig};
use crate::REFERENCE_TEMPERATURE;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}` as {kind}")]
    BadValue {
        key: String,
        value: String,
        kind: &'static str,
    },
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    HalfWavelength,
    Meters(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Distance,
    Angle,
    Carrier,
    Aperture,
    Grid,
}

/// How the per-cell SNR is obtained in grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrModel {
    Fixed,
    LinkBudget,
}

/// Fully resolved experiment settings, SI units and radians internally.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub carrier: f64,
    pub elements: usize,
    pub spacing: Spacing,
    pub subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub symbols: usize,
    pub symbol_time: f64,
    pub tx_power: f64,
    pub snr: f64,
    pub distance: f64,
    pub angle: f64,
    pub radial_velocity: f64,
    pub transverse_velocity: f64,

    pub noise_figure: f64,
    pub rcs: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub temperature: f64,

    pub d_min: f64,
    pub d_max: f64,
    pub points: usize,
    pub apertures: Vec<f64>,
    pub angles: Vec<f64>,
    pub carriers: Vec<f64>,

    pub sweep: SweepVariable,
    /// Sweep endpoints in the swept variable's unit, resolved by [`Settings::sweep_range`].
    pub sweep_min: Option<String>,
    pub sweep_max: Option<String>,
    pub sweep_scale: Option<Scale>,
    pub snr_model: SnrModel,

    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,

    pub trials: usize,
    pub snr_list: Vec<f64>,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            carrier: 28e9,
            elements: 101,
            spacing: Spacing::HalfWavelength,
            subcarriers: 1,
            subcarrier_spacing: 120e3,
            symbols: 14,
            symbol_time: 16.6e-3,
            tx_power: dbm_to_watts(23.0),
            snr: 1.0,
            distance: 10.0,
            angle: 0.0,
            radial_velocity: 0.05,
            transverse_velocity: 0.03,

            noise_figure: db_to_linear(9.0),
            rcs: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            temperature: REFERENCE_TEMPERATURE,

            d_min: 0.01,
            d_max: 500.0,
            points: 200,
            apertures: vec![0.5, 1.0, 2.0],
            angles: vec![0.0, 45f64.to_radians()],
            carriers: vec![6e9, 28e9],

            sweep: SweepVariable::Distance,
            sweep_min: None,
            sweep_max: None,
            sweep_scale: None,
            snr_model: SnrModel::Fixed,

            x_min: -25.0,
            x_max: 25.0,
            nx: 201,
            y_min: 0.5,
            y_max: 50.0,
            ny: 101,

            trials: 1000,
            snr_list: vec![-20.0, -10.0, 0.0, 10.0, 20.0, 30.0].into_iter().map(db_to_linear).collect(),
            seed: 1,
        }
    }
}

fn split_number(text: &str) -> (&str, &str) {
    let t = text.trim();
    let end = t
        .char_indices()
        .find(|&(i, ch)| {
            !(ch.is_ascii_digit()
                || ch == '.'
                || ch == '+'
                || ch == '-'
                || ((ch == 'e' || ch == 'E')
                    && t[i + 1..].starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    (t[..end].trim(), t[end..].trim())
}

fn number_with_unit(text: &str, units: &[(&str, &dyn Fn(f64) -> f64)]) -> Option<f64> {
    let (num, unit) = split_number(text);
    let x: f64 = num.parse().ok()?;
    if !x.is_finite() {
        return None;
    }
    units
        .iter()
        .find(|(u, _)| u.eq_ignore_ascii_case(unit))
        .map(|(_, f)| f(x))
}

type ValueParser = fn(&str) -> Option<f64>;

pub fn parse_frequency(text: &str) -> Option<f64> {
    number_with_unit(
        text,
        &[
            ("", &|x| x),
            ("Hz", &|x| x),
            ("kHz", &|x| x * 1e3),
            ("MHz", &|x| x * 1e6),
            ("GHz", &|x| x * 1e9),
        ],
    )
}

pub fn parse_time(text: &str) -> Option<f64> {
    number_with_unit(
        text,
        &[
            ("", &|x| x),
            ("s", &|x| x),
            ("ms", &|x| x * 1e-3),
            ("us", &|x| x * 1e-6),
            ("ns", &|x| x * 1e-9),
        ],
    )
}

pub fn parse_length(text: &str) -> Option<f64> {
    number_with_unit(
        text,
        &[("", &|x| x), ("m", &|x| x), ("cm", &|x| x * 1e-2), ("mm", &|x| x * 1e-3)],
    )
}

/// Degrees in, radians out.
pub fn parse_angle(text: &str) -> Option<f64> {
    number_with_unit(text, &[("", &|x| x), ("deg", &|x| x)]).map(f64::to_radians)
}

pub fn parse_power(text: &str) -> Option<f64> {
    number_with_unit(
        text,
        &[
            ("", &|x| x),
            ("W", &|x| x),
            ("mW", &|x| x * 1e-3),
            ("dBm", &dbm_to_watts),
            ("dBW", &db_to_linear),
        ],
    )
}

pub fn parse_ratio(text: &str) -> Option<f64> {
    number_with_unit(
        text,
        &[("", &|x| x), ("dB", &db_to_linear), ("dBi", &db_to_linear)],
    )
}

fn list<T>(text: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    text.split(',').map(|s| item(s.trim())).collect()
}

fn bad(key: &str, value: &str, kind: &'static str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        kind,
    }
}

impl Settings {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        macro_rules! get {
            ($parser:expr, $kind:literal) => {
                $parser(v).ok_or_else(|| bad(key, v, $kind))?
            };
        }
        let count = |v: &str| v.parse::<usize>().ok();
        match key {
            "carrier" => self.carrier = get!(parse_frequency, "a frequency"),
            "elements" => self.elements = get!(count, "a count"),
            "spacing" => {
                self.spacing = match v.to_ascii_lowercase().as_str() {
                    "half-wavelength" | "half_wavelength" | "lambda/2" => Spacing::HalfWavelength,
                    _ => Spacing::Meters(get!(parse_length, "a length or `half-wavelength`")),
                }
            }
            "subcarriers" => self.subcarriers = get!(count, "a count"),
            "subcarrier_spacing" => self.subcarrier_spacing = get!(parse_frequency, "a frequency"),
            "symbols" => self.symbols = get!(count, "a count"),
            "symbol_time" => self.symbol_time = get!(parse_time, "a duration"),
            "tx_power" => self.tx_power = get!(parse_power, "a power"),
            "snr" => self.snr = get!(parse_ratio, "a ratio"),
            "distance" => self.distance = get!(parse_length, "a length"),
            "angle" => self.angle = get!(parse_angle, "an angle"),
            "v_r" => self.radial_velocity = get!(|s: &str| s.parse::<f64>().ok(), "a velocity"),
            "v_t" => self.transverse_velocity = get!(|s: &str| s.parse::<f64>().ok(), "a velocity"),
            "noise_figure" => self.noise_figure = get!(parse_ratio, "a ratio"),
            "rcs" => self.rcs = get!(|s: &str| s.parse::<f64>().ok(), "an area"),
            "tx_gain" => self.tx_gain = get!(parse_ratio, "a ratio"),
            "rx_gain" => self.rx_gain = get!(parse_ratio, "a ratio"),
            "temperature" => self.temperature = get!(|s: &str| s.parse::<f64>().ok(), "a temperature"),
            "d_min" => self.d_min = get!(parse_length, "a length"),
            "d_max" => self.d_max = get!(parse_length, "a length"),
            "points" => self.points = get!(count, "a count"),
            "apertures" => self.apertures = get!(|s| list(s, parse_length), "a list of lengths"),
            "angles" => self.angles = get!(|s| list(s, parse_angle), "a list of angles"),
            "carriers" => self.carriers = get!(|s| list(s, parse_frequency), "a list of frequencies"),
            "sweep" => {
                self.sweep = match v {
                    "distance" => SweepVariable::Distance,
                    "angle" => SweepVariable::Angle,
                    "carrier" => SweepVariable::Carrier,
                    "aperture" => SweepVariable::Aperture,
                    "grid" => SweepVariable::Grid,
                    _ => return Err(bad(key, v, "distance|angle|carrier|aperture|grid")),
                }
            }
            "sweep_min" => self.sweep_min = Some(v.to_string()),
            "sweep_max" => self.sweep_max = Some(v.to_string()),
            "sweep_scale" => {
                self.sweep_scale = match v {
                    "log" => Some(Scale::Log),
                    "linear" => Some(Scale::Linear),
                    _ => return Err(bad(key, v, "log|linear")),
                }
            }
            "snr_model" => {
                self.snr_model = match v {
                    "fixed" => SnrModel::Fixed,
                    "link_budget" => SnrModel::LinkBudget,
                    _ => return Err(bad(key, v, "fixed|link_budget")),
                }
            }
            "x_min" => self.x_min = get!(parse_length, "a length"),
            "x_max" => self.x_max = get!(parse_length, "a length"),
            "nx" => self.nx = get!(count, "a count"),
            "y_min" => self.y_min = get!(parse_length, "a length"),
            "y_max" => self.y_max = get!(parse_length, "a length"),
            "ny" => self.ny = get!(count, "a count"),
            "trials" => self.trials = get!(count, "a count"),
            "snr_list" => self.snr_list = get!(|s| list(s, parse_ratio), "a list of ratios"),
            "seed" => self.seed = get!(|s: &str| s.parse::<u64>().ok(), "an unsigned integer"),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Resolved `(min, max, scale)` of the 1D sweep, SI units and radians.
    ///
    /// Defaults: distance `[d_min, d_max]` log; angle `[-89, 89]` deg linear;
    /// carrier `[1, 100]` GHz log; aperture `[0.1, 10]` m log.
    pub fn sweep_range(&self) -> Result<(f64, f64, Scale), ConfigError> {
        let (parser, lo, hi, scale): (ValueParser, f64, f64, Scale) = match self.sweep {
            SweepVariable::Distance | SweepVariable::Grid => (parse_length, self.d_min, self.d_max, Scale::Log),
            SweepVariable::Angle => (parse_angle, (-89f64).to_radians(), 89f64.to_radians(), Scale::Linear),
            SweepVariable::Carrier => (parse_frequency, 1e9, 100e9, Scale::Log),
            SweepVariable::Aperture => (parse_length, 0.1, 10.0, Scale::Log),
        };
        let resolve = |key: &str, raw: &Option<String>, default: f64| match raw {
            Some(text) => parser(text).ok_or_else(|| bad(key, text, "a sweep endpoint")),
            None => Ok(default),
        };
        let lo = resolve("sweep_min", &self.sweep_min, lo)?;
        let hi = resolve("sweep_max", &self.sweep_max, hi)?;
        let scale = self.sweep_scale.unwrap_or(scale);
        if !(hi > lo) || (scale == Scale::Log && !(lo > 0.0)) {
            return Err(ConfigError::Invalid(format!(
                "sweep range [{lo}, {hi}] is empty or not positive for a log scale"
            )));
        }
        Ok((lo, hi, scale))
    }

    /// Applies every assignment in `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut s = Self::default();
        s.apply_text(&text)?;
        Ok(s)
    }

    pub fn waveform(&self) -> Result<WaveformConfig, ConfigError> {
        Ok(WaveformConfig::new(
            self.carrier,
            self.subcarriers,
            self.subcarrier_spacing,
            self.symbols,
            self.symbol_time,
            self.tx_power,
        )?)
    }

    /// Array at the configured carrier and spacing rule.
    pub fn geometry(&self) -> Result<ArrayGeometry, ConfigError> {
        self.geometry_at(self.carrier)
    }

    pub fn geometry_at(&self, carrier: f64) -> Result<ArrayGeometry, ConfigError> {
        Ok(match self.spacing {
            Spacing::HalfWavelength => ArrayGeometry::half_wavelength(self.elements, carrier)?,
            Spacing::Meters(d) => ArrayGeometry::new(self.elements, d)?,
        })
    }

    pub fn target(&self) -> Result<TargetState, ConfigError> {
        Ok(TargetState::new(
            self.distance,
            self.angle,
            self.radial_velocity,
            self.transverse_velocity,
        )?)
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            rcs: self.rcs,
            tx_gain: self.tx_gain,
            rx_gain: self.rx_gain,
            noise_figure: self.noise_figure,
            temperature: self.temperature,
        }
    }

    /// Cross-field checks shared by every subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.waveform()?;
        self.geometry()?;
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return invalid(format!("snr must be positive, got {}", self.snr));
        }
        if self.points < 2 {
            return invalid("points must be at least 2".into());
        }
        if !(self.d_min > 0.0 && self.d_max > self.d_min) {
            return invalid(format!("need 0 < d_min < d_max, got [{}, {}]", self.d_min, self.d_max));
        }
        if self.nx < 2 || self.ny < 2 {
            return invalid("grid needs at least 2 points per axis".into());
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min && self.y_min >= 0.0) {
            return invalid("grid extents must be increasing with y_min >= 0".into());
        }
        if self.apertures.iter().any(|&a| !(a > 0.0)) {
            return invalid("apertures must be positive".into());
        }
        if self.carriers.iter().any(|&c| !(c > 0.0)) {
            return invalid("carriers must be positive".into());
        }
        if self.snr_list.iter().any(|&s| !(s > 0.0)) {
            return invalid("snr_list entries must be positive".into());
        }
        Ok(())
    }

    /// One-line rendering of every resolved setting, in a fixed order.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let spacing = match self.spacing {
            Spacing::HalfWavelength => "half-wavelength".to_string(),
            Spacing::Meters(d) => format!("{d:?}"),
        };
        let _ = write!(
            s,
            "carrier={:?} elements={} spacing={} subcarriers={} subcarrier_spacing={:?} symbols={} \
             symbol_time={:?} tx_power={:?} snr={:?} distance={:?} angle_deg={:?} v_r={:?} v_t={:?} \
             noise_figure={:?} rcs={:?} tx_gain={:?} rx_gain={:?} temperature={:?} \
             d_min={:?} d_max={:?} points={} apertures={} angles_deg={} carriers={} \
             sweep={:?} sweep_min={} sweep_max={} sweep_scale={:?} snr_model={:?} \
             x_min={:?} x_max={:?} nx={} y_min={:?} y_max={:?} ny={} trials={} snr_list={} seed={}",
            self.carrier,
            self.elements,
            spacing,
            self.subcarriers,
            self.subcarrier_spacing,
            self.symbols,
            self.symbol_time,
            self.tx_power,
            self.snr,
            self.distance,
            self.angle.to_degrees(),
            self.radial_velocity,
            self.transverse_velocity,
            self.noise_figure,
            self.rcs,
            self.tx_gain,
            self.rx_gain,
            self.temperature,
            self.d_min,
            self.d_max,
            self.points,
            join(&self.apertures),
            join(&self.angles.iter().map(|a| a.to_degrees()).collect::<Vec<_>>()),
            join(&self.carriers),
            self.sweep,
            self.sweep_min.as_deref().unwrap_or("default"),
            self.sweep_max.as_deref().unwrap_or("default"),
            self.sweep_scale,
            self.snr_model,
            self.x_min,
            self.x_max,
            self.nx,
            self.y_min,
            self.y_max,
            self.ny,
            self.trials,
            join(&self.snr_list),
            self.seed,
        );
        s
    }
}
