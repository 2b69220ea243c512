//! Fisher information and Cramér-Rao bounds for radial and transverse
//! velocity sensing with a large linear receive array.
//!
//! A monostatic radar transmits OFDM pilots from the array center and
//! receives on `K` elements laid out along the x-axis. Because each element
//! sees the target along a slightly different line of sight, the Doppler
//! profile across the aperture carries information on the transverse
//! velocity component as well as the radial one.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: array layout, target state, per-element projection
//!   coefficients.
//! - [`waveform`]: OFDM pilot configuration, noise model, observation cube
//!   synthesis and the link-budget SNR.
//! - [`bounds`]: Fisher information (numeric and closed-form), CRLB
//!   inversion, and the boresight / far-field special cases.
//! - [`estimator`]: matched-filter ML velocity estimator and Monte Carlo
//!   efficiency harness.
//! - [`experiments`]: sweep drivers, key-value config files and CSV output
//!   used by the `elaa-velocity` binary.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod geometry;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Reference noise temperature, K.
pub const REFERENCE_TEMPERATURE: f64 = 290.0;

/// Offsets of a symmetric index grid `{-(L-1)/2, ..., (L-1)/2}` in unit steps.
///
/// For even `len` the offsets are half-integers. The grid always sums to zero
/// and its second moment is `len * (len^2 - 1) / 12`.
pub fn symmetric_offsets(len: usize) -> impl ExactSizeIterator<Item = f64> + Clone {
    let center = (len as f64 - 1.0) / 2.0;
    (0..len).map(move |i| i as f64 - center)
}
