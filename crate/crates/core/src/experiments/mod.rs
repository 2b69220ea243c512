//! Sweep drivers behind the `elaa-velocity` command-line tool.
//!
//! Each driver takes resolved [`Settings`] and returns a [`Table`] whose
//! rows are ordered by sweep index, independent of how many threads
//! evaluated them.

pub mod config;
pub mod figures;
pub mod table;

pub use config::{ConfigError, Scale, Settings, SnrModel, Spacing, SweepVariable};
pub use figures::{run_crlb, run_fig1, run_fig2, run_fig3, run_fig4, run_montecarlo, run_sweep};
pub use table::{Cell, Table};

/// `points` samples from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + i as f64 * step })
        .collect()
}

/// `points` log-spaced samples from `lo` to `hi` inclusive; both positive.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), points)
        .into_iter()
        .enumerate()
        .map(|(i, x)| match i {
            0 => lo,
            _ if i + 1 == points => hi,
            _ => x.exp(),
        })
        .collect()
}

pub fn spaced(lo: f64, hi: f64, points: usize, scale: Scale) -> Vec<f64> {
    match scale {
        Scale::Linear => linspace(lo, hi, points),
        Scale::Log => logspace(lo, hi, points),
    }
}
