use rayon::prelude::*;

use super::config::{ConfigError, Settings, SnrModel, SweepVariable};
use super::table::{Cell, Table};
use super::{linspace, logspace, spaced};
use crate::bounds::{
    boresight_prefactor, crlb, crlb_vr_far_field, crossover_distance, j_rr_boresight, j_tt_boresight_approx,
    j_tt_halfwavelength, CrlbResult, FisherInfo,
};
use crate::estimator::{monte_carlo_mse, Scenario};
use crate::geometry::{ArrayGeometry, TargetState};
use crate::units::linear_to_db;
use crate::waveform::{snr_from_link_budget, WaveformConfig};

fn comment(command: &str, settings: &Settings) -> String {
    format!("elaa-velocity {command}: {}", settings.summary())
}

fn inv_sqrt(x: f64) -> f64 {
    if x > 0.0 {
        (1.0 / x).sqrt()
    } else {
        f64::INFINITY
    }
}

fn bounds_at(
    target: &TargetState,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    snr: f64,
) -> Result<Bounds, ConfigError> {
    match crlb(target, geom, config, snr) {
        Ok(b) => Ok(Some(b)),
        Err(crate::Error::DegenerateGeometry { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Bounds at a point; `None` when the geometry is degenerate.
type Bounds = Option<(FisherInfo, CrlbResult)>;

fn status(b: &Bounds) -> Cell {
    match b {
        None => "degenerate".into(),
        Some((_, r)) if r.singular => "singular".into(),
        Some(_) => "ok".into(),
    }
}

fn distances(settings: &Settings) -> Vec<f64> {
    logspace(settings.d_min, settings.d_max, settings.points)
}

/// Radial root-CRLB against distance at boresight for each configured
/// aperture (fixed element count).
///
/// Columns: `d, D_elaa, root_crlb_vr_exact, root_jrr_inv_approx,
/// root_crlb_far_field`. The approximation column is the boresight radial
/// information; the configured angle is not used.
pub fn run_fig1(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let config = settings.waveform()?;
    let far = crlb_vr_far_field(&config, settings.elements, settings.snr).sqrt();
    let mut table = Table::new(
        comment("fig1", settings),
        vec!["d", "D_elaa", "root_crlb_vr_exact", "root_jrr_inv_approx", "root_crlb_far_field"],
    );
    for &aperture in &settings.apertures {
        let geom = ArrayGeometry::with_aperture(settings.elements, aperture)?;
        let rows = distances(settings)
            .into_par_iter()
            .map(|d| -> Result<Vec<Cell>, ConfigError> {
                let t = TargetState::at(d, 0.0)?;
                let (_, r) = crlb(&t, &geom, &config, settings.snr)?;
                Ok(vec![
                    d.into(),
                    geom.aperture().into(),
                    r.root_vr().into(),
                    inv_sqrt(j_rr_boresight(d, &geom, &config, settings.snr)).into(),
                    far.into(),
                ])
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.rows.extend(rows);
    }
    Ok(table)
}

/// Transverse root-CRLB against distance for each aperture and angle.
///
/// Columns: `d, D_elaa, theta_deg, root_crlb_vt_exact, root_jtt_inv`.
pub fn run_fig2(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let config = settings.waveform()?;
    let mut table = Table::new(
        comment("fig2", settings),
        vec!["d", "D_elaa", "theta_deg", "root_crlb_vt_exact", "root_jtt_inv"],
    );
    for &aperture in &settings.apertures {
        let geom = ArrayGeometry::with_aperture(settings.elements, aperture)?;
        for &angle in &settings.angles {
            let rows = distances(settings)
                .into_par_iter()
                .map(|d| -> Result<Vec<Cell>, ConfigError> {
                    let t = TargetState::at(d, angle)?;
                    let b = bounds_at(&t, &geom, &config, settings.snr)?;
                    let (root_vt, root_jtt) = match b {
                        Some((fim, r)) => (r.root_vt(), inv_sqrt(fim.j_tt)),
                        None => (f64::INFINITY, f64::INFINITY),
                    };
                    Ok(vec![
                        d.into(),
                        geom.aperture().into(),
                        angle.to_degrees().into(),
                        root_vt.into(),
                        root_jtt.into(),
                    ])
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.rows.extend(rows);
        }
    }
    Ok(table)
}

/// Radial and transverse root-CRLBs at boresight for each carrier with a
/// half-wavelength array of the configured element count.
///
/// Columns: `d, carrier_hz, D_elaa, root_crlb_vr, root_crlb_vt,
/// root_crlb_far_field, root_jtt_halfwavelength_inv`. The last column is the
/// carrier-free half-wavelength approximation.
pub fn run_fig3(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let base = settings.waveform()?;
    let mut table = Table::new(
        comment("fig3", settings),
        vec![
            "d",
            "carrier_hz",
            "D_elaa",
            "root_crlb_vr",
            "root_crlb_vt",
            "root_crlb_far_field",
            "root_jtt_halfwavelength_inv",
        ],
    );
    for &carrier in &settings.carriers {
        let config = base.with_carrier(carrier)?;
        let geom = ArrayGeometry::half_wavelength(settings.elements, carrier)?;
        let far = crlb_vr_far_field(&config, settings.elements, settings.snr).sqrt();
        let rows = distances(settings)
            .into_par_iter()
            .map(|d| -> Result<Vec<Cell>, ConfigError> {
                let t = TargetState::at(d, 0.0)?;
                let (_, r) = crlb(&t, &geom, &config, settings.snr)?;
                let jhw = j_tt_halfwavelength(d, settings.elements, &config.slow_time(), settings.snr);
                Ok(vec![
                    d.into(),
                    carrier.into(),
                    geom.aperture().into(),
                    r.root_vr().into(),
                    r.root_vt().into(),
                    far.into(),
                    inv_sqrt(jhw).into(),
                ])
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.rows.extend(rows);
    }
    Ok(table)
}

fn grid_points(settings: &Settings) -> Vec<(f64, f64)> {
    let xs = linspace(settings.x_min, settings.x_max, settings.nx);
    linspace(settings.y_min, settings.y_max, settings.ny)
        .into_iter()
        .flat_map(|y| xs.iter().map(move |&x| (x, y)))
        .collect()
}

/// Evaluates the bounds at a grid point; `snr` is `None` when the link
/// budget is undefined (target at the origin).
fn grid_row(
    x: f64,
    y: f64,
    geom: &ArrayGeometry,
    config: &WaveformConfig,
    settings: &Settings,
    model: SnrModel,
) -> Result<(TargetState, Option<f64>, Bounds), ConfigError> {
    let d = x.hypot(y);
    let angle = x.atan2(y);
    if d == 0.0 {
        let placeholder = TargetState {
            distance: 0.0,
            angle: 0.0,
            radial_velocity: 0.0,
            transverse_velocity: 0.0,
        };
        return Ok((placeholder, None, None));
    }
    let target = TargetState::at(d, angle)?;
    let snr = match model {
        SnrModel::Fixed => settings.snr,
        SnrModel::LinkBudget => snr_from_link_budget(d, config, &settings.link_budget())?,
    };
    let bounds = if y == 0.0 {
        // on the array line
        None
    } else {
        bounds_at(&target, geom, config, snr)?
    };
    Ok((target, Some(snr), bounds))
}

/// Transverse root-CRLB over the half-plane in front of the array with the
/// link-budget SNR.
///
/// Columns: `x, y, d, theta_deg, snr_db, root_crlb_vt, status`. Points on the
/// array line (`y = 0`) are reported as `degenerate` with an `inf` bound.
pub fn run_fig4(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let config = settings.waveform()?;
    let geom = settings.geometry()?;
    let mut table = Table::new(
        comment("fig4", settings),
        vec!["x", "y", "d", "theta_deg", "snr_db", "root_crlb_vt", "status"],
    );
    table.rows = grid_points(settings)
        .into_par_iter()
        .map(|(x, y)| -> Result<Vec<Cell>, ConfigError> {
            let (t, snr, b) = grid_row(x, y, &geom, &config, settings, SnrModel::LinkBudget)?;
            let root_vt = b.as_ref().map_or(f64::INFINITY, |(_, r)| r.root_vt());
            Ok(vec![
                x.into(),
                y.into(),
                t.distance.into(),
                t.angle.to_degrees().into(),
                snr.map_or(f64::INFINITY, linear_to_db).into(),
                root_vt.into(),
                status(&b),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(table)
}

/// Generic 1D sweep of distance, angle, carrier or aperture, or a 2D grid.
///
/// 1D columns: `<variable>, root_crlb_vr, root_crlb_vt, root_jrr_inv,
/// root_jtt_inv, root_crlb_far_field, status`. Grid columns: `x, y, d,
/// theta_deg, snr_db, root_crlb_vr, root_crlb_vt, status`.
pub fn run_sweep(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    if settings.sweep == SweepVariable::Grid {
        return run_grid_sweep(settings);
    }
    let (lo, hi, scale) = settings.sweep_range()?;
    let name = match settings.sweep {
        SweepVariable::Distance => "d",
        SweepVariable::Angle => "theta_deg",
        SweepVariable::Carrier => "carrier_hz",
        SweepVariable::Aperture => "D_elaa",
        SweepVariable::Grid => unreachable!(),
    };
    let mut table = Table::new(
        comment("sweep", settings),
        vec![
            name,
            "root_crlb_vr",
            "root_crlb_vt",
            "root_jrr_inv",
            "root_jtt_inv",
            "root_crlb_far_field",
            "status",
        ],
    );
    let base = settings.waveform()?;
    table.rows = spaced(lo, hi, settings.points, scale)
        .into_par_iter()
        .map(|v| -> Result<Vec<Cell>, ConfigError> {
            let mut target = settings.target()?;
            let mut config = base.clone();
            let mut geom = settings.geometry()?;
            match settings.sweep {
                SweepVariable::Distance => target.distance = v,
                SweepVariable::Angle => target = TargetState::at(target.distance, v)?,
                SweepVariable::Carrier => {
                    config = base.with_carrier(v)?;
                    geom = settings.geometry_at(v)?;
                }
                SweepVariable::Aperture => geom = ArrayGeometry::with_aperture(settings.elements, v)?,
                SweepVariable::Grid => unreachable!(),
            }
            let b = bounds_at(&target, &geom, &config, settings.snr)?;
            let (vr, vt, jr, jt) = match &b {
                Some((fim, r)) => (r.root_vr(), r.root_vt(), inv_sqrt(fim.j_rr), inv_sqrt(fim.j_tt)),
                None => (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY),
            };
            let shown = if settings.sweep == SweepVariable::Angle { v.to_degrees() } else { v };
            Ok(vec![
                shown.into(),
                vr.into(),
                vt.into(),
                jr.into(),
                jt.into(),
                crlb_vr_far_field(&config, geom.num_elements(), settings.snr).sqrt().into(),
                status(&b),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(table)
}

fn run_grid_sweep(settings: &Settings) -> Result<Table, ConfigError> {
    let config = settings.waveform()?;
    let geom = settings.geometry()?;
    let mut table = Table::new(
        comment("sweep", settings),
        vec!["x", "y", "d", "theta_deg", "snr_db", "root_crlb_vr", "root_crlb_vt", "status"],
    );
    table.rows = grid_points(settings)
        .into_par_iter()
        .map(|(x, y)| -> Result<Vec<Cell>, ConfigError> {
            let (t, snr, b) = grid_row(x, y, &geom, &config, settings, settings.snr_model)?;
            let (vr, vt) = b
                .as_ref()
                .map_or((f64::INFINITY, f64::INFINITY), |(_, r)| (r.root_vr(), r.root_vt()));
            Ok(vec![
                x.into(),
                y.into(),
                t.distance.into(),
                t.angle.to_degrees().into(),
                snr.map_or(f64::INFINITY, linear_to_db).into(),
                vr.into(),
                vt.into(),
                status(&b),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(table)
}

/// Monte Carlo ML efficiency at each SNR of `snr_list`.
///
/// Columns: `snr_db, trials, mse_vr, mse_vt, crlb_vr, crlb_vt, ratio_vr,
/// ratio_vt, seed, degenerate_vr, degenerate_vt`.
pub fn run_montecarlo(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let mut table = Table::new(
        comment("montecarlo", settings),
        vec![
            "snr_db",
            "trials",
            "mse_vr",
            "mse_vt",
            "crlb_vr",
            "crlb_vt",
            "ratio_vr",
            "ratio_vt",
            "seed",
            "degenerate_vr",
            "degenerate_vt",
        ],
    );
    for &snr in &settings.snr_list {
        let scenario = Scenario {
            geometry: settings.geometry()?,
            target: settings.target()?,
            waveform: settings.waveform()?,
            snr,
        };
        let search = scenario.default_search()?;
        let report = monte_carlo_mse(&scenario, &search, settings.trials, settings.seed)?;
        table.push(vec![
            linear_to_db(snr).into(),
            report.trials.into(),
            report.mse_vr.into(),
            report.mse_vt.into(),
            report.crlb_vr.into(),
            report.crlb_vt.into(),
            report.ratio_vr().into(),
            report.ratio_vt().into(),
            report.seed.into(),
            report.degenerate_vr.into(),
            report.degenerate_vt.into(),
        ]);
    }
    Ok(table)
}

/// Every bound for the single configured scenario, as `quantity,value` rows.
pub fn run_crlb(settings: &Settings) -> Result<Table, ConfigError> {
    settings.validate()?;
    let config = settings.waveform()?;
    let geom = settings.geometry()?;
    let target = settings.target()?;
    let (fim, r) = crlb(&target, &geom, &config, settings.snr)?;
    let d = target.distance;
    let snr = settings.snr;
    let mut table = Table::new(comment("crlb", settings), vec!["quantity", "value"]);
    let rows: Vec<(&str, Cell)> = vec![
        ("distance_m", d.into()),
        ("theta_deg", target.angle.to_degrees().into()),
        ("spacing_m", geom.spacing().into()),
        ("aperture_m", geom.aperture().into()),
        ("fraunhofer_distance_m", geom.fraunhofer_distance(config.carrier()).into()),
        ("crossover_distance_m", crossover_distance(&geom).into()),
        ("snr_db", linear_to_db(snr).into()),
        ("observation_time_s", config.observation_time().into()),
        ("j_rr", fim.j_rr.into()),
        ("j_tt", fim.j_tt.into()),
        ("j_rt", fim.j_rt.into()),
        ("det", fim.det().into()),
        ("crlb_vr", r.crlb_vr.into()),
        ("crlb_vt", r.crlb_vt.into()),
        ("root_crlb_vr", r.root_vr().into()),
        ("root_crlb_vt", r.root_vt().into()),
        ("singular", u64::from(r.singular).into()),
        ("crlb_vr_far_field", crlb_vr_far_field(&config, geom.num_elements(), snr).into()),
        ("boresight_prefactor", boresight_prefactor(&config, snr).into()),
        ("j_rr_boresight", j_rr_boresight(d, &geom, &config, snr).into()),
        ("j_tt_boresight_approx", j_tt_boresight_approx(d, &geom, &config, snr).into()),
    ];
    for (name, value) in rows {
        table.push(vec![name.into(), value]);
    }
    Ok(table)
}
