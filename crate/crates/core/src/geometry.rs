//! Linear array layout, target state, and per-element projection coefficients.
//!
//! The array lies on the x-axis with its center element at the origin.
//! The target sits at `[d sin(theta), d cos(theta)]`, so `theta = 0` is
//! boresight and `theta = +-pi/2` lies on the array line.
//!
//! Velocity frame: the radial unit vector points from the target toward the
//! array center, `u_r = -[sin(theta), cos(theta)]`, and the transverse unit
//! vector is `u_r` rotated by +90 degrees, `u_t = [cos(theta), -sin(theta)]`.
//! The line of sight of element `k` is `e_k = (p_k - p) / |p_k - p|`, from the
//! target toward the element. With this frame, `u_r . e_k = q_k` and
//! `u_t . e_k = p_k` hold exactly, and a positive radial velocity (closing
//! target) produces a positive Doppler shift.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::symmetric_offsets;
use crate::SPEED_OF_LIGHT;

/// Relative floor on `d_k / d` below which the target is considered to sit
/// on an element.
const COINCIDENCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
    positions: Vec<f64>,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::invalid("num_elements", "must be at least 1"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(
                "spacing",
                format!("must be finite and positive, got {spacing}"),
            ));
        }
        let positions = symmetric_offsets(num_elements)
            .map(|k| k * spacing)
            .collect();
        Ok(Self {
            num_elements,
            spacing,
            positions,
        })
    }

    /// Half-wavelength spaced array at the given carrier.
    pub fn half_wavelength(num_elements: usize, carrier: f64) -> Result<Self> {
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(Error::invalid("carrier", format!("must be positive, got {carrier}")));
        }
        Self::new(num_elements, SPEED_OF_LIGHT / (2.0 * carrier))
    }

    /// Array with `num_elements >= 2` elements spanning the given aperture.
    pub fn with_aperture(num_elements: usize, aperture: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::invalid(
                "num_elements",
                "an aperture needs at least two elements",
            ));
        }
        Self::new(num_elements, aperture / (num_elements - 1) as f64)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `D = (K - 1) * delta`.
    pub fn aperture(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.spacing
    }

    /// Element x-coordinates, strictly increasing and symmetric about zero.
    pub fn element_positions(&self) -> &[f64] {
        &self.positions
    }

    /// Signed grid offset `k` of element `index` (half-integer for even K).
    pub fn element_offset(&self, index: usize) -> f64 {
        index as f64 - (self.num_elements as f64 - 1.0) / 2.0
    }

    /// Fraunhofer distance `2 D^2 / lambda`.
    pub fn fraunhofer_distance(&self, carrier: f64) -> f64 {
        2.0 * self.aperture().powi(2) * carrier / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub distance: f64,
    pub angle: f64,
    pub radial_velocity: f64,
    pub transverse_velocity: f64,
}

impl TargetState {
    pub fn new(distance: f64, angle: f64, radial_velocity: f64, transverse_velocity: f64) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::invalid(
                "distance",
                format!("must be finite and positive, got {distance}"),
            ));
        }
        if !(angle.is_finite() && angle.abs() <= FRAC_PI_2) {
            return Err(Error::invalid(
                "angle",
                format!("must lie in [-pi/2, pi/2], got {angle}"),
            ));
        }
        if !(radial_velocity.is_finite() && transverse_velocity.is_finite()) {
            return Err(Error::invalid("velocity", "components must be finite"));
        }
        Ok(Self {
            distance,
            angle,
            radial_velocity,
            transverse_velocity,
        })
    }

    /// Static target at `(distance, angle)`.
    pub fn at(distance: f64, angle: f64) -> Result<Self> {
        Self::new(distance, angle, 0.0, 0.0)
    }

    /// Builds a target from Cartesian coordinates in front of the array (`y >= 0`).
    pub fn from_cartesian(x: f64, y: f64, radial_velocity: f64, transverse_velocity: f64) -> Result<Self> {
        if y < 0.0 {
            return Err(Error::invalid("y", "target must lie in front of the array"));
        }
        Self::new(x.hypot(y), x.atan2(y), radial_velocity, transverse_velocity)
    }

    pub fn with_velocity(mut self, radial_velocity: f64, transverse_velocity: f64) -> Self {
        self.radial_velocity = radial_velocity;
        self.transverse_velocity = transverse_velocity;
        self
    }

    /// `(sin(theta), cos(theta))`, with the cosine pinned to exactly zero on
    /// the array line.
    pub fn sin_cos(&self) -> (f64, f64) {
        if self.angle.abs() == FRAC_PI_2 {
            (self.angle.signum(), 0.0)
        } else {
            self.angle.sin_cos()
        }
    }

    pub fn cartesian(&self) -> [f64; 2] {
        let (s, c) = self.sin_cos();
        [self.distance * s, self.distance * c]
    }

    pub fn radial_unit(&self) -> [f64; 2] {
        let (s, c) = self.sin_cos();
        [-s, -c]
    }

    pub fn transverse_unit(&self) -> [f64; 2] {
        let (s, c) = self.sin_cos();
        [c, -s]
    }

    /// Velocity vector in the array frame.
    pub fn velocity_cartesian(&self) -> [f64; 2] {
        let ur = self.radial_unit();
        let ut = self.transverse_unit();
        [
            self.radial_velocity * ur[0] + self.transverse_velocity * ut[0],
            self.radial_velocity * ur[1] + self.transverse_velocity * ut[1],
        ]
    }
}

fn check_index(geom: &ArrayGeometry, index: usize) -> Result<f64> {
    geom.element_positions()
        .get(index)
        .copied()
        .ok_or_else(|| Error::invalid("element", format!("index {index} out of range for K={}", geom.num_elements())))
}

/// Target-to-element distance `d_k = d sqrt(1 + x_k^2/d^2 - 2 x_k sin(theta)/d)`.
pub fn distance_to_element(target: &TargetState, geom: &ArrayGeometry, index: usize) -> Result<f64> {
    let x = check_index(geom, index)?;
    let d = target.distance;
    if !(d > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    let (s, c) = target.sin_cos();
    let ratio = x / d;
    // 1 + r^2 - 2 r sin = (r - sin)^2 + cos^2; the right-hand side keeps its
    // relative accuracy when the target is close to the element
    let radicand = (ratio - s).powi(2) + c * c;
    if radicand <= COINCIDENCE_FLOOR * COINCIDENCE_FLOOR {
        return Err(Error::DegenerateGeometry {
            element: index,
            distance: d * radicand.max(0.0).sqrt(),
        });
    }
    Ok(d * radicand.sqrt())
}

/// Radial projection coefficient `q_k = (d - x_k sin(theta)) / d_k`.
pub fn radial_projection_coeff(target: &TargetState, geom: &ArrayGeometry, index: usize) -> Result<f64> {
    let dk = distance_to_element(target, geom, index)?;
    let (s, c) = target.sin_cos();
    let ratio = geom.element_positions()[index] / target.distance;
    // d - x sin = d ((sin - r) sin + cos^2), rearranged like the distance
    Ok(target.distance * ((s - ratio) * s + c * c) / dk)
}

/// Transverse projection coefficient `p_k = x_k cos(theta) / d_k`.
pub fn transverse_projection_coeff(target: &TargetState, geom: &ArrayGeometry, index: usize) -> Result<f64> {
    let dk = distance_to_element(target, geom, index)?;
    let (_, c) = target.sin_cos();
    let x = geom.element_positions()[index];
    Ok(x * c / dk)
}

/// Projection coefficients of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub radial: f64,
    pub transverse: f64,
}

/// `(q_k, p_k)` for every element, in element order.
pub fn projections(target: &TargetState, geom: &ArrayGeometry) -> Result<Vec<Projection>> {
    (0..geom.num_elements())
        .map(|k| {
            Ok(Projection {
                radial: radial_projection_coeff(target, geom, k)?,
                transverse: transverse_projection_coeff(target, geom, k)?,
            })
        })
        .collect()
}

/// Unit line-of-sight vector from the target toward element `index`,
/// computed from Cartesian coordinates.
pub fn line_of_sight(target: &TargetState, geom: &ArrayGeometry, index: usize) -> Result<[f64; 2]> {
    let x = check_index(geom, index)?;
    let p = target.cartesian();
    let delta = [x - p[0], -p[1]];
    let norm = delta[0].hypot(delta[1]);
    if norm <= COINCIDENCE_FLOOR * target.distance {
        return Err(Error::DegenerateGeometry {
            element: index,
            distance: norm,
        });
    }
    Ok([delta[0] / norm, delta[1] / norm])
}
