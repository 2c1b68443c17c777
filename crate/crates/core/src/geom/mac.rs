use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{angles, Kind, Tetrahedron};
use crate::error::{Error, Result};

/// Default slack on angle comparisons, in radians.
pub const ANGLE_EPS: f64 = 1e-12;

fn check_gamma(gamma_max: f64) -> Result<()> {
    if gamma_max.is_finite() && (PI / 3.0..PI).contains(&gamma_max) {
        Ok(())
    } else {
        Err(Error::InvalidGammaMax(gamma_max))
    }
}

/// Maximum angle condition: every face angle and every dihedral angle is
/// at most `gamma_max`.
pub fn mac_check(t: &Tetrahedron, gamma_max: f64) -> Result<bool> {
    mac_check_with_tolerance(t, gamma_max, ANGLE_EPS)
}

pub fn mac_check_with_tolerance(t: &Tetrahedron, gamma_max: f64, eps: f64) -> Result<bool> {
    check_gamma(gamma_max)?;
    Ok(angles(t)?.max_angle <= gamma_max + eps)
}

/// Constants of the MAC equivalence for a given `gamma_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacConstants {
    pub gamma_max: f64,
    pub delta: f64,
    pub sin_delta: f64,
    pub c0: f64,
    pub c1: f64,
    /// `6 / (C0 C1^2)`, the bound on `H_T / h_T` under the MAC.
    pub d: f64,
}

impl MacConstants {
    /// `gamma(M) = pi - arcsin(M)`.
    pub fn gamma_of(m: f64) -> f64 {
        PI - m.asin()
    }

    /// The ratio inside the square root defining `delta`; lies in (0, 1].
    pub fn delta_ratio(gamma: f64) -> f64 {
        (gamma.cos() + 1.0) / ((gamma / 2.0).sin() + 1.0)
    }
}

pub fn mac_bound_constants(gamma_max: f64) -> Result<MacConstants> {
    check_gamma(gamma_max)?;
    let sin_delta = MacConstants::delta_ratio(gamma_max).sqrt();
    let delta = sin_delta.asin();
    let c1 = ((PI - gamma_max) / 2.0).sin().min(gamma_max.sin());
    let c0 = sin_delta.min(gamma_max.sin());
    Ok(MacConstants {
        gamma_max,
        delta,
        sin_delta,
        c0,
        c1,
        d: 6.0 / (c0 * c1 * c1),
    })
}

/// Angle bound implied by `H_T / h_T <= d_h`, with `M = 6 / d_h`.
///
/// Type 1: `max{gamma(M/2), arccos(-sqrt(1-M^2) sqrt(1-M^2/4))}`;
/// Type 2: `max{gamma(M), arccos(M^2 - 1)}`; `None` takes the larger.
pub fn reverse_gamma_max(kind: Option<Kind>, d_h: f64) -> Result<f64> {
    if !(d_h.is_finite() && d_h >= 6.0) {
        return Err(Error::InvalidArgument(format!(
            "bound on H_T/h_T must be finite and >= 6, got {d_h}"
        )));
    }
    let m = 6.0 / d_h;
    let type1 = MacConstants::gamma_of(m / 2.0)
        .max((-(1.0 - m * m).sqrt() * (1.0 - m * m / 4.0).sqrt()).acos());
    let type2 = MacConstants::gamma_of(m).max((m * m - 1.0).acos());
    Ok(match kind {
        Some(Kind::Type1) => type1,
        Some(Kind::Type2) => type2,
        None => type1.max(type2),
    })
}
