//! Closed-form propagation models.
//!
//! A contact on a conductive surface launches a wave that decays
//! exponentially (transmission-line loss) and spreads cylindrically:
//!
//! ```text
//! g_s(d) = exp(-alpha d) exp(-j beta d) d0 / d
//! ```
//!
//! Radiation through air follows `g_a(d) = exp(-j omega d / c) (d0_air / d)^p`
//! with `p = 2` by default. Both models are only valid at or beyond their
//! reference distance.

mod band;
mod calibrate;
mod material;

pub use band::{BandId, FrequencyBand, SUBCARRIER_SPACING_HZ};
pub use calibrate::{calibrate, CalibrationFit, PowerSample};
pub use material::{BandPoint, MaterialLibrary, MaterialParams, SurfaceConstants};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dimensionless complex amplitude gain.
pub type ComplexGain = Complex64;

impl SurfaceConstants {
    /// Surface gain at `d` with no near-field check. Callers clamp `d` first.
    #[inline]
    pub(crate) fn gain_unchecked(&self, d: f64, d0: f64) -> ComplexGain {
        let mag = (-self.alpha * d).exp() * d0 / d;
        Complex64::from_polar(mag, -self.beta * d)
    }
}

/// Complex gain of the surface path between two contacts `d` meters apart.
pub fn surface_gain(d: f64, f_hz: f64, m: &MaterialParams) -> Result<ComplexGain> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("surface distance {d} m")));
    }
    if d < m.d0() {
        return Err(Error::NearField {
            distance: d,
            reference: m.d0(),
        });
    }
    Ok(m.constants_at(f_hz)?.gain_unchecked(d, m.d0()))
}

/// Over-the-air propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AirModel {
    /// Reference distance (m) at which the amplitude factor is one.
    pub d0_m: f64,
    /// Amplitude exponent `p`. Two reproduces the literal `d0^2/d^2`
    /// amplitude factor; one is the amplitude form of Friis.
    pub exponent: f64,
}

impl Default for AirModel {
    fn default() -> Self {
        AirModel {
            d0_m: 0.05,
            exponent: 2.0,
        }
    }
}

impl AirModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0_m.is_finite() && self.d0_m > 0.0) {
            return Err(Error::Domain(format!("air reference distance {}", self.d0_m)));
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::Domain(format!("air exponent {}", self.exponent)));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn gain_unchecked(&self, d: f64, f_hz: f64) -> ComplexGain {
        let mag = (self.d0_m / d).powf(self.exponent);
        Complex64::from_polar(mag, -2.0 * PI * f_hz * d / SPEED_OF_LIGHT)
    }

    /// Gain with the distance clamped to the reference distance.
    #[inline]
    pub(crate) fn gain_clamped(&self, d: f64, f_hz: f64) -> ComplexGain {
        self.gain_unchecked(d.max(self.d0_m), f_hz)
    }
}

/// Complex gain of an air path of length `d`.
pub fn air_gain(d: f64, f_hz: f64, air: &AirModel) -> Result<ComplexGain> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("air distance {d} m")));
    }
    if d < air.d0_m {
        return Err(Error::NearField {
            distance: d,
            reference: air.d0_m,
        });
    }
    Ok(air.gain_unchecked(d, f_hz))
}

/// Phase velocity `omega / beta` of the surface wave. Surface materials must
/// propagate strictly slower than light; anything else is rejected.
pub fn phase_velocity(f_hz: f64, m: &MaterialParams) -> Result<f64> {
    let beta = m.constants_at(f_hz)?.beta;
    if beta <= 0.0 {
        return Err(Error::DegenerateMaterial {
            material: m.name().to_string(),
            reason: "beta is zero".into(),
        });
    }
    let v = 2.0 * PI * f_hz / beta;
    if v >= SPEED_OF_LIGHT {
        return Err(Error::DegenerateMaterial {
            material: m.name().to_string(),
            reason: format!("phase velocity {v} m/s is not below the speed of light"),
        });
    }
    Ok(v)
}

pub fn db20(g: ComplexGain) -> f64 {
    20.0 * g.norm().log10()
}
