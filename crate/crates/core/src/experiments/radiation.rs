use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::propagation::{air_gain, db20, AirModel};

/// Attenuation of surface-fed emissions relative to an antenna transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiationProfile {
    /// Receivers on the side of the surface facing the transmitter (`z >= 0`).
    pub front_offset_db: f64,
    /// Receivers behind the surface (`z < 0`).
    pub back_offset_db: f64,
}

impl Default for RadiationProfile {
    fn default() -> Self {
        RadiationProfile {
            front_offset_db: 13.0,
            back_offset_db: 25.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationSample {
    pub position: Point3,
    pub front: bool,
    pub reference_dbm: f64,
    pub surface_fed_dbm: f64,
}

/// Received power at each position from an antenna at `source`, and from the
/// same transmitter feeding the surface instead.
pub fn radiation_benchmark(
    profile: &RadiationProfile,
    source: Point3,
    positions: &[Point3],
    tx_power_dbm: f64,
    f_hz: f64,
    air: &AirModel,
) -> Result<Vec<RadiationSample>> {
    if !(profile.front_offset_db >= 0.0 && profile.back_offset_db >= 0.0) {
        return Err(Error::Domain("radiation offsets must be >= 0 dB".into()));
    }
    positions
        .iter()
        .map(|&p| {
            let reference_dbm = tx_power_dbm + db20(air_gain(source.dist(p), f_hz, air)?);
            let front = p.z >= 0.0;
            let offset = if front {
                profile.front_offset_db
            } else {
                profile.back_offset_db
            };
            Ok(RadiationSample {
                position: p,
                front,
                reference_dbm,
                surface_fed_dbm: reference_dbm - offset,
            })
        })
        .collect()
}

/// Receiver positions on a circle of `radius_m` around `center` in the plane
/// perpendicular to the surface.
pub fn ring_positions(center: Point3, radius_m: f64, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            Point3::new(center.x + radius_m * t.cos(), center.y, center.z + radius_m * t.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_offsets_give_identical_maps() {
        let src = Point3::new(0.0, 0.0, 0.0);
        let pos = ring_positions(src, 1.0, 8);
        let p = RadiationProfile {
            front_offset_db: 0.0,
            back_offset_db: 0.0,
        };
        for s in radiation_benchmark(&p, src, &pos, 0.0, 2.4e9, &AirModel::default()).unwrap() {
            assert_eq!(s.reference_dbm, s.surface_fed_dbm);
        }
    }

    #[test]
    fn negative_offsets_are_rejected() {
        let p = RadiationProfile {
            front_offset_db: -1.0,
            back_offset_db: 0.0,
        };
        assert!(radiation_benchmark(&p, Point3::new(0.0, 0.0, 0.0), &[], 0.0, 2.4e9, &AirModel::default()).is_err());
    }
}
