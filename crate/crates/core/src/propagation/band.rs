use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subcarrier spacing of 802.11n/ac OFDM.
pub const SUBCARRIER_SPACING_HZ: f64 = 312_500.0;

/// The three unlicensed bands the simulator models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandId {
    #[serde(rename = "915mhz")]
    Ism915,
    #[serde(rename = "2.4ghz")]
    Ism2400,
    #[serde(rename = "5ghz")]
    Ism5000,
}

impl BandId {
    /// Inclusive allocation edges in Hz.
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            BandId::Ism915 => (902e6, 928e6),
            BandId::Ism2400 => (2400e6, 2500e6),
            BandId::Ism5000 => (5150e6, 5875e6),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BandId::Ism915 => "915mhz",
            BandId::Ism2400 => "2.4ghz",
            BandId::Ism5000 => "5ghz",
        }
    }
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BandId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "915mhz" | "900mhz" | "915" => Ok(BandId::Ism915),
            "2.4ghz" | "2400mhz" | "2.4" => Ok(BandId::Ism2400),
            "5ghz" | "5000mhz" | "5" => Ok(BandId::Ism5000),
            other => Err(Error::Domain(format!("unknown band id '{other}'"))),
        }
    }
}

/// A channel inside one of the ISM bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand", into = "RawBand")]
pub struct FrequencyBand {
    band_id: BandId,
    center_hz: f64,
    bandwidth_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    id: BandId,
    center_hz: f64,
    bandwidth_hz: f64,
}

impl TryFrom<RawBand> for FrequencyBand {
    type Error = Error;

    fn try_from(raw: RawBand) -> Result<Self> {
        FrequencyBand::new(raw.id, raw.center_hz, raw.bandwidth_hz)
    }
}

impl From<FrequencyBand> for RawBand {
    fn from(b: FrequencyBand) -> Self {
        RawBand {
            id: b.band_id,
            center_hz: b.center_hz,
            bandwidth_hz: b.bandwidth_hz,
        }
    }
}

impl FrequencyBand {
    pub fn new(band_id: BandId, center_hz: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(center_hz.is_finite() && center_hz > 0.0) {
            return Err(Error::Domain(format!("center frequency {center_hz} Hz")));
        }
        if bandwidth_hz != 20e6 && bandwidth_hz != 40e6 {
            return Err(Error::Domain(format!(
                "bandwidth {bandwidth_hz} Hz (expected 20 MHz or 40 MHz)"
            )));
        }
        let (lo, hi) = band_id.range_hz();
        if center_hz < lo || center_hz > hi {
            return Err(Error::Domain(format!(
                "center {center_hz} Hz lies outside the {band_id} allocation"
            )));
        }
        Ok(FrequencyBand {
            band_id,
            center_hz,
            bandwidth_hz,
        })
    }

    /// 2.4 GHz Wi-Fi channel by primary channel number (1..=13). A 40 MHz
    /// channel is bonded upward, so its center sits 10 MHz above the primary.
    pub fn wifi_2g4(channel: u32, bandwidth_hz: f64) -> Result<Self> {
        if !(1..=13).contains(&channel) {
            return Err(Error::Domain(format!("2.4 GHz channel {channel}")));
        }
        let mut center = 2407e6 + 5e6 * channel as f64;
        if bandwidth_hz == 40e6 {
            center += 10e6;
        }
        Self::new(BandId::Ism2400, center, bandwidth_hz)
    }

    /// 5 GHz Wi-Fi channel by center channel number (e.g. 38 for a 40 MHz channel).
    pub fn wifi_5g(channel: u32, bandwidth_hz: f64) -> Result<Self> {
        Self::new(BandId::Ism5000, 5000e6 + 5e6 * channel as f64, bandwidth_hz)
    }

    pub fn ism_915(bandwidth_hz: f64) -> Result<Self> {
        Self::new(BandId::Ism915, 915e6, bandwidth_hz)
    }

    pub fn band_id(&self) -> BandId {
        self.band_id
    }

    pub fn center_hz(&self) -> f64 {
        self.center_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.center_hz
    }

    /// 56 tones for 20 MHz, 114 for 40 MHz.
    pub fn default_subcarriers(&self) -> usize {
        if self.bandwidth_hz == 40e6 {
            114
        } else {
            56
        }
    }

    /// Baseband offsets of `n` subcarriers. The 802.11n tone plans are used when
    /// `n` matches the default count; otherwise `n` tones are spread evenly and
    /// symmetrically around the center.
    pub fn subcarrier_offsets(&self, n: usize) -> Vec<f64> {
        if n == self.default_subcarriers() {
            let (lo, hi) = if self.bandwidth_hz == 40e6 { (2, 58) } else { (1, 28) };
            let mut out: Vec<f64> = (lo..=hi).rev().map(|k| -(k as f64) * SUBCARRIER_SPACING_HZ).collect();
            out.extend((lo..=hi).map(|k| k as f64 * SUBCARRIER_SPACING_HZ));
            return out;
        }
        let spacing = SUBCARRIER_SPACING_HZ.min(self.bandwidth_hz / n.max(1) as f64);
        let mid = (n as f64 - 1.0) / 2.0;
        (0..n).map(|i| (i as f64 - mid) * spacing).collect()
    }

    pub fn subcarrier_frequencies(&self, n: usize) -> Vec<f64> {
        self.subcarrier_offsets(n)
            .into_iter()
            .map(|o| self.center_hz + o)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_bandwidth() {
        assert!(FrequencyBand::new(BandId::Ism2400, 2.437e9, 80e6).is_err());
        assert!(FrequencyBand::new(BandId::Ism2400, 5.2e9, 20e6).is_err());
    }

    #[test]
    fn wifi_channel_centers() {
        assert_eq!(FrequencyBand::wifi_2g4(1, 20e6).unwrap().center_hz(), 2412e6);
        assert_eq!(FrequencyBand::wifi_2g4(1, 40e6).unwrap().center_hz(), 2422e6);
        assert_eq!(FrequencyBand::wifi_5g(38, 40e6).unwrap().center_hz(), 5190e6);
    }

    #[test]
    fn tone_plans() {
        let b40 = FrequencyBand::wifi_2g4(1, 40e6).unwrap();
        let offs = b40.subcarrier_offsets(114);
        assert_eq!(offs.len(), 114);
        assert_eq!(offs[0], -58.0 * SUBCARRIER_SPACING_HZ);
        assert!(offs.windows(2).all(|w| w[0] < w[1]));
        assert!(!offs.contains(&0.0));
        assert_eq!(b40.subcarrier_offsets(1), vec![0.0]);
        let b20 = FrequencyBand::ism_915(20e6).unwrap();
        assert_eq!(b20.subcarrier_offsets(56).len(), 56);
    }
}
