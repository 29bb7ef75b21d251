//! Scenario runners: throughput and separation sweeps, pulse profiles,
//! multi-band aggregation, radiation offsets and surface sharing.

mod aggregate;
mod pulse;
mod radiation;
mod scenes;
mod share;

pub use aggregate::{
    aggregate_capacity, peak_rate_bps, AggregateResult, AggregationPlan, Chain, ChainResult, DOWNCONVERSION_LOSS_DB,
};
pub use pulse::{pulse_profile, PulseProfile, PulseSettings};
pub use radiation::{radiation_benchmark, ring_positions, RadiationProfile, RadiationSample};
pub use scenes::{sweep_distances_ft, LinkMode, SceneTemplate, AIR_MIMO_SPACING_M, FOOT_M};
pub use share::{pair_solo_rates, share_sim, PairOutcome, SharingConfig, SharingPair};

use serde::{Deserialize, Serialize};

use crate::analysis::{evaluate_link, LinkParams, LinkResult, McsTable, Phy};
use crate::channel::{csi_with, ChannelModel, LinkGeometry, NoiseModel};
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::propagation::FrequencyBand;

/// Radio and model settings shared by the link experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSettings {
    pub band: FrequencyBand,
    /// Subcarriers per CSI snapshot; `None` uses the band's tone plan.
    #[serde(default)]
    pub subcarriers: Option<usize>,
    #[serde(default)]
    pub model: ChannelModel,
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub noise: NoiseModel,
    pub phy: Phy,
    #[serde(default = "default_beta_esm")]
    pub beta_esm: f64,
    /// Fraction of the PHY rate left after MAC overhead.
    #[serde(default = "default_mac_efficiency")]
    pub mac_efficiency: f64,
}

fn default_beta_esm() -> f64 {
    1.0
}

fn default_mac_efficiency() -> f64 {
    0.65
}

/// Default transmit power of the link experiments.
pub const DEFAULT_TX_POWER_DBM: f64 = 3.0;

impl LinkSettings {
    /// 802.11n, 40 MHz on 2.4 GHz channel 1, as used for the MIMO sweeps.
    pub fn wifi_2g4_ht40() -> Self {
        LinkSettings {
            band: FrequencyBand::wifi_2g4(1, 40e6).expect("valid channel"),
            subcarriers: None,
            model: ChannelModel::default(),
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            noise: NoiseModel::default(),
            phy: Phy::Ht,
            beta_esm: default_beta_esm(),
            mac_efficiency: default_mac_efficiency(),
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.subcarriers.unwrap_or_else(|| self.band.default_subcarriers())
    }

    /// Transmit power over noise power across the band.
    pub fn snr_db(&self) -> f64 {
        self.tx_power_dbm - self.noise.noise_power_dbm(self.band.bandwidth_hz())
    }

    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            snr_db: self.snr_db(),
            phy: self.phy,
            bandwidth_mhz: (self.band.bandwidth_hz() / 1e6).round() as u32,
            beta_esm: self.beta_esm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers() == 0 {
            return Err(Error::Domain("subcarrier count must be at least 1".into()));
        }
        if !(self.mac_efficiency > 0.0 && self.mac_efficiency <= 1.0) {
            return Err(Error::Domain(format!(
                "MAC efficiency {} not in (0, 1]",
                self.mac_efficiency
            )));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::Domain("transmit power must be finite".into()));
        }
        self.model.air.validate()
    }
}

/// Synthesizes CSI for `scene` and evaluates the link.
pub fn evaluate_scene(scene: &Scene, settings: &LinkSettings, table: &McsTable) -> Result<LinkResult> {
    settings.validate()?;
    let geom = LinkGeometry::for_scene(scene, &settings.model, settings.band.center_hz())?;
    let csi = csi_with(&geom, &settings.band, settings.n_subcarriers())?;
    evaluate_link(&csi, &settings.link_params(), table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mode: LinkMode,
    pub distance_m: f64,
    pub separation_m: f64,
    pub result: LinkResult,
    pub goodput_bps: f64,
}

/// Link results over a set of transmitter-receiver distances.
pub fn throughput_sweep(
    template: &SceneTemplate,
    distances_m: &[f64],
    mode: LinkMode,
    settings: &LinkSettings,
    table: &McsTable,
) -> Result<Vec<SweepPoint>> {
    distances_m
        .iter()
        .map(|&d| {
            let scene = template.scene(mode, d)?;
            let result = evaluate_scene(&scene, settings, table)?;
            Ok(SweepPoint {
                mode,
                distance_m: d,
                separation_m: template.separation_m,
                goodput_bps: result.phy_rate_bps * settings.mac_efficiency,
                result,
            })
        })
        .collect()
}

/// Throughput sweeps repeated for several antenna-to-contact separations.
pub fn separation_sweep(
    template: &SceneTemplate,
    separations_m: &[f64],
    distances_m: &[f64],
    mode: LinkMode,
    settings: &LinkSettings,
    table: &McsTable,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &s in separations_m {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("separation {s} m")));
        }
        let t = template.clone().with_separation(s);
        out.extend(throughput_sweep(&t, distances_m, mode, settings, table)?);
    }
    Ok(out)
}

/// Mean PHY rate of the points matching `pred`.
pub fn mean_rate(points: &[SweepPoint], pred: impl Fn(&SweepPoint) -> bool) -> f64 {
    let (sum, n) = points
        .iter()
        .filter(|p| pred(p))
        .fold((0.0, 0usize), |(s, n), p| (s + p.result.phy_rate_bps, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
