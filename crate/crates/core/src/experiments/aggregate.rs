use serde::{Deserialize, Serialize};

use super::{LinkMode, SceneTemplate};
use crate::analysis::{evaluate_link, LinkParams, McsTable, Phy};
use crate::channel::{csi_with, ChannelModel, LinkGeometry, NoiseModel};
use crate::error::{Error, Result};
use crate::propagation::FrequencyBand;

/// One radio chain of the multi-band platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chain {
    pub band: FrequencyBand,
    pub phy: Phy,
    /// Extra loss of a frequency-converted chain.
    #[serde(default)]
    pub conversion_loss_db: f64,
}

/// Loss of the 915 MHz chain built by downconverting a 2.4 GHz card.
pub const DOWNCONVERSION_LOSS_DB: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationPlan {
    pub chains: Vec<Chain>,
}

fn chain(band: Result<FrequencyBand>, phy: Phy) -> Chain {
    Chain {
        band: band.expect("valid preset channel"),
        phy,
        conversion_loss_db: 0.0,
    }
}

impl AggregationPlan {
    /// Six 40 MHz 5 GHz channels (two of them DFS) plus one 20 MHz channel.
    pub fn scenario1() -> Self {
        let mut chains: Vec<Chain> = [38, 46, 54, 62, 151, 159]
            .iter()
            .map(|&ch| chain(FrequencyBand::wifi_5g(ch, 40e6), Phy::Vht))
            .collect();
        chains.push(chain(FrequencyBand::wifi_5g(165, 20e6), Phy::Vht));
        AggregationPlan { chains }
    }

    /// The non-DFS 5 GHz channels plus 2.4 GHz and a downconverted 915 MHz
    /// chain.
    pub fn scenario2() -> Self {
        let mut chains: Vec<Chain> = [38, 46, 151, 159]
            .iter()
            .map(|&ch| chain(FrequencyBand::wifi_5g(ch, 40e6), Phy::Vht))
            .collect();
        chains.push(chain(FrequencyBand::wifi_2g4(1, 40e6), Phy::Ht));
        chains.push(chain(FrequencyBand::wifi_2g4(11, 20e6), Phy::Ht));
        chains.push(Chain {
            conversion_loss_db: DOWNCONVERSION_LOSS_DB,
            ..chain(FrequencyBand::ism_915(20e6), Phy::Ht)
        });
        AggregationPlan { chains }
    }

    pub fn total_bandwidth_hz(&self) -> f64 {
        self.chains.iter().map(|c| c.band.bandwidth_hz()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains.is_empty() {
            return Err(Error::Domain("aggregation plan has no chains".into()));
        }
        for (i, a) in self.chains.iter().enumerate() {
            if !(a.conversion_loss_db.is_finite() && a.conversion_loss_db >= 0.0) {
                return Err(Error::Domain(format!(
                    "chain {i}: conversion loss {}",
                    a.conversion_loss_db
                )));
            }
            let (alo, ahi) = edges(&a.band);
            for b in &self.chains[i + 1..] {
                let (blo, bhi) = edges(&b.band);
                if alo < bhi && blo < ahi {
                    return Err(Error::Domain(format!(
                        "chains at {} and {} Hz overlap",
                        a.band.center_hz(),
                        b.band.center_hz()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn edges(b: &FrequencyBand) -> (f64, f64) {
    let h = b.bandwidth_hz() / 2.0;
    (b.center_hz() - h, b.center_hz() + h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub chain: Chain,
    /// Effective SNR after conversion loss.
    pub esnr_db: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub distance_m: f64,
    pub total_bps: f64,
    pub chains: Vec<ChainResult>,
}

/// Rate of every chain of `plan` over a single-contact surface link.
#[allow(clippy::too_many_arguments)]
pub fn aggregate_capacity(
    plan: &AggregationPlan,
    template: &SceneTemplate,
    distance_m: f64,
    model: &ChannelModel,
    tx_power_dbm: f64,
    noise: &NoiseModel,
    beta_esm: f64,
    table: &McsTable,
) -> Result<AggregateResult> {
    plan.validate()?;
    let scene = template.scene(LinkMode::SurfaceSiso, distance_m)?;
    let geom = LinkGeometry::for_scene(&scene, model, plan.chains[0].band.center_hz())?;
    let mut chains = Vec::with_capacity(plan.chains.len());
    for c in &plan.chains {
        let csi = csi_with(&geom, &c.band, c.band.default_subcarriers())?;
        let params = LinkParams {
            snr_db: tx_power_dbm - c.conversion_loss_db - noise.noise_power_dbm(c.band.bandwidth_hz()),
            phy: c.phy,
            bandwidth_mhz: (c.band.bandwidth_hz() / 1e6).round() as u32,
            beta_esm,
        };
        let r = evaluate_link(&csi, &params, table)?;
        chains.push(ChainResult {
            chain: *c,
            esnr_db: r.stream_snrs_db[0],
            rate_bps: r.phy_rate_bps,
        });
    }
    Ok(AggregateResult {
        distance_m,
        total_bps: chains.iter().map(|c| c.rate_bps).sum(),
        chains,
    })
}

/// Sum of the top single-stream rates of every chain.
pub fn peak_rate_bps(plan: &AggregationPlan, table: &McsTable) -> Result<f64> {
    plan.chains
        .iter()
        .map(|c| {
            Ok(table
                .class(c.phy, (c.band.bandwidth_hz() / 1e6).round() as u32)?
                .top_rate_bps())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_bandwidths() {
        assert_eq!(AggregationPlan::scenario1().total_bandwidth_hz(), 260e6);
        assert_eq!(AggregationPlan::scenario2().total_bandwidth_hz(), 240e6);
        AggregationPlan::scenario1().validate().unwrap();
        AggregationPlan::scenario2().validate().unwrap();
    }

    #[test]
    fn only_the_915_chain_has_conversion_loss() {
        for c in AggregationPlan::scenario2().chains {
            let expect = if c.band.center_hz() < 1e9 { 6.0 } else { 0.0 };
            assert_eq!(c.conversion_loss_db, expect);
        }
    }

    #[test]
    fn overlapping_chains_are_rejected() {
        let mut p = AggregationPlan::scenario1();
        p.chains.push(p.chains[0]);
        assert!(p.validate().is_err());
    }
}
