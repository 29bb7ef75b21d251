use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LinkSettings, SceneTemplate};
use crate::analysis::McsTable;
use crate::error::{Error, Result};
use crate::geometry::{Node, NodeRole, Point2, Scene};
use crate::propagation::FrequencyBand;

/// A client transmitting to an access point, both touching the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharingPair {
    pub client: Point2,
    pub ap: Point2,
    /// 2.4 GHz Wi-Fi channel number.
    pub channel: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharingConfig {
    pub pairs: Vec<SharingPair>,
    /// Airtime taken by Wi-Fi traffic in the environment, in `[0, 1]`.
    #[serde(default)]
    pub ambient_busy_fraction: f64,
}

impl SharingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Domain("sharing needs at least one pair".into()));
        }
        if !(0.0..=1.0).contains(&self.ambient_busy_fraction) {
            return Err(Error::Domain(format!(
                "ambient busy fraction {} not in [0, 1]",
                self.ambient_busy_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub channel: u32,
    pub solo_bps: f64,
    /// Fraction of slots in which this pair transmitted.
    pub won_fraction: f64,
    pub throughput_bps: f64,
}

/// Slotted carrier-sense contention.
///
/// Every slot, each channel is first found busy with probability
/// `ambient_busy_fraction`; otherwise one of the pairs on that channel wins
/// uniformly at random. Each channel draws from its own stream of the seeded
/// generator, so pairs on different channels never influence each other.
pub fn share_sim(config: &SharingConfig, solo_bps: &[f64], slots: u64, seed: u64) -> Result<Vec<PairOutcome>> {
    config.validate()?;
    if slots == 0 {
        return Err(Error::Domain("simulation needs at least one slot".into()));
    }
    if solo_bps.len() != config.pairs.len() {
        return Err(Error::Domain(format!(
            "{} solo rates for {} pairs",
            solo_bps.len(),
            config.pairs.len()
        )));
    }
    let mut channels: Vec<u32> = config.pairs.iter().map(|p| p.channel).collect();
    channels.sort_unstable();
    channels.dedup();
    let mut won = vec![0u64; config.pairs.len()];
    for ch in channels {
        let members: Vec<usize> = (0..config.pairs.len())
            .filter(|&i| config.pairs[i].channel == ch)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(ch));
        for _ in 0..slots {
            if config.ambient_busy_fraction > 0.0 && rng.random::<f64>() < config.ambient_busy_fraction {
                continue;
            }
            let k = if members.len() == 1 {
                0
            } else {
                rng.random_range(0..members.len())
            };
            won[members[k]] += 1;
        }
    }
    Ok(config
        .pairs
        .iter()
        .zip(won)
        .zip(solo_bps)
        .map(|((p, w), &solo)| {
            let frac = w as f64 / slots as f64;
            PairOutcome {
                channel: p.channel,
                solo_bps: solo,
                won_fraction: frac,
                throughput_bps: frac * solo,
            }
        })
        .collect())
}

/// Rate each pair would get with the surface to itself: a single-contact
/// 20 MHz link on the pair's channel.
pub fn pair_solo_rates(
    template: &SceneTemplate,
    config: &SharingConfig,
    settings: &LinkSettings,
    table: &McsTable,
) -> Result<Vec<f64>> {
    config
        .pairs
        .iter()
        .map(|p| {
            let scene = Scene {
                surface: template.surface.clone(),
                nodes: vec![
                    Node {
                        id: "client".into(),
                        role: NodeRole::Transmitter,
                        contacts: vec![p.client],
                        antennas: vec![],
                    },
                    Node {
                        id: "ap".into(),
                        role: NodeRole::Receiver,
                        contacts: vec![p.ap],
                        antennas: vec![],
                    },
                ],
                obstacles: template.obstacles.clone(),
            };
            let s = LinkSettings {
                band: FrequencyBand::wifi_2g4(p.channel, 20e6)?,
                subcarriers: None,
                ..settings.clone()
            };
            Ok(super::evaluate_scene(&scene, &s, table)?.phy_rate_bps)
        })
        .collect()
}
