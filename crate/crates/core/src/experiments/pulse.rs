use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ImpulseResponse, LinkGeometry};
use crate::error::{Error, Result};
use crate::geometry::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSettings {
    /// Frequency at which tap gains and surface velocity are evaluated.
    pub reference_hz: f64,
    /// Delay resolution of the integral clusters is `1 / bandwidth_hz`.
    pub bandwidth_hz: f64,
    pub pulse_width_s: f64,
    pub sample_rate_hz: f64,
    /// Horizon after the first arrival used for the residual-energy figure.
    pub horizon_s: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        PulseSettings {
            reference_hz: 2.4e9,
            bandwidth_hz: 1e9,
            pulse_width_s: 1e-9,
            sample_rate_hz: 5e9,
            horizon_s: 300e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProfile {
    pub response: ImpulseResponse,
    pub times_s: Vec<f64>,
    pub samples: Vec<Complex64>,
    /// Largest tap magnitude.
    pub peak: f64,
    /// Tap energy later than the first arrival plus the horizon, relative to
    /// the energy of the strongest tap.
    pub residual_ratio: f64,
    pub rms_delay_spread_s: f64,
}

/// Sampled response of the link to a rectangular pulse.
pub fn pulse_profile(
    scene: &Scene,
    tx_port: usize,
    rx_port: usize,
    model: &ChannelModel,
    settings: &PulseSettings,
) -> Result<PulseProfile> {
    if !(settings.sample_rate_hz >= 1e9 && settings.sample_rate_hz.is_finite()) {
        return Err(Error::Domain(format!(
            "sample rate {} Hz is below 1 GS/s",
            settings.sample_rate_hz
        )));
    }
    if !(settings.pulse_width_s > 0.0 && settings.horizon_s > 0.0) {
        return Err(Error::Domain("pulse width and horizon must be positive".into()));
    }
    let geom = LinkGeometry::for_scene(scene, model, settings.reference_hz)?;
    let response = geom.impulse_response(tx_port, rx_port, settings.reference_hz, settings.bandwidth_hz)?;
    Ok(render(response, settings))
}

pub(crate) fn render(response: ImpulseResponse, settings: &PulseSettings) -> PulseProfile {
    let taps = &response.taps;
    let first = response.first_arrival_s();
    let last = taps[taps.len() - 1].delay_s;
    let end = (last + settings.pulse_width_s).max(first + settings.horizon_s) + settings.pulse_width_s;
    let n = (end * settings.sample_rate_hz).ceil() as usize + 1;
    let times_s: Vec<f64> = (0..n).map(|i| i as f64 / settings.sample_rate_hz).collect();
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for t in taps {
        // sample indices, tolerant of products like 110.00000000000001
        let index = |x: f64| (x * settings.sample_rate_hz - 1e-9).ceil().max(0.0) as usize;
        let (lo, hi) = (index(t.delay_s), index(t.delay_s + settings.pulse_width_s));
        for s in samples.iter_mut().take(hi.min(n)).skip(lo) {
            *s += t.amplitude;
        }
    }
    let peak_power = taps.iter().map(|t| t.amplitude.norm_sqr()).fold(0.0, f64::max);
    let tail: f64 = taps
        .iter()
        .filter(|t| t.delay_s > first + settings.horizon_s)
        .map(|t| t.amplitude.norm_sqr())
        .fold(0.0, |a, b| a + b);
    PulseProfile {
        peak: peak_power.sqrt(),
        residual_ratio: tail / peak_power,
        rms_delay_spread_s: response.rms_delay_spread_s(),
        response,
        times_s,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Tap;

    #[test]
    fn single_tap_is_a_delayed_scaled_pulse() {
        let a = Complex64::new(0.3, -0.1);
        let response = ImpulseResponse {
            taps: vec![Tap {
                delay_s: 10e-9,
                amplitude: a,
            }],
            bandwidth_hz: 1e9,
        };
        let s = PulseSettings {
            sample_rate_hz: 10e9,
            ..PulseSettings::default()
        };
        let p = render(response, &s);
        let on: Vec<usize> = p
            .samples
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(on.len(), 10);
        assert_eq!(on[0], 100);
        assert!(on.iter().all(|&i| p.samples[i] == a));
        assert_eq!(p.residual_ratio, 0.0);
        assert_eq!(p.rms_delay_spread_s, 0.0);
    }
}
