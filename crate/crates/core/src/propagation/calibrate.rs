use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Received power measured at a given distance from the transmitting contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub distance_m: f64,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub frequency_hz: f64,
    pub alpha_np_per_m: f64,
    pub d0_m: f64,
    pub residual_rms_db: f64,
    /// Set when the unconstrained fit produced a negative attenuation and
    /// alpha was clamped.
    pub alpha_clamped: bool,
}

/// Smallest attenuation constant the fit will report.
const MIN_ALPHA: f64 = 1e-9;

/// Fits the surface model to received-power samples.
///
/// In dB the model is linear in `(20 log10 d0, alpha)`:
///
/// ```text
/// P(d) - P_tx + 20 log10 d = 20 log10 d0 - (20 / ln 10) alpha d
/// ```
///
/// so ordinary least squares over the samples recovers both parameters.
pub fn calibrate(samples: &[PowerSample], f_hz: f64, tx_power_dbm: f64) -> Result<CalibrationFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    for s in samples {
        if !(s.distance_m.is_finite() && s.distance_m > 0.0 && s.power_dbm.is_finite()) {
            return Err(Error::Fit(format!(
                "invalid sample ({} m, {} dBm)",
                s.distance_m, s.power_dbm
            )));
        }
    }
    let k = 20.0 / std::f64::consts::LN_10;
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.distance_m).collect();
    let ys: Vec<f64> = samples
        .iter()
        .map(|s| s.power_dbm - tx_power_dbm + 20.0 * s.distance_m.log10())
        .collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n {
        return Err(Error::Fit("samples do not span more than one distance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let mut alpha = -slope / k;
    let mut alpha_clamped = false;
    let mut intercept_used = intercept;
    if alpha < MIN_ALPHA {
        log::warn!("calibration produced alpha = {alpha:.3e} Np/m; clamping to {MIN_ALPHA:e}");
        alpha = MIN_ALPHA;
        alpha_clamped = true;
        // refit the intercept with the slope pinned
        intercept_used = my + k * alpha * mx;
    }
    let resid2: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept_used - k * alpha * x)).powi(2))
        .sum();
    Ok(CalibrationFit {
        frequency_hz: f_hz,
        alpha_np_per_m: alpha,
        d0_m: 10f64.powf(intercept_used / 20.0),
        residual_rms_db: (resid2 / n).sqrt(),
        alpha_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forward(alpha: f64, d0: f64, tx: f64, d: f64) -> f64 {
        tx + 20.0 * (d0 / d).log10() - 20.0 * alpha * d / std::f64::consts::LN_10
    }

    #[test]
    fn three_exact_samples_interpolate() {
        let s: Vec<PowerSample> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&d| PowerSample {
                distance_m: d,
                power_dbm: forward(0.8, 0.12, -3.0, d),
            })
            .collect();
        let fit = calibrate(&s, 2.4e9, -3.0).unwrap();
        assert!(fit.residual_rms_db < 1e-10);
        assert!((fit.alpha_np_per_m - 0.8).abs() < 1e-9 * 0.8);
        assert!(!fit.alpha_clamped);
    }

    #[test]
    fn rank_deficient_is_an_error() {
        let s = vec![
            PowerSample {
                distance_m: 1.0,
                power_dbm: -40.0
            };
            5
        ];
        assert!(matches!(calibrate(&s, 2.4e9, 0.0), Err(Error::Fit(_))));
        assert!(calibrate(&s[..2], 2.4e9, 0.0).is_err());
    }

    #[test]
    fn negative_alpha_is_clamped() {
        // power growing with distance faster than spreading allows
        let s: Vec<PowerSample> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&d| PowerSample {
                distance_m: d,
                power_dbm: -20.0 + 3.0 * d,
            })
            .collect();
        let fit = calibrate(&s, 2.4e9, 0.0).unwrap();
        assert!(fit.alpha_clamped);
        assert_eq!(fit.alpha_np_per_m, MIN_ALPHA);
    }
}
