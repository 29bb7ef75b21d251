use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Port};
use crate::propagation::SPEED_OF_LIGHT;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Rician scattering on antenna-to-antenna entries.
///
/// The scattered part is a complex Gaussian matrix shaped by Kronecker
/// correlation at both ends, with the classic isotropic-scattering
/// correlation `J0(2 pi s / lambda)` between antennas `s` apart. It is drawn
/// once per seed and held fixed across subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirMultipath {
    /// Ratio of line-of-sight to scattered power, in dB.
    pub k_factor_db: f64,
    pub seed: u64,
}

impl AirMultipath {
    fn k_linear(&self) -> f64 {
        10f64.powf(self.k_factor_db / 10.0)
    }

    /// Mixes a line-of-sight gain with a unit-variance scattered sample of the
    /// same average power.
    pub(crate) fn combine(&self, los: Complex64, scattered: Complex64) -> Complex64 {
        let k = self.k_linear();
        los * (k / (k + 1.0)).sqrt() + scattered * (los.norm() / (k + 1.0).sqrt())
    }

    /// Scattered sample for every (rx, tx) antenna pair; contact rows and
    /// columns are left at zero.
    pub(crate) fn scatter_matrix(&self, tx: &[Port], rx: &[Port], reference_hz: f64) -> Result<DMatrix<Complex64>> {
        if !self.k_factor_db.is_finite() {
            return Err(Error::Domain(format!("K-factor {} dB", self.k_factor_db)));
        }
        let antennas = |ports: &[Port]| -> Vec<(usize, Point3)> {
            ports
                .iter()
                .enumerate()
                .filter_map(|(i, p)| match p {
                    Port::Antenna(a) => Some((i, *a)),
                    Port::Contact(_) => None,
                })
                .collect()
        };
        let ta = antennas(tx);
        let ra = antennas(rx);
        let mut out = DMatrix::from_element(rx.len(), tx.len(), Complex64::new(0.0, 0.0));
        if ta.is_empty() || ra.is_empty() {
            return Ok(out);
        }
        let lambda = SPEED_OF_LIGHT / reference_hz;
        let rt = correlation_sqrt(&ta.iter().map(|a| a.1).collect::<Vec<_>>(), lambda);
        let rr = correlation_sqrt(&ra.iter().map(|a| a.1).collect::<Vec<_>>(), lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let g = DMatrix::from_fn(ra.len(), ta.len(), |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * half, im * half)
        });
        let s = rr * g * rt;
        for (a, &(i, _)) in ra.iter().enumerate() {
            for (b, &(j, _)) in ta.iter().enumerate() {
                out[(i, j)] = s[(a, b)];
            }
        }
        Ok(out)
    }
}

/// Symmetric square root of the spatial correlation matrix of `positions`.
pub(crate) fn correlation_sqrt(positions: &[Point3], lambda: f64) -> DMatrix<Complex64> {
    let n = positions.len();
    let r = DMatrix::from_fn(n, n, |i, j| {
        bessel_j0(2.0 * std::f64::consts::PI * positions[i].dist(positions[j]) / lambda)
    });
    let eig = SymmetricEigen::new(r);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    root.map(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        // first zero of J0
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn scatter_covariance_matches_bessel_correlation() {
        // two tx antennas a quarter wavelength apart, one rx antenna
        let f = 2.4e9;
        let lambda = SPEED_OF_LIGHT / f;
        let s = lambda / 4.0;
        let tx = [
            Port::Antenna(Point3::new(0.0, 0.0, 0.01)),
            Port::Antenna(Point3::new(s, 0.0, 0.01)),
        ];
        let rx = [Port::Antenna(Point3::new(1.0, 0.0, 0.01))];
        let trials = 20_000;
        let (mut p0, mut p1, mut cross) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for seed in 0..trials {
            let m = AirMultipath { k_factor_db: 0.0, seed }
                .scatter_matrix(&tx, &rx, f)
                .unwrap();
            p0 += m[(0, 0)].norm_sqr();
            p1 += m[(0, 1)].norm_sqr();
            cross += m[(0, 0)] * m[(0, 1)].conj();
        }
        let t = trials as f64;
        let expected = libm::j0(std::f64::consts::PI / 2.0);
        assert!((p0 / t - 1.0).abs() < 0.05);
        assert!((p1 / t - 1.0).abs() < 0.05);
        assert!((cross.re / t - expected).abs() < 0.05, "{} vs {expected}", cross.re / t);
        assert!((cross.im / t).abs() < 0.05);
    }

    #[test]
    fn contacts_get_no_scatter() {
        let tx = [
            Port::Contact(crate::geometry::Point2::new(0.1, 0.1)),
            Port::Antenna(Point3::new(0.0, 0.0, 0.01)),
        ];
        let rx = [Port::Antenna(Point3::new(1.0, 0.0, 0.01))];
        let m = AirMultipath {
            k_factor_db: 3.0,
            seed: 7,
        }
        .scatter_matrix(&tx, &rx, 2.4e9)
        .unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
        assert!(m[(0, 1)].norm() > 0.0);
    }
}
