use std::collections::BTreeMap;

use num_complex::Complex64;

use super::grid::IntegrationGrid;
use super::link::{loss_factor, LinkGeometry, Side};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Port};
use crate::propagation::{phase_velocity, SPEED_OF_LIGHT};

/// Cells along the shorter side of the lattice used to resolve the double
/// integral into delay clusters. The pair loop is quadratic in cell count.
const CLUSTER_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_s: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    /// Sorted by strictly increasing delay.
    pub taps: Vec<Tap>,
    pub bandwidth_hz: f64,
}

impl ImpulseResponse {
    fn from_raw(mut raw: Vec<Tap>, bandwidth_hz: f64) -> Result<Self> {
        raw.retain(|t| t.amplitude.norm() > 0.0);
        raw.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
        let mut taps: Vec<Tap> = Vec::with_capacity(raw.len());
        for t in raw {
            match taps.last_mut() {
                Some(last) if t.delay_s - last.delay_s <= 1e-15 => last.amplitude += t.amplitude,
                _ => taps.push(t),
            }
        }
        if taps.is_empty() {
            return Err(Error::Domain("no propagation path between the selected ports".into()));
        }
        Ok(ImpulseResponse { taps, bandwidth_hz })
    }

    pub fn first_arrival_s(&self) -> f64 {
        self.taps[0].delay_s
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.amplitude.norm_sqr()).sum()
    }

    /// Power-weighted mean delay.
    pub fn mean_delay_s(&self) -> f64 {
        let p = self.total_power();
        self.taps
            .iter()
            .map(|t| t.amplitude.norm_sqr() * t.delay_s)
            .sum::<f64>()
            / p
    }

    /// Root-mean-square delay spread.
    pub fn rms_delay_spread_s(&self) -> f64 {
        let p = self.total_power();
        let mean = self.mean_delay_s();
        let var = self
            .taps
            .iter()
            .map(|t| t.amplitude.norm_sqr() * (t.delay_s - mean).powi(2))
            .sum::<f64>()
            / p;
        var.max(0.0).sqrt()
    }

    /// Frequency response at `offset_hz` from the reference frequency.
    pub fn frequency_response(&self, offset_hz: f64) -> Complex64 {
        self.taps
            .iter()
            .map(|t| t.amplitude * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * offset_hz * t.delay_s))
            .sum()
    }
}

struct Bins {
    width: f64,
    acc: BTreeMap<i64, Complex64>,
}

impl Bins {
    fn new(bandwidth_hz: f64) -> Self {
        Bins {
            width: 1.0 / bandwidth_hz,
            acc: BTreeMap::new(),
        }
    }

    fn add(&mut self, delay: f64, a: Complex64) {
        let k = (delay / self.width).floor() as i64;
        *self.acc.entry(k).or_default() += a;
    }

    fn into_taps(self) -> impl Iterator<Item = Tap> {
        let w = self.width;
        self.acc.into_iter().map(move |(k, a)| Tap {
            delay_s: (k as f64 + 0.5) * w,
            amplitude: a,
        })
    }
}

impl LinkGeometry<'_> {
    pub fn impulse_response(
        &self,
        tx_port: usize,
        rx_port: usize,
        reference_hz: f64,
        bandwidth_hz: f64,
    ) -> Result<ImpulseResponse> {
        if tx_port >= self.tx.len() || rx_port >= self.rx.len() {
            return Err(Error::Domain(format!(
                "port pair (tx {tx_port}, rx {rx_port}) out of range for a {}x{} link",
                self.rx.len(),
                self.tx.len()
            )));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::Domain(format!("bandwidth {bandwidth_hz} Hz")));
        }
        let terms = self.model.terms;
        let material = &self.scene.surface.material;
        let coupling = *material.coupling();
        let d0 = material.d0();
        let air = self.model.air;
        let c = SPEED_OF_LIGHT;
        let mut raw = Vec::new();
        let mut bins = Bins::new(bandwidth_hz);

        match (self.rx[rx_port], self.tx[tx_port]) {
            (Port::Antenna(ra), Port::Antenna(ta)) => {
                if terms.air {
                    let d = ta.dist(ra);
                    raw.push(Tap {
                        delay_s: d / c,
                        amplitude: air.gain_unchecked(d, reference_hz),
                    });
                }
            }
            (rx, tx) if terms.surface => {
                let k = material.constants_at(reference_hz)?;
                let v = phase_velocity(reference_hz, material)?;
                match (rx, tx) {
                    (Port::Contact(_), Port::Contact(_)) => {
                        for p in self.surface_paths(rx_port, tx_port) {
                            raw.push(Tap {
                                delay_s: p.length / v,
                                amplitude: k.gain_unchecked(p.length, d0) * p.weight,
                            });
                        }
                        if coupling.c1 > 0.0 && terms.air {
                            let a = self.contact_of(Side::Tx, tx_port).pos;
                            let b = self.contact_of(Side::Rx, rx_port).pos;
                            self.double_clusters(a, b, k, v, reference_hz, &mut bins)?;
                        }
                    }
                    (Port::Antenna(ra), Port::Contact(tc)) | (Port::Contact(tc), Port::Antenna(ra)) if terms.air => {
                        let near = self.near_field(tc, ra, k);
                        if near.norm() > 0.0 {
                            let d = tc.dist(ra.footprint()).max(d0);
                            raw.push(Tap {
                                delay_s: d / v + ra.z / c,
                                amplitude: near,
                            });
                        }
                        let scale = if matches!(tx, Port::Contact(_)) {
                            coupling.c2
                        } else {
                            coupling.c3
                        };
                        if scale > 0.0 {
                            let (contact, antenna) = if matches!(tx, Port::Contact(_)) {
                                (self.contact_of(Side::Tx, tx_port), self.antenna_of(Side::Rx, rx_port))
                            } else {
                                (self.contact_of(Side::Rx, rx_port), self.antenna_of(Side::Tx, tx_port))
                            };
                            let n = self.single_len();
                            for idx in 0..n {
                                let ds = contact.dist[idx];
                                let da = antenna.dist[idx];
                                let g = k.gain_unchecked(ds, d0)
                                    * contact.atten[idx]
                                    * air.gain_unchecked(da, reference_hz)
                                    * (scale * self.weight);
                                bins.add(ds / v + da / c, g);
                            }
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        raw.extend(bins.into_taps());
        ImpulseResponse::from_raw(raw, bandwidth_hz)
    }

    fn single_len(&self) -> usize {
        match &self.quad {
            super::link::Quadrature::Grid { .. } => self.points.len(),
            super::link::Quadrature::MonteCarlo { n, .. } => *n,
        }
    }

    /// Delay clusters of the surface-air-surface integral on a coarse lattice.
    fn double_clusters(
        &self,
        a: Point2,
        b: Point2,
        k: crate::propagation::SurfaceConstants,
        v: f64,
        f_hz: f64,
        bins: &mut Bins,
    ) -> Result<()> {
        let surface = &self.scene.surface;
        let d0 = surface.material.d0();
        let c1 = surface.material.coupling().c1;
        let air = self.model.air;
        let grid = IntegrationGrid::new(surface, CLUSTER_GRID.min(self.model.grid.max(2)))?;
        let pts = grid.points();
        let w = grid.cell_area();
        let leg = |from: Point2| -> Vec<(f64, Complex64)> {
            pts.iter()
                .map(|&p| {
                    let d = from.dist(p).max(d0);
                    let atten = loss_factor(self.scene.obstacle_loss_db(from, (0, 0), p));
                    (d / v, k.gain_unchecked(d, d0) * atten)
                })
                .collect()
        };
        let la = leg(a);
        let lb = leg(b);
        for (p, &(ta, ga)) in pts.iter().zip(&la) {
            for (q, &(tb, gb)) in pts.iter().zip(&lb) {
                let d = p.dist(*q);
                let g = ga * air.gain_clamped(d, f_hz) * gb * (c1 * w * w);
                bins.add(ta + d / SPEED_OF_LIGHT + tb, g);
            }
        }
        Ok(())
    }
}
