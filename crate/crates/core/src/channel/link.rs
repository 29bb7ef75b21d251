use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{Fft2, IntegrationGrid};
use super::{checked_scene, ChannelMatrix, ChannelModel, Estimator};
use crate::error::{Error, Result};
use crate::geometry::{image_sources, Point2, Point3, Port, PortKind, Scene};
use crate::propagation::{ComplexGain, SurfaceConstants};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// One direct or edge-reflected surface path between two contacts.
#[derive(Debug, Clone, Copy)]
pub(super) struct SurfacePath {
    pub length: f64,
    /// `refl^bounces` times the obstacle loss factor.
    pub weight: f64,
}

pub(super) struct ContactGeom {
    pub pos: Point2,
    /// Surface distance to every quadrature point, clamped to `d0`.
    pub dist: Vec<f64>,
    /// Obstacle loss factor of the surface leg to every quadrature point.
    pub atten: Vec<f64>,
}

pub(super) struct AntennaGeom {
    /// Air distance to every quadrature point, clamped to the air `d0`.
    pub dist: Vec<f64>,
}

pub(super) enum Quadrature {
    /// Midpoint lattice; the double integral runs through a padded FFT.
    Grid {
        grid: IntegrationGrid,
        fft: Fft2,
        kernel_dist: Vec<f64>,
    },
    /// Points `0..n` serve the single integrals; the double integral pairs
    /// point `s` with point `n + s`.
    MonteCarlo { n: usize, pair_dist: Vec<f64> },
}

/// Everything about a link that does not depend on frequency.
pub(crate) struct LinkGeometry<'a> {
    pub(super) scene: &'a Scene,
    pub(super) model: ChannelModel,
    pub(super) tx: Vec<Port>,
    pub(super) rx: Vec<Port>,
    pub(super) points: Vec<Point2>,
    pub(super) weight: f64,
    pub(super) quad: Quadrature,
    pub(super) contacts: Vec<ContactGeom>,
    pub(super) antennas: Vec<AntennaGeom>,
    /// Index into `contacts` or `antennas` for each tx port, then each rx port.
    tx_idx: Vec<usize>,
    rx_idx: Vec<usize>,
    /// Surface paths for each (rx, tx) contact pair, row-major over ports.
    pub(super) paths: Vec<Vec<SurfacePath>>,
    scatter: Option<DMatrix<Complex64>>,
}

impl<'a> LinkGeometry<'a> {
    pub fn for_scene(scene: &'a Scene, model: &ChannelModel, reference_hz: f64) -> Result<Self> {
        checked_scene(scene)?;
        let tx = scene.transmitter().expect("validated").ports();
        let rx = scene.receiver().expect("validated").ports();
        Self::build(scene, model, tx, rx, reference_hz)
    }

    pub fn from_ports(
        scene: &'a Scene,
        model: &ChannelModel,
        tx: Vec<Port>,
        rx: Vec<Port>,
        reference_hz: f64,
    ) -> Result<Self> {
        for p in tx.iter().chain(&rx) {
            if let Port::Contact(c) = p {
                if !scene.surface.contains(*c) {
                    return Err(Error::Domain(format!("contact ({}, {}) is off the surface", c.x, c.y)));
                }
            }
        }
        Self::build(scene, model, tx, rx, reference_hz)
    }

    fn build(scene: &'a Scene, model: &ChannelModel, tx: Vec<Port>, rx: Vec<Port>, reference_hz: f64) -> Result<Self> {
        model.air.validate()?;
        let surface = &scene.surface;
        let material = &surface.material;
        let d0 = material.d0();
        let d0_air = model.air.d0_m;
        let area = surface.width_m * surface.height_m;

        let (points, weight, quad) = match model.estimator {
            Estimator::Grid => {
                let grid = IntegrationGrid::new(surface, model.grid)?;
                let (mx, my) = grid.padded();
                let quad = Quadrature::Grid {
                    grid,
                    fft: Fft2::new(mx, my),
                    kernel_dist: grid.offset_distances(),
                };
                (grid.points(), grid.cell_area(), quad)
            }
            Estimator::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::Grid("Monte Carlo estimator needs at least one sample".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let points: Vec<Point2> = (0..2 * samples)
                    .map(|_| {
                        Point2::new(
                            rng.random::<f64>() * surface.width_m,
                            rng.random::<f64>() * surface.height_m,
                        )
                    })
                    .collect();
                let pair_dist = (0..samples)
                    .map(|s| points[s].dist(points[samples + s]).max(d0_air))
                    .collect();
                let quad = Quadrature::MonteCarlo { n: samples, pair_dist };
                (points, area / samples as f64, quad)
            }
        };

        let mut contacts = Vec::new();
        let mut antennas = Vec::new();
        let mut index = |p: &Port| -> usize {
            match *p {
                Port::Contact(c) => {
                    let dist = points.iter().map(|q| c.dist(*q).max(d0)).collect();
                    let atten = points
                        .iter()
                        .map(|q| loss_factor(scene.obstacle_loss_db(c, (0, 0), *q)))
                        .collect();
                    contacts.push(ContactGeom { pos: c, dist, atten });
                    contacts.len() - 1
                }
                Port::Antenna(a) => {
                    let dist = points.iter().map(|q| a.dist_to_surface_point(*q).max(d0_air)).collect();
                    antennas.push(AntennaGeom { dist });
                    antennas.len() - 1
                }
            }
        };
        let tx_idx: Vec<usize> = tx.iter().map(&mut index).collect();
        let rx_idx: Vec<usize> = rx.iter().map(&mut index).collect();

        let order = model.max_reflection_order;
        let refl = material.refl_coeff();
        let mut paths = Vec::with_capacity(rx.len() * tx.len());
        for r in &rx {
            for t in &tx {
                let (Port::Contact(rc), Port::Contact(tc)) = (r, t) else {
                    paths.push(Vec::new());
                    continue;
                };
                let direct = tc.dist(*rc);
                if direct < d0 {
                    log::warn!(
                        "contacts ({}, {}) and ({}, {}) are {direct:.4} m apart, inside the {d0} m reference distance; clamping",
                        tc.x,
                        tc.y,
                        rc.x,
                        rc.y
                    );
                }
                let mut list = Vec::new();
                for img in image_sources(*tc, order, surface)? {
                    let w = refl.powi(img.bounces as i32);
                    if w == 0.0 {
                        continue;
                    }
                    let loss = scene.obstacle_loss_db(img.position, img.cell, *rc);
                    list.push(SurfacePath {
                        length: img.position.dist(*rc).max(d0),
                        weight: w * loss_factor(loss),
                    });
                }
                paths.push(list);
            }
        }

        let mut geom = LinkGeometry {
            scene,
            model: *model,
            tx,
            rx,
            points,
            weight,
            quad,
            contacts,
            antennas,
            tx_idx,
            rx_idx,
            paths,
            scatter: None,
        };
        for r in &geom.rx {
            for t in &geom.tx {
                if let (Port::Antenna(ra), Port::Antenna(ta)) = (r, t) {
                    let d = ta.dist(*ra);
                    if !(d >= d0_air) {
                        return Err(Error::NearField {
                            distance: d,
                            reference: d0_air,
                        });
                    }
                }
            }
        }
        if let Some(mp) = model.air_multipath {
            geom.scatter = Some(mp.scatter_matrix(&geom.tx, &geom.rx, reference_hz)?);
        }
        Ok(geom)
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn uses_surface(&self) -> bool {
        self.model.terms.surface && !self.contacts.is_empty()
    }

    pub(super) fn contact_of(&self, side: Side, port: usize) -> &ContactGeom {
        let idx = match side {
            Side::Tx => self.tx_idx[port],
            Side::Rx => self.rx_idx[port],
        };
        &self.contacts[idx]
    }

    pub(super) fn antenna_of(&self, side: Side, port: usize) -> &AntennaGeom {
        let idx = match side {
            Side::Tx => self.tx_idx[port],
            Side::Rx => self.rx_idx[port],
        };
        &self.antennas[idx]
    }

    /// Surface field of a contact over the quadrature points.
    pub(super) fn contact_field(&self, c: &ContactGeom, k: SurfaceConstants) -> Vec<Complex64> {
        let d0 = self.scene.surface.material.d0();
        c.dist
            .iter()
            .zip(&c.atten)
            .map(|(&d, &a)| k.gain_unchecked(d, d0) * a)
            .collect()
    }

    pub(super) fn antenna_field(&self, a: &AntennaGeom, f_hz: f64) -> Vec<Complex64> {
        a.dist.iter().map(|&d| self.model.air.gain_unchecked(d, f_hz)).collect()
    }

    /// Surface-wave pickup by an antenna hovering within the coupling radius.
    pub(super) fn near_field(&self, contact: Point2, antenna: Point3, k: SurfaceConstants) -> ComplexGain {
        let coupling = self.scene.surface.material.coupling();
        if coupling.near_field_coupling == 0.0 || antenna.z > coupling.near_field_radius_m {
            return ZERO;
        }
        let d0 = self.scene.surface.material.d0();
        let footprint = antenna.footprint();
        let d = contact.dist(footprint).max(d0);
        let loss = loss_factor(self.scene.obstacle_loss_db(contact, (0, 0), footprint));
        k.gain_unchecked(d, d0) * (coupling.near_field_coupling * loss)
    }

    pub(super) fn surface_paths(&self, rx: usize, tx: usize) -> &[SurfacePath] {
        &self.paths[rx * self.tx.len() + tx]
    }

    /// Raw `N_rx x N_tx` gains at `f_hz`.
    pub fn matrix_at(&self, f_hz: f64) -> Result<DMatrix<Complex64>> {
        let terms = self.model.terms;
        let material = &self.scene.surface.material;
        let coupling = *material.coupling();
        let need_surface = self.uses_surface();
        let k = if need_surface {
            Some(material.constants_at(f_hz)?)
        } else {
            None
        };
        let d0 = material.d0();
        let w = self.weight;

        // per-contact fields, transformed when the double integral is on
        let mut fields: Vec<Option<Vec<Complex64>>> = vec![None; self.contacts.len()];
        let mut spectra: Vec<Option<Vec<Complex64>>> = vec![None; self.contacts.len()];
        let mut kernel_hat = None;
        if let Some(k) = k {
            for (i, c) in self.contacts.iter().enumerate() {
                fields[i] = Some(self.contact_field(c, k));
            }
            let any_pair = self.tx.iter().any(|p| p.kind() == PortKind::Contact)
                && self.rx.iter().any(|p| p.kind() == PortKind::Contact);
            if coupling.c1 > 0.0 && any_pair {
                if let Quadrature::Grid { grid, fft, kernel_dist } = &self.quad {
                    let mut kh: Vec<Complex64> = kernel_dist
                        .iter()
                        .map(|&d| self.model.air.gain_clamped(d, f_hz))
                        .collect();
                    fft.forward_inplace(&mut kh);
                    kernel_hat = Some(kh);
                    for (i, f) in fields.iter().enumerate() {
                        spectra[i] = Some(fft.forward_padded(f.as_ref().expect("set above"), grid.nx, grid.ny));
                    }
                }
            }
        }
        let mut antenna_fields: Vec<Option<Vec<Complex64>>> = vec![None; self.antennas.len()];
        let single_integrals = need_surface && terms.air;
        if single_integrals && (coupling.c2 > 0.0 || coupling.c3 > 0.0) {
            for (i, a) in self.antennas.iter().enumerate() {
                antenna_fields[i] = Some(self.antenna_field(a, f_hz));
            }
        }
        let n_single = match &self.quad {
            Quadrature::Grid { .. } => self.points.len(),
            Quadrature::MonteCarlo { n, .. } => *n,
        };

        let mut h = DMatrix::from_element(self.rx.len(), self.tx.len(), ZERO);
        for (i, r) in self.rx.iter().enumerate() {
            for (j, t) in self.tx.iter().enumerate() {
                let (ri, ti) = (self.rx_idx[i], self.tx_idx[j]);
                h[(i, j)] = match (r, t) {
                    (Port::Contact(_), Port::Contact(_)) => {
                        let Some(k) = k else { continue };
                        let mut acc = ZERO;
                        for p in self.surface_paths(i, j) {
                            acc += k.gain_unchecked(p.length, d0) * p.weight;
                        }
                        if coupling.c1 > 0.0 && terms.air {
                            acc += self.composite(ti, ri, &fields, &spectra, kernel_hat.as_deref(), f_hz)
                                * (coupling.c1 * w * w);
                        }
                        acc
                    }
                    (Port::Antenna(ra), Port::Contact(tc)) => {
                        let Some(k) = k else { continue };
                        if !terms.air {
                            continue;
                        }
                        let mut acc = self.near_field(*tc, *ra, k);
                        if coupling.c2 > 0.0 {
                            let a = &fields[ti].as_ref().expect("surface fields")[..n_single];
                            let b = &antenna_fields[ri].as_ref().expect("antenna fields")[..n_single];
                            acc += dot(a, b) * (coupling.c2 * w);
                        }
                        acc
                    }
                    (Port::Contact(rc), Port::Antenna(ta)) => {
                        let Some(k) = k else { continue };
                        if !terms.air {
                            continue;
                        }
                        let mut acc = self.near_field(*rc, *ta, k);
                        if coupling.c3 > 0.0 {
                            let a = &antenna_fields[ti].as_ref().expect("antenna fields")[..n_single];
                            let b = &fields[ri].as_ref().expect("surface fields")[..n_single];
                            acc += dot(a, b) * (coupling.c3 * w);
                        }
                        acc
                    }
                    (Port::Antenna(ra), Port::Antenna(ta)) => {
                        if !terms.air {
                            continue;
                        }
                        let los = self.model.air.gain_unchecked(ta.dist(*ra), f_hz);
                        match (&self.scatter, self.model.air_multipath) {
                            (Some(s), Some(mp)) => mp.combine(los, s[(i, j)]),
                            _ => los,
                        }
                    }
                };
            }
        }
        Ok(h)
    }

    /// Double surface integral between tx contact `ti` and rx contact `ri`,
    /// without the `c1 * w^2` factor.
    fn composite(
        &self,
        ti: usize,
        ri: usize,
        fields: &[Option<Vec<Complex64>>],
        spectra: &[Option<Vec<Complex64>>],
        kernel_hat: Option<&[Complex64]>,
        f_hz: f64,
    ) -> Complex64 {
        match &self.quad {
            Quadrature::Grid { fft, .. } => fft.bilinear(
                spectra[ti].as_ref().expect("spectrum"),
                kernel_hat.expect("kernel"),
                spectra[ri].as_ref().expect("spectrum"),
            ),
            Quadrature::MonteCarlo { n, pair_dist } => {
                let a = fields[ti].as_ref().expect("field");
                let b = fields[ri].as_ref().expect("field");
                let mut acc = ZERO;
                for s in 0..*n {
                    acc += a[s] * self.model.air.gain_unchecked(pair_dist[s], f_hz) * b[n + s];
                }
                // each pair stands for area^2 / n; the caller multiplies by
                // (area / n)^2
                acc * *n as f64
            }
        }
    }

    pub fn channel_matrix(&self, f_hz: f64) -> Result<ChannelMatrix> {
        let entries = self.matrix_at(f_hz)?;
        ChannelMatrix::new(
            entries,
            f_hz,
            self.rx.iter().map(Port::kind).collect(),
            self.tx.iter().map(Port::kind).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Side {
    Tx,
    Rx,
}

pub(super) fn loss_factor(db: f64) -> f64 {
    if db == 0.0 {
        1.0
    } else {
        10f64.powf(-db / 20.0)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
