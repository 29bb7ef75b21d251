//! Channel synthesis for hybrid surface/air links.
//!
//! Every (transmit port, receive port) pair maps to one of four gains:
//!
//! * contact to contact: direct surface path, edge reflections (image
//!   sources) and the composite surface-air-surface double integral scaled by
//!   `c1`;
//! * contact to antenna: surface-then-air integral scaled by `c2`, plus a
//!   near-field coupling term when the two sit within the coupling radius;
//! * antenna to contact: the mirror of the above with `c3`;
//! * antenna to antenna: direct line of sight, optionally with a correlated
//!   scattered component.
//!
//! Surface points are re-radiated at most once; there is no recursive
//! surface/air exchange.

mod air;
mod grid;
mod impulse;
mod link;

pub use air::{bessel_j0, AirMultipath};
pub use grid::IntegrationGrid;
pub use impulse::{ImpulseResponse, Tap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{validate_scene, Point2, Point3, Port, PortKind, Scene};
use crate::propagation::{AirModel, ComplexGain, FrequencyBand};

pub(crate) use link::LinkGeometry;

/// Calibration scalars of the composite channels.
///
/// `c1` weights the double surface integral (m^-4); `c2` and `c3` weight the
/// single surface integrals (m^-2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub near_field_coupling: f64,
    pub near_field_radius_m: f64,
}

impl Default for CouplingConstants {
    fn default() -> Self {
        CouplingConstants {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            near_field_coupling: 0.0,
            near_field_radius_m: 0.05,
        }
    }
}

impl CouplingConstants {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("near_field_coupling", self.near_field_coupling),
            ("near_field_radius_m", self.near_field_radius_m),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("coupling constant {name} = {v} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Additive white Gaussian receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub noise_floor_dbm_per_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            noise_floor_dbm_per_hz: -174.0,
            noise_figure_db: 6.0,
        }
    }
}

impl NoiseModel {
    pub fn noise_power_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.noise_floor_dbm_per_hz + 10.0 * bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// How the surface integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    /// Midpoint rule on the uniform lattice.
    #[default]
    Grid,
    /// Uniform random sampling with a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Switches for zeroing whole families of paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TermMask {
    /// Entries touching a surface contact.
    pub surface: bool,
    /// Entries touching an antenna.
    pub air: bool,
}

impl Default for TermMask {
    fn default() -> Self {
        TermMask {
            surface: true,
            air: true,
        }
    }
}

/// Default lattice resolution (cells along the shorter surface side).
pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_MAX_REFLECTION_ORDER: u32 = 3;

/// Model parameters that do not belong to the material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub air: AirModel,
    pub max_reflection_order: u32,
    pub grid: usize,
    pub estimator: Estimator,
    pub terms: TermMask,
    pub air_multipath: Option<AirMultipath>,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            air: AirModel::default(),
            max_reflection_order: DEFAULT_MAX_REFLECTION_ORDER,
            grid: DEFAULT_GRID,
            estimator: Estimator::Grid,
            terms: TermMask::default(),
            air_multipath: None,
        }
    }
}

impl ChannelModel {
    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }
}

/// `N_rx x N_tx` complex gains at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<Complex64>,
    pub frequency_hz: f64,
    pub rx_ports: Vec<PortKind>,
    pub tx_ports: Vec<PortKind>,
}

impl ChannelMatrix {
    pub fn new(
        entries: DMatrix<Complex64>,
        frequency_hz: f64,
        rx_ports: Vec<PortKind>,
        tx_ports: Vec<PortKind>,
    ) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Domain("channel matrix must be at least 1 x 1".into()));
        }
        if entries.nrows() != rx_ports.len() || entries.ncols() != tx_ports.len() {
            return Err(Error::Domain(format!(
                "{}x{} matrix with {} rx and {} tx port labels",
                entries.nrows(),
                entries.ncols(),
                rx_ports.len(),
                tx_ports.len()
            )));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("channel matrix entry".into()));
        }
        Ok(ChannelMatrix {
            entries,
            frequency_hz,
            rx_ports,
            tx_ports,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }
}

fn single(geom: &LinkGeometry<'_>, f_hz: f64) -> Result<ComplexGain> {
    Ok(geom.matrix_at(f_hz)?[(0, 0)])
}

/// Contact-to-contact gain.
pub fn h_ss(tx: Point2, rx: Point2, scene: &Scene, f_hz: f64, model: &ChannelModel) -> Result<ComplexGain> {
    let geom = LinkGeometry::from_ports(scene, model, vec![Port::Contact(tx)], vec![Port::Contact(rx)], f_hz)?;
    single(&geom, f_hz)
}

/// Contact-to-antenna gain.
pub fn h_sa(tx: Point2, rx: Point3, scene: &Scene, f_hz: f64, model: &ChannelModel) -> Result<ComplexGain> {
    let geom = LinkGeometry::from_ports(scene, model, vec![Port::Contact(tx)], vec![Port::Antenna(rx)], f_hz)?;
    single(&geom, f_hz)
}

/// Antenna-to-contact gain.
pub fn h_as(tx: Point3, rx: Point2, scene: &Scene, f_hz: f64, model: &ChannelModel) -> Result<ComplexGain> {
    let geom = LinkGeometry::from_ports(scene, model, vec![Port::Antenna(tx)], vec![Port::Contact(rx)], f_hz)?;
    single(&geom, f_hz)
}

/// Line-of-sight antenna-to-antenna gain.
pub fn h_aa(tx: Point3, rx: Point3, f_hz: f64, air: &AirModel) -> Result<ComplexGain> {
    crate::propagation::air_gain(tx.dist(rx), f_hz, air)
}

/// Full MIMO matrix between the scene's transmitter and receiver at `f_hz`.
pub fn build_mimo(scene: &Scene, f_hz: f64, model: &ChannelModel) -> Result<ChannelMatrix> {
    let geom = LinkGeometry::for_scene(scene, model, f_hz)?;
    geom.channel_matrix(f_hz)
}

/// One channel matrix per subcarrier of `band`.
pub fn csi(
    scene: &Scene,
    band: &FrequencyBand,
    n_subcarriers: usize,
    model: &ChannelModel,
) -> Result<Vec<ChannelMatrix>> {
    if n_subcarriers == 0 {
        return Err(Error::Domain("need at least one subcarrier".into()));
    }
    let geom = LinkGeometry::for_scene(scene, model, band.center_hz())?;
    csi_with(&geom, band, n_subcarriers)
}

pub(crate) fn csi_with(geom: &LinkGeometry<'_>, band: &FrequencyBand, n: usize) -> Result<Vec<ChannelMatrix>> {
    let freqs = band.subcarrier_frequencies(n);
    let material = &geom.scene().surface.material;
    for &f in [freqs[0], freqs[freqs.len() - 1]].iter() {
        if geom.uses_surface() {
            material.constants_at(f)?;
        }
    }
    freqs.par_iter().map(|&f| geom.channel_matrix(f)).collect()
}

/// Taps between one transmit and one receive port of the scene.
///
/// Ports are indexed as in [`crate::geometry::Node::ports`]. Amplitudes are
/// the complex gains at `reference_hz`; surface segments are delayed by the
/// phase velocity at that frequency. Integral contributions are gathered into
/// clusters of width `1 / bandwidth_hz`.
pub fn impulse_response(
    tx_port: usize,
    rx_port: usize,
    scene: &Scene,
    reference_hz: f64,
    bandwidth_hz: f64,
    model: &ChannelModel,
) -> Result<ImpulseResponse> {
    let geom = LinkGeometry::for_scene(scene, model, reference_hz)?;
    geom.impulse_response(tx_port, rx_port, reference_hz, bandwidth_hz)
}

pub(crate) fn checked_scene(scene: &Scene) -> Result<()> {
    validate_scene(scene).map_err(Error::InvalidScene)
}
