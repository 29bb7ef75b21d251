use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Node, NodeRole, Obstacle, Point2, Point3, Scene, SurfaceSpec};
use crate::propagation::MaterialLibrary;

pub const FOOT_M: f64 = 0.3048;

/// Antenna spacing of the over-the-air MIMO baseline.
pub const AIR_MIMO_SPACING_M: f64 = 0.0625;

/// Radio configuration of both link ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMode {
    /// One antenna per node.
    Siso,
    /// One surface contact per node, no antenna.
    SurfaceSiso,
    /// Two antennas per node, no surface contact.
    AirMimo,
    /// One contact and one antenna per node.
    Surface2x2,
    /// Two contacts and one antenna per node.
    Surface3x3,
}

impl LinkMode {
    pub const ALL: [LinkMode; 5] = [
        LinkMode::Siso,
        LinkMode::SurfaceSiso,
        LinkMode::AirMimo,
        LinkMode::Surface2x2,
        LinkMode::Surface3x3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LinkMode::Siso => "siso",
            LinkMode::SurfaceSiso => "surface-siso",
            LinkMode::AirMimo => "air-mimo",
            LinkMode::Surface2x2 => "surface-2x2",
            LinkMode::Surface3x3 => "surface-3x3",
        }
    }
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LinkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkMode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Domain(format!("unknown link mode '{s}'")))
    }
}

/// Where devices sit on a surface and how their ports are arranged.
///
/// The transmitter sits at `x = tx_x_m` and the receiver `distance` further
/// along the long axis, both on the line `y = lane_y_m`. Each node's first
/// contact is at its anchor; the antenna sits `separation` to the side of it
/// at `antenna_height_m`, and a second contact (3x3) sits
/// `contact_spacing_m` to the other side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneTemplate {
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub tx_x_m: f64,
    pub lane_y_m: f64,
    #[serde(default = "default_height")]
    pub antenna_height_m: f64,
    #[serde(default = "default_separation")]
    pub separation_m: f64,
    #[serde(default = "default_contact_spacing")]
    pub contact_spacing_m: f64,
    #[serde(default = "default_air_spacing")]
    pub air_spacing_m: f64,
}

fn default_height() -> f64 {
    0.005
}

fn default_separation() -> f64 {
    0.01
}

fn default_contact_spacing() -> f64 {
    0.03
}

fn default_air_spacing() -> f64 {
    AIR_MIMO_SPACING_M
}

impl SceneTemplate {
    fn on(material: &str, width_m: f64, height_m: f64) -> Self {
        SceneTemplate {
            surface: SurfaceSpec {
                width_m,
                height_m,
                material: MaterialLibrary::builtin()
                    .get(material)
                    .expect("built-in material")
                    .clone(),
            },
            obstacles: Vec::new(),
            tx_x_m: 0.0,
            lane_y_m: height_m / 2.0,
            antenna_height_m: default_height(),
            separation_m: default_separation(),
            contact_spacing_m: default_contact_spacing(),
            air_spacing_m: default_air_spacing(),
        }
    }

    /// 16 ft x 2 ft painted sheet.
    pub fn spraypaint() -> Self {
        Self::on("spraypaint", 16.0 * FOOT_M, 2.0 * FOOT_M)
    }

    /// 10 ft x 1 ft tablecloth.
    pub fn cloth() -> Self {
        Self::on("cloth", 10.0 * FOOT_M, 1.0 * FOOT_M)
    }

    pub fn with_separation(mut self, separation_m: f64) -> Self {
        self.separation_m = separation_m;
        self
    }

    fn node(&self, id: &str, role: NodeRole, x: f64, mode: LinkMode) -> Node {
        let y = self.lane_y_m;
        let z = self.antenna_height_m;
        let antenna = Point3::new(x, y - self.separation_m, z);
        let (contacts, antennas) = match mode {
            LinkMode::Siso => (vec![], vec![antenna]),
            LinkMode::SurfaceSiso => (vec![Point2::new(x, y)], vec![]),
            LinkMode::AirMimo => {
                let h = self.air_spacing_m / 2.0;
                (vec![], vec![Point3::new(x, y - h, z), Point3::new(x, y + h, z)])
            }
            LinkMode::Surface2x2 => (vec![Point2::new(x, y)], vec![antenna]),
            LinkMode::Surface3x3 => (
                vec![Point2::new(x, y), Point2::new(x, y + self.contact_spacing_m)],
                vec![antenna],
            ),
        };
        Node {
            id: id.into(),
            role,
            contacts,
            antennas,
        }
    }

    /// Two-node scene with the receiver `distance_m` from the transmitter.
    pub fn scene(&self, mode: LinkMode, distance_m: f64) -> Result<Scene> {
        if !(distance_m.is_finite() && distance_m > 0.0) {
            return Err(Error::Domain(format!("link distance {distance_m} m")));
        }
        let scene = Scene {
            surface: self.surface.clone(),
            nodes: vec![
                self.node("tx", NodeRole::Transmitter, self.tx_x_m, mode),
                self.node("rx", NodeRole::Receiver, self.tx_x_m + distance_m, mode),
            ],
            obstacles: self.obstacles.clone(),
        };
        crate::geometry::validate_scene(&scene).map_err(Error::InvalidScene)?;
        Ok(scene)
    }
}

/// Distances of the throughput sweeps, 1 to 16 ft.
pub fn sweep_distances_ft() -> Vec<f64> {
    (1..=16).map(f64::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_port_counts() {
        let t = SceneTemplate::spraypaint();
        for (mode, ports) in [
            (LinkMode::Siso, 1),
            (LinkMode::SurfaceSiso, 1),
            (LinkMode::AirMimo, 2),
            (LinkMode::Surface2x2, 2),
            (LinkMode::Surface3x3, 3),
        ] {
            let s = t.scene(mode, 4.0 * FOOT_M).unwrap();
            assert_eq!(s.transmitter().unwrap().port_count(), ports);
            assert_eq!(s.receiver().unwrap().port_count(), ports);
        }
    }

    #[test]
    fn full_length_fits() {
        let t = SceneTemplate::spraypaint();
        assert!(t.scene(LinkMode::Surface3x3, 16.0 * FOOT_M).is_ok());
        assert!(t.scene(LinkMode::Surface3x3, 17.0 * FOOT_M).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in LinkMode::ALL {
            assert_eq!(m.label().parse::<LinkMode>().unwrap(), m);
        }
    }
}
