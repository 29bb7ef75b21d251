//! Scene description: the rectangular surface, the devices placed on it and
//! any objects lying on top.

mod images;

pub use images::{image_sources, mirror_coord, ImageSource, MAX_IMAGE_ORDER};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::propagation::MaterialParams;

/// Point on the surface plane, meters from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Point in space; `z` is the height above the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lift(self, z: f64) -> Point3 {
        Point3::new(self.x, self.y, z)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dist(self, o: Point3) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn dist_to_surface_point(self, p: Point2) -> f64 {
        self.dist(p.lift(0.0))
    }

    pub fn footprint(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Axis-aligned rectangle on the surface plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for Rect {
    fn from(a: [f64; 4]) -> Self {
        Rect {
            x0: a[0].min(a[2]),
            y0: a[1].min(a[3]),
            x1: a[0].max(a[2]),
            y1: a[1].max(a[3]),
        }
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

impl Rect {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Liang-Barsky clip: does the closed segment `a -> b` touch the rectangle?
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-dx, a.x - self.x0),
            (dx, self.x1 - a.x),
            (-dy, a.y - self.y0),
            (dy, self.y1 - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub material: MaterialParams,
}

impl SurfaceSpec {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.x <= self.width_m && p.y >= 0.0 && p.y <= self.height_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Transmitter,
    Receiver,
}

/// A device: surface contacts plus over-the-air antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub role: NodeRole,
    #[serde(default)]
    pub contacts: Vec<Point2>,
    #[serde(default)]
    pub antennas: Vec<Point3>,
}

/// One radio port of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Port {
    Contact(Point2),
    Antenna(Point3),
}

impl Port {
    pub fn kind(&self) -> PortKind {
        match self {
            Port::Contact(_) => PortKind::Contact,
            Port::Antenna(_) => PortKind::Antenna,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortKind {
    Contact,
    Antenna,
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortKind::Contact => "surface-contact",
            PortKind::Antenna => "air-antenna",
        })
    }
}

impl Node {
    /// Contacts first, then antennas.
    pub fn ports(&self) -> Vec<Port> {
        self.contacts
            .iter()
            .map(|&c| Port::Contact(c))
            .chain(self.antennas.iter().map(|&a| Port::Antenna(a)))
            .collect()
    }

    pub fn port_count(&self) -> usize {
        self.contacts.len() + self.antennas.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Metal,
    Plastic,
    Wood,
}

impl ObstacleKind {
    pub fn default_perturbation_db(self) -> f64 {
        3.0
    }
}

/// An object resting on the surface. Surface paths whose straight line
/// crosses the footprint lose `perturbation_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub footprint: Rect,
    pub kind: ObstacleKind,
    #[serde(default = "default_perturbation")]
    pub perturbation_db: f64,
}

fn default_perturbation() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub surface: SurfaceSpec,
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn transmitter(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.role == NodeRole::Transmitter)
    }

    pub fn receiver(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.role == NodeRole::Receiver)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Total dB loss from obstacles along the unfolded surface path from
    /// image cell `cell` of `src` to `dst`.
    pub fn obstacle_loss_db(&self, src_image: Point2, cell: (i32, i32), dst: Point2) -> f64 {
        if self.obstacles.is_empty() {
            return 0.0;
        }
        let (w, h) = (self.surface.width_m, self.surface.height_m);
        let (m, n) = cell;
        let mut loss = 0.0;
        for o in &self.obstacles {
            for a in m.min(0)..=m.max(0) {
                for b in n.min(0)..=n.max(0) {
                    let (xa, xb) = (mirror_coord(o.footprint.x0, a, w), mirror_coord(o.footprint.x1, a, w));
                    let (ya, yb) = (mirror_coord(o.footprint.y0, b, h), mirror_coord(o.footprint.y1, b, h));
                    let r = Rect::from([xa, ya, xb, yb]);
                    if r.intersects_segment(src_image, dst) {
                        loss += o.perturbation_db;
                    }
                }
            }
        }
        loss
    }
}

/// A single problem found by [`validate_scene`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidSurface {
        width: f64,
        height: f64,
    },
    ContactOutside {
        node: String,
        index: usize,
        point: Point2,
        width: f64,
        height: f64,
    },
    AntennaBelowSurface {
        node: String,
        index: usize,
        z: f64,
    },
    NonFinitePosition {
        node: String,
    },
    NodeWithoutPorts {
        node: String,
    },
    DuplicateNodeId {
        node: String,
    },
    NoTransmitter,
    NoReceiver,
    ObstacleOutside {
        index: usize,
    },
    NegativePerturbation {
        index: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidSurface { width, height } => {
                write!(f, "surface size {width} x {height} m must be positive")
            }
            Violation::ContactOutside { node, index, point, width, height } => write!(
                f,
                "contact outside surface: node '{node}' contact {index} at ({}, {}) not within [0, {width}] x [0, {height}]",
                point.x, point.y
            ),
            Violation::AntennaBelowSurface { node, index, z } => {
                write!(f, "node '{node}' antenna {index} has z = {z} < 0")
            }
            Violation::NonFinitePosition { node } => write!(f, "node '{node}' has a non-finite position"),
            Violation::NodeWithoutPorts { node } => {
                write!(f, "node '{node}' has neither contacts nor antennas")
            }
            Violation::DuplicateNodeId { node } => write!(f, "duplicate node id '{node}'"),
            Violation::NoTransmitter => f.write_str("no transmitter"),
            Violation::NoReceiver => f.write_str("no receiver"),
            Violation::ObstacleOutside { index } => {
                write!(f, "obstacle {index} footprint extends outside the surface")
            }
            Violation::NegativePerturbation { index, value } => {
                write!(f, "obstacle {index} perturbation {value} dB is negative")
            }
        }
    }
}

/// Checks every scene invariant and reports all violations.
pub fn validate_scene(scene: &Scene) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let s = &scene.surface;
    let (w, h) = (s.width_m, s.height_m);
    if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        out.push(Violation::InvalidSurface { width: w, height: h });
    }
    let mut seen = HashSet::new();
    for node in &scene.nodes {
        if !seen.insert(node.id.as_str()) {
            out.push(Violation::DuplicateNodeId { node: node.id.clone() });
        }
        if node.port_count() == 0 {
            out.push(Violation::NodeWithoutPorts { node: node.id.clone() });
        }
        let finite = node.contacts.iter().all(|p| p.is_finite()) && node.antennas.iter().all(|p| p.is_finite());
        if !finite {
            out.push(Violation::NonFinitePosition { node: node.id.clone() });
        }
        for (i, &c) in node.contacts.iter().enumerate() {
            if c.is_finite() && !s.contains(c) {
                out.push(Violation::ContactOutside {
                    node: node.id.clone(),
                    index: i,
                    point: c,
                    width: w,
                    height: h,
                });
            }
        }
        for (i, a) in node.antennas.iter().enumerate() {
            if a.z < 0.0 {
                out.push(Violation::AntennaBelowSurface {
                    node: node.id.clone(),
                    index: i,
                    z: a.z,
                });
            }
        }
    }
    if scene.transmitter().is_none() {
        out.push(Violation::NoTransmitter);
    }
    if scene.receiver().is_none() {
        out.push(Violation::NoReceiver);
    }
    for (i, o) in scene.obstacles.iter().enumerate() {
        let r = o.footprint;
        let inside = [r.x0, r.y0, r.x1, r.y1].iter().all(|v| v.is_finite())
            && s.contains(Point2::new(r.x0, r.y0))
            && s.contains(Point2::new(r.x1, r.y1));
        if !inside {
            out.push(Violation::ObstacleOutside { index: i });
        }
        if !(o.perturbation_db >= 0.0) {
            out.push(Violation::NegativePerturbation {
                index: i,
                value: o.perturbation_db,
            });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::MaterialLibrary;

    pub(crate) fn two_node_scene() -> Scene {
        Scene {
            surface: SurfaceSpec {
                width_m: 3.0,
                height_m: 0.3,
                material: MaterialLibrary::builtin().get("cloth").unwrap().clone(),
            },
            nodes: vec![
                Node {
                    id: "tx".into(),
                    role: NodeRole::Transmitter,
                    contacts: vec![Point2::new(0.2, 0.15)],
                    antennas: vec![Point3::new(0.2, 0.16, 0.01)],
                },
                Node {
                    id: "rx".into(),
                    role: NodeRole::Receiver,
                    contacts: vec![Point2::new(1.2, 0.15)],
                    antennas: vec![Point3::new(1.2, 0.16, 0.01)],
                },
            ],
            obstacles: vec![],
        }
    }

    #[test]
    fn well_formed_scene_is_ok() {
        assert!(validate_scene(&two_node_scene()).is_ok());
    }

    #[test]
    fn contact_outside_is_reported() {
        let mut s = two_node_scene();
        s.nodes[0].contacts[0] = Point2::new(3.1, 0.0);
        let v = validate_scene(&s).unwrap_err();
        assert!(matches!(v[0], Violation::ContactOutside { .. }));
        assert!(v[0].to_string().contains("contact outside surface"));
        assert!(v[0].to_string().contains("'tx'"));
    }

    #[test]
    fn empty_scene_reports_everything() {
        let mut s = two_node_scene();
        s.nodes.clear();
        s.surface.width_m = -1.0;
        let v = validate_scene(&s).unwrap_err();
        assert!(v.contains(&Violation::NoTransmitter));
        assert!(v.contains(&Violation::NoReceiver));
        assert!(v.iter().any(|x| matches!(x, Violation::InvalidSurface { .. })));
        assert_eq!(Violation::NoTransmitter.to_string(), "no transmitter");
    }

    #[test]
    fn duplicate_ids_and_portless_nodes() {
        let mut s = two_node_scene();
        s.nodes[1].id = "tx".into();
        s.nodes[1].contacts.clear();
        s.nodes[1].antennas.clear();
        let v = validate_scene(&s).unwrap_err();
        assert!(v.contains(&Violation::DuplicateNodeId { node: "tx".into() }));
        assert!(v.contains(&Violation::NodeWithoutPorts { node: "tx".into() }));
    }

    #[test]
    fn nan_positions_do_not_panic() {
        let mut s = two_node_scene();
        s.nodes[0].contacts[0] = Point2::new(f64::NAN, 0.1);
        s.nodes[0].antennas[0].z = f64::NAN;
        s.obstacles.push(Obstacle {
            footprint: Rect::from([f64::NAN, 0.0, 1.0, 1.0]),
            kind: ObstacleKind::Wood,
            perturbation_db: f64::NAN,
        });
        let v = validate_scene(&s).unwrap_err();
        assert!(v.len() >= 3);
    }

    #[test]
    fn segment_rect_clipping() {
        let r = Rect::from([1.0, 1.0, 2.0, 2.0]);
        assert!(r.intersects_segment(Point2::new(0.0, 1.5), Point2::new(3.0, 1.5)));
        assert!(!r.intersects_segment(Point2::new(0.0, 0.0), Point2::new(3.0, 0.5)));
        assert!(r.intersects_segment(Point2::new(1.5, 1.5), Point2::new(1.6, 1.6)));
        assert!(!r.intersects_segment(Point2::new(0.0, 3.0), Point2::new(0.5, 3.0)));
    }

    #[test]
    fn obstacle_loss_on_direct_and_reflected_paths() {
        let mut s = two_node_scene();
        s.obstacles.push(Obstacle {
            footprint: Rect::from([0.6, 0.0, 0.8, 0.3]),
            kind: ObstacleKind::Metal,
            perturbation_db: 3.0,
        });
        let a = Point2::new(0.2, 0.15);
        let b = Point2::new(1.2, 0.15);
        assert_eq!(s.obstacle_loss_db(a, (0, 0), b), 3.0);
        // reflect off the left edge: the image lies at x = -0.2 and the path
        // crosses the strip once on the way back
        let img = Point2::new(-0.2, 0.15);
        assert_eq!(s.obstacle_loss_db(img, (-1, 0), b), 3.0);
        // a receiver left of the strip is unaffected
        let c = Point2::new(0.4, 0.15);
        assert_eq!(s.obstacle_loss_db(a, (0, 0), c), 0.0);
    }
}
