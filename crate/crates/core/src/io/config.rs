use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue, ValueDeserializer};
use toml::Spanned;

use crate::analysis::{McsTable, Phy};
use crate::channel::{AirMultipath, ChannelModel, Estimator, NoiseModel, TermMask};
use crate::error::{Error, Result};
use crate::experiments::{LinkSettings, SceneTemplate};
use crate::geometry::{validate_scene, Node, Obstacle, Scene, SurfaceSpec, Violation};
use crate::propagation::{AirModel, BandId, FrequencyBand, MaterialLibrary};

/// One problem found while reading a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, when the problem can be located.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid configuration")?;
        for i in &self.issues {
            write!(f, "\n  {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Seed used when a configuration does not set one.
pub const DEFAULT_SEED: u64 = 20_151_104;

/// Link-level settings of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub grid: usize,
    pub subcarriers: Option<usize>,
    pub max_reflection_order: u32,
    /// Sample count of the Monte Carlo estimator; the lattice when unset.
    pub monte_carlo_samples: Option<usize>,
    pub air: AirModel,
    /// Rician K-factor of the optional air scatter, in dB.
    pub air_k_factor_db: Option<f64>,
    pub tx_power_dbm: f64,
    /// Overrides the link budget when set.
    pub snr_db: Option<f64>,
    pub noise: NoiseModel,
    /// MCS table file; the built-in table when unset.
    pub mcs_table: Option<PathBuf>,
    pub phy: Phy,
    pub beta_esm: f64,
    pub mac_efficiency: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let s = LinkSettings::wifi_2g4_ht40();
        AnalysisConfig {
            grid: s.model.grid,
            subcarriers: None,
            max_reflection_order: s.model.max_reflection_order,
            monte_carlo_samples: None,
            air: s.model.air,
            air_k_factor_db: None,
            tx_power_dbm: s.tx_power_dbm,
            snr_db: None,
            noise: s.noise,
            mcs_table: None,
            phy: s.phy,
            beta_esm: s.beta_esm,
            mac_efficiency: s.mac_efficiency,
        }
    }
}

/// Placement rules for the generated two-node scenes of the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub tx_x_m: f64,
    /// Defaults to the middle of the surface.
    pub lane_y_m: Option<f64>,
    pub antenna_height_m: f64,
    pub separation_m: f64,
    pub contact_spacing_m: f64,
    pub air_spacing_m: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let t = SceneTemplate::spraypaint();
        LayoutConfig {
            tx_x_m: t.tx_x_m,
            lane_y_m: None,
            antenna_height_m: t.antenna_height_m,
            separation_m: t.separation_m,
            contact_spacing_m: t.contact_spacing_m,
            air_spacing_m: t.air_spacing_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    width_m: f64,
    height_m: f64,
    material: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    id: BandId,
    channel: Option<u32>,
    center_hz: Option<f64>,
    #[serde(default = "default_bandwidth_mhz")]
    bandwidth_mhz: f64,
}

fn default_bandwidth_mhz() -> f64 {
    40.0
}

impl RawBand {
    fn resolve(&self) -> Result<FrequencyBand> {
        let bw = self.bandwidth_mhz * 1e6;
        match (self.channel, self.center_hz) {
            (Some(_), Some(_)) => Err(Error::Domain("set either channel or center_hz, not both".into())),
            (None, Some(c)) => FrequencyBand::new(self.id, c, bw),
            (Some(ch), None) => match self.id {
                BandId::Ism2400 => FrequencyBand::wifi_2g4(ch, bw),
                BandId::Ism5000 => FrequencyBand::wifi_5g(ch, bw),
                BandId::Ism915 => Err(Error::Domain("the 915 MHz band has no channel numbers".into())),
            },
            (None, None) => match self.id {
                BandId::Ism2400 => FrequencyBand::wifi_2g4(1, bw),
                BandId::Ism5000 => FrequencyBand::wifi_5g(if bw > 20e6 { 38 } else { 36 }, bw),
                BandId::Ism915 => FrequencyBand::ism_915(bw),
            },
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub scene: Scene,
    pub band: FrequencyBand,
    pub analysis: AnalysisConfig,
    pub layout: LayoutConfig,
}

/// Seeds derived from the scenario seed, in draw order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedSeeds {
    pub estimator: u64,
    pub air_multipath: u64,
    pub sharing: u64,
}

impl DerivedSeeds {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DerivedSeeds {
            estimator: rng.next_u64(),
            air_multipath: rng.next_u64(),
            sharing: rng.next_u64(),
        }
    }
}

impl ScenarioConfig {
    pub fn seeds(&self) -> DerivedSeeds {
        DerivedSeeds::new(self.seed)
    }

    pub fn link_settings(&self) -> LinkSettings {
        let a = &self.analysis;
        let seeds = self.seeds();
        let mut noise = a.noise;
        let tx_power_dbm = match a.snr_db {
            // Pin the noise floor so that the budget lands on the requested SNR.
            Some(snr) => {
                noise.noise_figure_db = 0.0;
                noise.noise_floor_dbm_per_hz = a.tx_power_dbm - snr - 10.0 * self.band.bandwidth_hz().log10();
                a.tx_power_dbm
            }
            None => a.tx_power_dbm,
        };
        LinkSettings {
            band: self.band,
            subcarriers: a.subcarriers,
            model: ChannelModel {
                air: a.air,
                max_reflection_order: a.max_reflection_order,
                grid: a.grid,
                estimator: match a.monte_carlo_samples {
                    Some(samples) => Estimator::MonteCarlo {
                        samples,
                        seed: seeds.estimator,
                    },
                    None => Estimator::Grid,
                },
                terms: TermMask::default(),
                air_multipath: a.air_k_factor_db.map(|k_factor_db| AirMultipath {
                    k_factor_db,
                    seed: seeds.air_multipath,
                }),
            },
            tx_power_dbm,
            noise,
            phy: a.phy,
            beta_esm: a.beta_esm,
            mac_efficiency: a.mac_efficiency,
        }
    }

    /// Template for the sweeps: this scenario's surface and obstacles with the
    /// layout rules.
    pub fn template(&self) -> SceneTemplate {
        let l = &self.layout;
        SceneTemplate {
            surface: self.scene.surface.clone(),
            obstacles: self.scene.obstacles.clone(),
            tx_x_m: l.tx_x_m,
            lane_y_m: l.lane_y_m.unwrap_or(self.scene.surface.height_m / 2.0),
            antenna_height_m: l.antenna_height_m,
            separation_m: l.separation_m,
            contact_spacing_m: l.contact_spacing_m,
            air_spacing_m: l.air_spacing_m,
        }
    }

    pub fn mcs_table(&self) -> Result<McsTable> {
        match &self.analysis.mcs_table {
            Some(p) => McsTable::load(p),
            None => Ok(McsTable::builtin()),
        }
    }
}

const SECTIONS: [&str; 7] = ["seed", "surface", "node", "obstacle", "band", "analysis", "layout"];

struct Collector<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl Collector<'_> {
    fn line_of(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn push(&mut self, span: Option<Range<usize>>, message: impl Into<String>) {
        let line = span.map(|s| self.line_of(s.start));
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn section<'de, T: Deserialize<'de>>(&mut self, name: &str, v: Spanned<DeValue<'de>>) -> Option<T> {
        let outer = v.span();
        match T::deserialize(ValueDeserializer::from(v)) {
            Ok(t) => Some(t),
            Err(e) => {
                let span = e.span().or(Some(outer));
                self.push(span, format!("[{name}] {}", e.message()));
                None
            }
        }
    }

    fn array<'de, T: Deserialize<'de>>(&mut self, name: &str, v: Spanned<DeValue<'de>>) -> (Vec<T>, Vec<Range<usize>>) {
        let outer = v.span();
        match v.into_inner() {
            DeValue::Array(items) => {
                let mut out = Vec::new();
                let mut spans = Vec::new();
                for item in items {
                    let span = item.span();
                    if let Some(t) = self.section(name, item) {
                        out.push(t);
                        spans.push(span);
                    }
                }
                (out, spans)
            }
            _ => {
                self.push(Some(outer), format!("'{name}' must be an array of tables ([[{name}]])"));
                (Vec::new(), Vec::new())
            }
        }
    }
}

/// Parses and validates a scenario. Relative preset paths are resolved
/// against the working directory.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_in(text, None)
}

/// Reads a scenario file; relative preset paths are resolved against the
/// file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_in(&text, path.parent())
}

/// Parses a scenario, reporting every problem found rather than the first.
pub fn parse_config_in(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig> {
    let mut c = Collector {
        text,
        issues: Vec::new(),
    };
    let (doc, syntax) = DeTable::parse_recoverable(text);
    for e in syntax {
        c.push(e.span(), e.message().to_string());
    }
    if !c.issues.is_empty() {
        return Err(ConfigError { issues: c.issues }.into());
    }

    let mut seed = DEFAULT_SEED;
    let mut surface: Option<(RawSurface, Range<usize>)> = None;
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_spans = Vec::new();
    let mut obstacles: Vec<Obstacle> = Vec::new();
    let mut obstacle_spans = Vec::new();
    let mut band = None;
    let mut analysis = Some(AnalysisConfig::default());
    let mut layout = Some(LayoutConfig::default());

    for (key, value) in doc.into_inner() {
        let span = value.span();
        match key.get_ref().as_ref() {
            "seed" => match value
                .get_ref()
                .as_integer()
                .and_then(|i| i64::from_str_radix(i.as_str(), i.radix()).ok())
            {
                Some(s) if s >= 0 => seed = s as u64,
                _ => c.push(Some(span), "seed must be a non-negative integer"),
            },
            "surface" => {
                if let Some(s) = c.section::<RawSurface>("surface", value) {
                    surface = Some((s, span));
                }
            }
            "node" => (nodes, node_spans) = c.array("node", value),
            "obstacle" => (obstacles, obstacle_spans) = c.array("obstacle", value),
            "band" => {
                if let Some(b) = c.section::<RawBand>("band", value) {
                    match b.resolve() {
                        Ok(b) => band = Some(b),
                        Err(e) => c.push(Some(span), format!("[band] {e}")),
                    }
                }
            }
            "analysis" => analysis = c.section("analysis", value),
            "layout" => layout = c.section("layout", value),
            other => c.push(
                Some(key.span()),
                format!("unknown key '{other}', expected one of: {}", SECTIONS.join(", ")),
            ),
        }
    }

    let material = match &surface {
        Some((s, span)) => match MaterialLibrary::resolve(&s.material, base_dir) {
            Ok(m) => Some(m),
            Err(e) => {
                c.push(Some(span.clone()), format!("[surface] {e}"));
                None
            }
        },
        None => {
            c.push(None, "missing [surface] section");
            None
        }
    };
    if let Some(a) = &analysis {
        check_analysis(a, &mut c);
    }
    let band = band.unwrap_or_else(|| FrequencyBand::wifi_2g4(1, 40e6).expect("valid channel"));
    if let Some(m) = &material {
        let (lo, hi) = m.coverage_hz();
        let half = band.bandwidth_hz() / 2.0;
        if band.center_hz() - half < lo || band.center_hz() + half > hi {
            c.push(
                None,
                format!(
                    "band {} Hz is outside the coverage of material '{}'",
                    band.center_hz(),
                    m.name()
                ),
            );
        }
    }

    if let (Some((s, _)), Some(material)) = (surface, material) {
        let scene = Scene {
            surface: SurfaceSpec {
                width_m: s.width_m,
                height_m: s.height_m,
                material,
            },
            nodes,
            obstacles,
        };
        if let Err(vs) = validate_scene(&scene) {
            for v in vs {
                let span = locate(&v, &scene, &node_spans, &obstacle_spans);
                c.push(span, v.to_string());
            }
        }
        if c.issues.is_empty() {
            return Ok(ScenarioConfig {
                seed,
                scene,
                band,
                analysis: analysis.expect("checked"),
                layout: layout.expect("checked"),
            });
        }
    }
    Err(ConfigError { issues: c.issues }.into())
}

fn check_analysis(a: &AnalysisConfig, c: &mut Collector<'_>) {
    let mut bad = |m: String| c.push(None, format!("[analysis] {m}"));
    if a.grid < 2 {
        bad(format!("grid {} must be at least 2", a.grid));
    }
    if a.subcarriers == Some(0) {
        bad("subcarriers must be at least 1".into());
    }
    if let Err(e) = a.air.validate() {
        bad(e.to_string());
    }
    if !a.tx_power_dbm.is_finite() || a.snr_db.is_some_and(|s| !s.is_finite()) {
        bad("transmit power and SNR must be finite".into());
    }
    if !(a.beta_esm.is_finite() && a.beta_esm > 0.0) {
        bad(format!("beta_esm {} must be positive", a.beta_esm));
    }
    if !(a.mac_efficiency > 0.0 && a.mac_efficiency <= 1.0) {
        bad(format!("mac_efficiency {} not in (0, 1]", a.mac_efficiency));
    }
    if a.monte_carlo_samples == Some(0) {
        bad("Monte Carlo estimator needs at least one sample".into());
    }
    if a.air_k_factor_db.is_some_and(|k| !k.is_finite()) {
        bad("air K-factor must be finite".into());
    }
}

fn locate(v: &Violation, scene: &Scene, nodes: &[Range<usize>], obstacles: &[Range<usize>]) -> Option<Range<usize>> {
    let by_node = |id: &str| {
        scene
            .nodes
            .iter()
            .rposition(|n| n.id == id)
            .and_then(|i| nodes.get(i).cloned())
    };
    match v {
        Violation::ContactOutside { node, .. }
        | Violation::AntennaBelowSurface { node, .. }
        | Violation::NonFinitePosition { node }
        | Violation::NodeWithoutPorts { node }
        | Violation::DuplicateNodeId { node } => by_node(node),
        Violation::ObstacleOutside { index } | Violation::NegativePerturbation { index, .. } => {
            obstacles.get(*index).cloned()
        }
        _ => None,
    }
}
