use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::CouplingConstants;
use crate::error::{Error, Result};

/// Surface propagation constants at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPoint {
    pub frequency_hz: f64,
    pub alpha_np_per_m: f64,
    pub beta_rad_per_m: f64,
}

/// Attenuation and phase constants resolved at a specific frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConstants {
    pub alpha: f64,
    pub beta: f64,
}

/// Transmission-line constants of a conductive surface.
///
/// `alpha` and `beta` are tabulated at a few frequencies and interpolated
/// linearly in between; evaluating outside the tabulated span is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaterial", into = "RawMaterial")]
pub struct MaterialParams {
    name: String,
    d0: f64,
    refl_coeff: f64,
    points: Vec<BandPoint>,
    coupling: CouplingConstants,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    name: String,
    d0_m: f64,
    refl_coeff: f64,
    #[serde(default)]
    coupling: CouplingConstants,
    band: Vec<BandPoint>,
}

impl TryFrom<RawMaterial> for MaterialParams {
    type Error = Error;

    fn try_from(r: RawMaterial) -> Result<Self> {
        MaterialParams::new(r.name, r.d0_m, r.refl_coeff, r.band, r.coupling)
    }
}

impl From<MaterialParams> for RawMaterial {
    fn from(m: MaterialParams) -> Self {
        RawMaterial {
            name: m.name,
            d0_m: m.d0,
            refl_coeff: m.refl_coeff,
            coupling: m.coupling,
            band: m.points,
        }
    }
}

impl MaterialParams {
    pub fn new(
        name: impl Into<String>,
        d0: f64,
        refl_coeff: f64,
        mut points: Vec<BandPoint>,
        coupling: CouplingConstants,
    ) -> Result<Self> {
        let name = name.into();
        let bad = |reason: String| Error::DegenerateMaterial {
            material: name.clone(),
            reason,
        };
        if name.trim().is_empty() {
            return Err(bad("empty material name".into()));
        }
        if !(d0.is_finite() && d0 > 0.0) {
            return Err(bad(format!("reference distance d0 = {d0}")));
        }
        if !(0.0..=1.0).contains(&refl_coeff) {
            return Err(bad(format!("reflection coefficient {refl_coeff} not in [0, 1]")));
        }
        if points.is_empty() {
            return Err(bad("no frequency points".into()));
        }
        points.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
        for p in &points {
            if !(p.frequency_hz.is_finite() && p.frequency_hz > 0.0) {
                return Err(bad(format!("frequency {}", p.frequency_hz)));
            }
            if !(p.alpha_np_per_m.is_finite() && p.alpha_np_per_m > 0.0) {
                return Err(bad(format!("alpha {} at {} Hz", p.alpha_np_per_m, p.frequency_hz)));
            }
            if !(p.beta_rad_per_m.is_finite() && p.beta_rad_per_m > 0.0) {
                return Err(bad(format!("beta {} at {} Hz", p.beta_rad_per_m, p.frequency_hz)));
            }
        }
        for w in points.windows(2) {
            if w[0].frequency_hz == w[1].frequency_hz {
                return Err(bad(format!("duplicate frequency {}", w[0].frequency_hz)));
            }
            if w[1].alpha_np_per_m < w[0].alpha_np_per_m || w[1].beta_rad_per_m < w[0].beta_rad_per_m {
                return Err(bad("alpha and beta must be nondecreasing in frequency".into()));
            }
        }
        coupling.validate().map_err(bad)?;
        Ok(MaterialParams {
            name,
            d0,
            refl_coeff,
            points,
            coupling,
        })
    }

    /// Good-conductor approximation: alpha = beta = sqrt(pi f mu sigma).
    pub fn from_conductivity(
        name: impl Into<String>,
        sigma_s_per_m: f64,
        mu_h_per_m: f64,
        frequencies_hz: &[f64],
        d0: f64,
        refl_coeff: f64,
        coupling: CouplingConstants,
    ) -> Result<Self> {
        let points = frequencies_hz
            .iter()
            .map(|&f| {
                let k = (std::f64::consts::PI * f * mu_h_per_m * sigma_s_per_m).sqrt();
                BandPoint {
                    frequency_hz: f,
                    alpha_np_per_m: k,
                    beta_rad_per_m: k,
                }
            })
            .collect();
        Self::new(name, d0, refl_coeff, points, coupling)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn refl_coeff(&self) -> f64 {
        self.refl_coeff
    }

    pub fn points(&self) -> &[BandPoint] {
        &self.points
    }

    pub fn coupling(&self) -> &CouplingConstants {
        &self.coupling
    }

    pub fn coverage_hz(&self) -> (f64, f64) {
        (
            self.points[0].frequency_hz,
            self.points[self.points.len() - 1].frequency_hz,
        )
    }

    pub fn with_refl_coeff(mut self, refl_coeff: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&refl_coeff) {
            return Err(Error::Domain(format!("reflection coefficient {refl_coeff}")));
        }
        self.refl_coeff = refl_coeff;
        Ok(self)
    }

    pub fn with_coupling(mut self, coupling: CouplingConstants) -> Result<Self> {
        coupling.validate().map_err(Error::Domain)?;
        self.coupling = coupling;
        Ok(self)
    }

    /// Interpolated (alpha, beta) at `f_hz`.
    pub fn constants_at(&self, f_hz: f64) -> Result<SurfaceConstants> {
        let (lo, hi) = self.coverage_hz();
        if !(f_hz >= lo && f_hz <= hi) {
            return Err(Error::UnsupportedFrequency {
                material: self.name.clone(),
                hz: f_hz,
                lo,
                hi,
            });
        }
        let i = self.points.partition_point(|p| p.frequency_hz < f_hz);
        if i < self.points.len() && self.points[i].frequency_hz == f_hz {
            let p = self.points[i];
            return Ok(SurfaceConstants {
                alpha: p.alpha_np_per_m,
                beta: p.beta_rad_per_m,
            });
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let t = (f_hz - a.frequency_hz) / (b.frequency_hz - a.frequency_hz);
        Ok(SurfaceConstants {
            alpha: a.alpha_np_per_m + t * (b.alpha_np_per_m - a.alpha_np_per_m),
            beta: a.beta_rad_per_m + t * (b.beta_rad_per_m - a.beta_rad_per_m),
        })
    }
}

const BUILTIN_MATERIALS: &str = include_str!("../../presets/materials.toml");

/// A versioned collection of material presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialLibrary {
    pub version: String,
    #[serde(rename = "material")]
    pub materials: Vec<MaterialParams>,
}

impl MaterialLibrary {
    pub fn parse(text: &str) -> Result<Self> {
        let lib: MaterialLibrary = toml::from_str(text).map_err(|e| Error::Preset(e.to_string()))?;
        let mut names: Vec<&str> = lib.materials.iter().map(|m| m.name()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Preset(format!("duplicate material '{}'", w[0])));
        }
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Preset(m) => Error::Preset(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Presets shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MATERIALS).expect("shipped material presets are valid")
    }

    pub fn get(&self, name: &str) -> Option<&MaterialParams> {
        self.materials.iter().find(|m| m.name() == name)
    }

    /// Resolves a preset name against the built-in library, or loads a preset
    /// file. A file holding several materials must be disambiguated with
    /// `path#name`.
    pub fn resolve(spec: &str, base_dir: Option<&Path>) -> Result<MaterialParams> {
        if let Some(m) = Self::builtin().get(spec) {
            return Ok(m.clone());
        }
        let (file, name) = match spec.split_once('#') {
            Some((f, n)) => (f, Some(n)),
            None => (spec, None),
        };
        let path = match base_dir {
            Some(dir) if Path::new(file).is_relative() => dir.join(file),
            _ => Path::new(file).to_path_buf(),
        };
        if !path.exists() {
            return Err(Error::Preset(format!(
                "'{spec}' is neither a built-in material nor a readable preset file"
            )));
        }
        let lib = Self::load(&path)?;
        match name {
            Some(n) => lib
                .get(n)
                .cloned()
                .ok_or_else(|| Error::Preset(format!("{}: no material '{n}'", path.display()))),
            None if lib.materials.len() == 1 => Ok(lib.materials[0].clone()),
            None => Err(Error::Preset(format!(
                "{} holds {} materials; select one with '#name'",
                path.display(),
                lib.materials.len()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(f: f64, a: f64, b: f64) -> BandPoint {
        BandPoint {
            frequency_hz: f,
            alpha_np_per_m: a,
            beta_rad_per_m: b,
        }
    }

    #[test]
    fn interpolates_between_points() {
        let m = MaterialParams::new(
            "t",
            0.1,
            0.5,
            vec![pt(1e9, 1.0, 10.0), pt(3e9, 2.0, 30.0)],
            CouplingConstants::default(),
        )
        .unwrap();
        let c = m.constants_at(2e9).unwrap();
        assert!((c.alpha - 1.5).abs() < 1e-15);
        assert!((c.beta - 20.0).abs() < 1e-12);
        assert!(matches!(m.constants_at(3.1e9), Err(Error::UnsupportedFrequency { .. })));
        assert!(matches!(m.constants_at(0.9e9), Err(Error::UnsupportedFrequency { .. })));
    }

    #[test]
    fn rejects_decreasing_alpha() {
        let r = MaterialParams::new(
            "t",
            0.1,
            0.5,
            vec![pt(1e9, 2.0, 10.0), pt(3e9, 1.0, 30.0)],
            CouplingConstants::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_scalars() {
        let pts = vec![pt(1e9, 1.0, 10.0)];
        let c = CouplingConstants::default();
        assert!(MaterialParams::new("t", 0.0, 0.5, pts.clone(), c).is_err());
        assert!(MaterialParams::new("t", 0.1, 1.5, pts.clone(), c).is_err());
        assert!(MaterialParams::new("", 0.1, 0.5, pts, c).is_err());
    }

    #[test]
    fn good_conductor_constructor() {
        let m = MaterialParams::from_conductivity(
            "copperish",
            5.8e7,
            4e-7 * std::f64::consts::PI,
            &[1e9, 2e9],
            0.1,
            0.5,
            CouplingConstants::default(),
        )
        .unwrap();
        let c = m.constants_at(1e9).unwrap();
        assert_eq!(c.alpha, c.beta);
        let expected = (std::f64::consts::PI * 1e9 * 4e-7 * std::f64::consts::PI * 5.8e7).sqrt();
        assert!((c.alpha - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn builtin_library_parses() {
        let lib = MaterialLibrary::builtin();
        assert!(lib.get("spraypaint").is_some());
        assert!(lib.get("cloth").is_some());
        assert!(!lib.version.is_empty());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = MaterialLibrary::parse("version = \"1\"\n[[material]]\nname = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
