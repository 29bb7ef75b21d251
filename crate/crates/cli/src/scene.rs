//! Resolution of the `--scene` argument.

use std::path::Path;

use serde::Serialize;
use surfmimo::analysis::McsTable;
use surfmimo::experiments::{LinkSettings, SceneTemplate};
use surfmimo::geometry::Scene;
use surfmimo::io::{load_config, DerivedSeeds, DEFAULT_SEED};
use surfmimo::Result;

/// A built-in surface or a scenario file, with the settings derived from it.
#[derive(Debug, Clone, Serialize)]
pub struct Setup {
    pub template: SceneTemplate,
    /// The explicit scene of a scenario file.
    pub scene: Option<Scene>,
    pub settings: LinkSettings,
    pub seed: u64,
    pub table: McsTable,
}

impl Setup {
    pub fn load(spec: &str, seed: Option<u64>) -> Result<Self> {
        let builtin = match spec {
            "spraypaint" => Some(SceneTemplate::spraypaint()),
            "cloth" => Some(SceneTemplate::cloth()),
            _ => None,
        };
        if let Some(template) = builtin {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            return Ok(Setup {
                template,
                scene: None,
                settings: LinkSettings::wifi_2g4_ht40(),
                seed,
                table: McsTable::builtin(),
            });
        }
        let mut cfg = load_config(Path::new(spec))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        Ok(Setup {
            template: cfg.template(),
            scene: Some(cfg.scene.clone()),
            settings: cfg.link_settings(),
            seed: cfg.seed,
            table: cfg.mcs_table()?,
        })
    }

    pub fn seeds(&self) -> DerivedSeeds {
        DerivedSeeds::new(self.seed)
    }
}
