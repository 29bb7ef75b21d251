//! Scenario files and result files.

pub mod config;
pub mod results;
pub mod rows;

pub use config::{
    load_config, parse_config, parse_config_in, AnalysisConfig, DerivedSeeds, LayoutConfig, ScenarioConfig,
    DEFAULT_SEED,
};
pub use results::{config_hash, Metadata, ResultRow, ResultSet, TOOL_VERSION};
pub use rows::{csi_from_set, csi_to_set, parse_csi, CsiRow};
