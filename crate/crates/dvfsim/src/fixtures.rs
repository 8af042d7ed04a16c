//! Locators for the bundled calibrated fixtures (device profile, model
//! graphs, scenarios). See `fixtures/README.md` for the calibration
//! procedure and `src/bin/calibrate.rs` for the generator.

use std::path::PathBuf;

use crate::device::{load_profile, DeviceProfile};
use crate::error::Result;
use crate::graph::{load_graph, ComputationGraph};

/// Directory holding the bundled fixture files.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The calibrated reference device profile.
pub fn reference_profile() -> Result<DeviceProfile> {
    load_profile(fixtures_dir().join("orin_nano.json"))
}

/// Load one of the bundled model graphs by stem (e.g. "resnet18").
pub fn fixture_graph(stem: &str) -> Result<ComputationGraph> {
    load_graph(fixtures_dir().join(format!("{stem}.json")))
}

/// Path of a bundled scenario file by stem.
pub fn scenario_path(stem: &str) -> PathBuf {
    fixtures_dir().join("scenarios").join(format!("{stem}.json"))
}

/// The four bundled model fixture stems.
pub const MODEL_FIXTURES: [&str; 4] = ["resnet18", "resnet101", "vit_b16", "vit_l16"];
