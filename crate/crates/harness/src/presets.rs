//! Built-in experiment configurations, shipped as JSON files under
//! `presets/`.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

const PRESETS: &[(&str, &str)] = &[
    ("lin20", include_str!("../presets/lin20.json")),
    ("nl4-20", include_str!("../presets/nl4-20.json")),
    ("nl5", include_str!("../presets/nl5.json")),
    ("nlp-sweep", include_str!("../presets/nlp-sweep.json")),
    ("noise-sweep", include_str!("../presets/noise-sweep.json")),
    ("sparsity-sweep", include_str!("../presets/sparsity-sweep.json")),
    ("change-rate-sweep", include_str!("../presets/change-rate-sweep.json")),
    ("interval-sweep", include_str!("../presets/interval-sweep.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

/// Raw JSON of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = source(name).ok_or_else(|| {
        HarnessError::config(format!(
            "unknown preset {name:?}; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ExperimentConfig::from_json(text)
}
