use std::path::Path;

use super::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    ("garnet", include_str!("../../../../configs/garnet.ini")),
    ("event_trigger", include_str!("../../../../configs/event_trigger.ini")),
    ("inventory", include_str!("../../../../configs/inventory.ini")),
    ("quadratic", include_str!("../../../../configs/quadratic.ini")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// The experiments of a bundled config file (same content as `configs/`).
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}` (known: {})", preset_names().join(", "))))?;
    parse_config(text, Path::new("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        for name in preset_names() {
            assert!(!preset(name).unwrap().is_empty());
        }
        assert!(preset("nope").is_err());
    }
}
