//! Scenario files: TOML documents with the keys of [`ScenarioSpec`].
//! The MTD and MED scenarios of the reference study are built in.

use std::path::Path;

use anyhow::{bail, Context};
use dosefind_core::scenario::ScenarioSpec;

/// Built-in scenarios by name.
pub const BUILTIN: &[(&str, &str)] = &[
    ("tox_sc1", include_str!("../scenarios/tox_sc1.toml")),
    ("tox_sc2", include_str!("../scenarios/tox_sc2.toml")),
    ("tox_sc3", include_str!("../scenarios/tox_sc3.toml")),
    ("tox_sc4", include_str!("../scenarios/tox_sc4.toml")),
    ("tox_sc5", include_str!("../scenarios/tox_sc5.toml")),
    ("tox_sc6", include_str!("../scenarios/tox_sc6.toml")),
    ("tox_sc7", include_str!("../scenarios/tox_sc7.toml")),
    ("tox_sc8", include_str!("../scenarios/tox_sc8.toml")),
    ("tox_sc9", include_str!("../scenarios/tox_sc9.toml")),
    ("med_sc1", include_str!("../scenarios/med_sc1.toml")),
    ("med_sc2", include_str!("../scenarios/med_sc2.toml")),
    ("med_sc3", include_str!("../scenarios/med_sc3.toml")),
    ("med_sc4", include_str!("../scenarios/med_sc4.toml")),
    ("med_sc5", include_str!("../scenarios/med_sc5.toml")),
    ("med_sc6", include_str!("../scenarios/med_sc6.toml")),
    ("med_sc7", include_str!("../scenarios/med_sc7.toml")),
    ("med_sc8", include_str!("../scenarios/med_sc8.toml")),
    ("med_sc9", include_str!("../scenarios/med_sc9.toml")),
    ("med_sc10", include_str!("../scenarios/med_sc10.toml")),
    ("med_sc11", include_str!("../scenarios/med_sc11.toml")),
    ("med_sc12", include_str!("../scenarios/med_sc12.toml")),
    ("med_sc13", include_str!("../scenarios/med_sc13.toml")),
];

pub fn parse(text: &str) -> anyhow::Result<ScenarioSpec> {
    let spec: ScenarioSpec = toml::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse(text).expect("built-in scenarios are valid"))
}

/// Loads a scenario from a file path, falling back to a built-in name.
pub fn load(arg: &str) -> anyhow::Result<ScenarioSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let mut spec = parse(&text).with_context(|| format!("parsing {arg}"))?;
        if spec.label.is_empty() {
            spec.label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        return Ok(spec);
    }
    if let Some(spec) = builtin(arg) {
        return Ok(spec);
    }
    let names: Vec<&str> = BUILTIN.iter().map(|(n, _)| *n).collect();
    bail!("no scenario file or built-in scenario named `{arg}` (built-in: {})", names.join(", "))
}

pub fn to_toml(spec: &ScenarioSpec) -> String {
    toml::to_string(spec).expect("scenario serializes")
}
