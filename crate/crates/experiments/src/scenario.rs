//! Loading scenario files and the two bundled setups.

use std::path::{Path, PathBuf};

use mmolsr_core::config::{Mobility, ParseError, ScenarioConfig, ValidationErrors};
use thiserror::Error;

/// Static energy study, 250 s.
pub const SETUP_A: &str = include_str!("../configs/setupA.cfg");
/// Base of the delivery/lifetime grid.
pub const SETUP_B: &str = include_str!("../configs/setupB.cfg");

#[derive(Debug, Error)]
pub enum ScenarioError {
    // the cause is part of the message, not a separate source, so `{:#}`
    // chains do not print it twice
    #[error("cannot read {}: {error}", path.display())]
    Io { path: PathBuf, error: std::io::Error },
    #[error("{name}: {error}")]
    Parse { name: String, error: ParseError },
    #[error("{name}: invalid scenario: {errors}")]
    Invalid { name: String, errors: ValidationErrors },
}

/// Parses and validates a scenario; `name` only labels errors.
pub fn parse(name: &str, text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg = ScenarioConfig::from_config_str(text).map_err(|error| ScenarioError::Parse {
        name: name.to_string(),
        error,
    })?;
    cfg.validate().map_err(|errors| ScenarioError::Invalid {
        name: name.to_string(),
        errors,
    })
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|error| ScenarioError::Io {
        path: path.to_path_buf(),
        error,
    })?;
    parse(&path.display().to_string(), &text)
}

pub fn setup_a() -> ScenarioConfig {
    parse("setupA.cfg", SETUP_A).expect("bundled setupA.cfg is valid")
}

pub fn setup_b() -> ScenarioConfig {
    parse("setupB.cfg", SETUP_B).expect("bundled setupB.cfg is valid")
}

/// `static`, or `rwp<v_max>` for random waypoint (e.g. `rwp2`, `rwp20`).
pub fn parse_mobility(s: &str) -> Result<Mobility, String> {
    let s = s.trim();
    if s == "static" {
        return Ok(Mobility::Static);
    }
    let v = s
        .strip_prefix("rwp")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .ok_or_else(|| format!("unknown mobility `{s}` (expected `static` or `rwp<v_max>`)"))?;
    Ok(Mobility::random_waypoint(v))
}

/// Scenario name from a config path: the file stem.
pub fn scenario_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string())
}
