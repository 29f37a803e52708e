//! Scenario files on disk.

use std::path::Path;

use stardis_core::engine::ScenarioConfig;
use stardis_core::persuasion::{PersuasionGame, Receiver};

use crate::Error;

/// Parses and validates a scenario; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Error> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// The built-in reference scenario when no path is given.
pub fn load_or_default(path: Option<&Path>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ScenarioConfig::default()),
    }
}

pub fn to_toml(config: &ScenarioConfig) -> Result<String, Error> {
    toml::to_string_pretty(config).map_err(|e| Error::Config(e.to_string()))
}

/// A standalone signaling problem for `persuasion-solve`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub game: PersuasionGame,
    /// Credibility budget C in nats.
    pub budget: f64,
    #[serde(default)]
    pub resolution: Option<u32>,
    #[serde(default)]
    pub receiver: Option<Receiver>,
}

pub fn load_game(path: &Path) -> Result<GameFile, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let file: GameFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    file.game.validate().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !(file.budget >= 0.0) {
        return Err(Error::Config(format!("{}: budget must be non-negative", path.display())));
    }
    Ok(file)
}
