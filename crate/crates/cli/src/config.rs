//! `key = value` config files and seed resolution.

use std::path::Path;

use mmdin_core::model::{ModelConfig, Variant};

use crate::args::ModelOverrides;
use crate::error::CliError;

pub const SEED_ENV: &str = "MMDIN_SEED";
pub const DEFAULT_SEED: u64 = 42;

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped. Later duplicates win.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value', got '{raw}'", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(format!("line {}: empty key or value", i + 1));
        }
        out.retain(|(existing, _)| existing != k);
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: Option<&Path>) -> Result<Vec<(String, String)>, CliError> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let pairs = parse_config_text(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let known = ModelConfig::KEYS;
    if let Some((k, _)) = pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(CliError::input(format!(
            "{}: unknown config key '{k}' (expected one of: {})",
            path.display(),
            known.join(", ")
        )));
    }
    Ok(pairs)
}

/// `MMDIN_SEED` if set, else the built-in default.
pub fn env_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Seed precedence: flag, then config file, then environment, then default.
pub fn resolve_seed(flag: Option<u64>, file: &[(String, String)]) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some((_, v)) = file.iter().find(|(k, _)| k == "seed") {
        return v
            .parse()
            .map_err(|_| CliError::input(format!("config seed must be an unsigned integer, got '{v}'")));
    }
    env_seed()
}

/// Variant defaults, then config file values, then command-line flags.
/// The `variant` key of the file is ignored in favour of `variant`.
pub fn resolve_model_config(
    variant: Variant,
    file: &[(String, String)],
    overrides: &ModelOverrides,
) -> Result<ModelConfig, CliError> {
    let mut config = ModelConfig::for_variant(variant);
    let file_pairs = file
        .iter()
        .filter(|(k, _)| k != "variant" && k != "seed")
        .map(|(k, v)| (k.as_str(), v.clone()));
    for (k, v) in file_pairs.chain(overrides.pairs()) {
        config.set(k, &v).map_err(|e| CliError::input(e.to_string()))?;
    }
    config.seed = resolve_seed(overrides.seed, file)?;
    config.validate().map_err(|e| CliError::input(e.to_string()))?;
    Ok(config)
}
