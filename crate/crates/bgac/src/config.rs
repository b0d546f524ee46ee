//! Plain `key = value` text config for the feature pipeline. Unknown keys
//! are rejected so typos fail loudly. Lines starting with `#` and blank
//! lines are ignored.

use std::fmt;
use std::path::Path;

use bgac_core::features::FeatureConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolkitConfig {
    pub features: FeatureConfig,
    pub resample_hz: f64,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            features: FeatureConfig::default(),
            resample_hz: 30.0,
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, what: String },
    UnknownKey { line: usize, key: String },
    BadValue { line: usize, key: String },
    OutOfRange { key: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, what } => write!(f, "line {line}: {what}"),
            ConfigError::UnknownKey { line, key } => write!(f, "line {line}: unknown key '{key}'"),
            ConfigError::BadValue { line, key } => {
                write!(f, "line {line}: value for '{key}' is not a number")
            }
            ConfigError::OutOfRange { key } => write!(f, "'{key}' must be positive"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<ToolkitConfig, ConfigError> {
    let mut cfg = ToolkitConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                what: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| ConfigError::BadValue {
            line: line_no,
            key: key.to_string(),
        })?;
        match key {
            "radius_threshold_m" => cfg.features.radius_threshold_m = value,
            "speed_threshold_mps" => cfg.features.speed_threshold_mps = value,
            "resample_hz" => cfg.resample_hz = value,
            other => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: other.to_string(),
                })
            }
        }
    }
    for (key, v) in [
        ("radius_threshold_m", cfg.features.radius_threshold_m),
        ("speed_threshold_mps", cfg.features.speed_threshold_mps),
        ("resample_hz", cfg.resample_hz),
    ] {
        if !(v > 0.0) {
            return Err(ConfigError::OutOfRange { key: key.to_string() });
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> anyhow::Result<ToolkitConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        assert_eq!(parse_config("").unwrap(), ToolkitConfig::default());
    }

    #[test]
    fn parses_all_keys_with_comments() {
        let cfg = parse_config(
            "# feature pipeline\nradius_threshold_m = 0.3\n\nspeed_threshold_mps=0.2\nresample_hz = 25\n",
        )
        .unwrap();
        assert_eq!(cfg.features.radius_threshold_m, 0.3);
        assert_eq!(cfg.features.speed_threshold_mps, 0.2);
        assert_eq!(cfg.resample_hz, 25.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("radius = 0.3").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, .. }));
    }

    #[test]
    fn nonpositive_rejected() {
        let err = parse_config("resample_hz = 0").unwrap_err();
        assert!(matches!(err, ConfigError::OutOfRange { .. }));
    }

    #[test]
    fn garbage_line_rejected() {
        assert!(matches!(
            parse_config("what even is this").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
    }
}
