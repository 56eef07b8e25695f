//! Plain-text experiment configuration: `[section]` headers with
//! `key = value` lines, `#` comments. Unknown keys are rejected so an
//! experiment file always means what it says. The only environment override
//! is OUTPUT_DIR.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub struct Config {
    entries: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(ConfigError(format!("line {}: malformed section", lineno + 1)));
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError(format!("line {}: expected key = value", lineno + 1)));
            };
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError(format!("duplicate key {key}")));
            }
        }
        Ok(Config { entries, consumed: BTreeSet::new() })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        if let Some(v) = self.entries.get(key) {
            self.consumed.insert(key.to_string());
            Some(v.clone())
        } else {
            None
        }
    }

    pub fn get_str(&mut self, key: &str) -> Option<String> {
        self.take(key)
    }

    pub fn req_str(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError(format!("missing required key {key}")))
    }

    pub fn get_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| ConfigError(format!("{key}: {e}"))),
        }
    }

    pub fn req_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(key)?.ok_or_else(|| ConfigError(format!("missing required key {key}")))
    }

    pub fn get_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|e| ConfigError(format!("{key}: {e}"))),
        }
    }

    pub fn get_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                other => Err(ConfigError(format!("{key}: expected boolean, got {other:?}"))),
            },
        }
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| ConfigError(format!("{key}: {e}"))),
        }
    }

    /// Every key must have been consumed by a getter by now.
    pub fn finish(self) -> Result<(), ConfigError> {
        let leftover: Vec<String> = self
            .entries
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .cloned()
            .collect();
        if leftover.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(format!("unknown keys: {}", leftover.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_consume() {
        let mut c = Config::parse("[a]\nx = 1.5 # comment\n[b]\ny = hi\n").unwrap();
        assert_eq!(c.req_f64("a.x").unwrap(), 1.5);
        assert_eq!(c.req_str("b.y").unwrap(), "hi");
        c.finish().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut c = Config::parse("[a]\nx = 1\nstray = 2\n").unwrap();
        let _ = c.req_f64("a.x").unwrap();
        assert!(c.finish().is_err());
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(Config::parse("keyonly\n").is_err());
        assert!(Config::parse("[open\nx=1\n").is_err());
        assert!(Config::parse("[a]\nx=1\nx=2\n").is_err());
    }
}
