//! `key=value` configuration files mirroring the command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliResult;

const KNOWN_KEYS: [&str; 6] = ["algo", "radius", "epsilon", "gaussian", "lab", "nms"];

#[derive(Debug, Default)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()).into())
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            let k = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key '{k}'", i + 1).into());
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("config key '{key}': invalid value '{v}'").into()),
        }
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.values.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) => match v.as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(format!("config key '{key}': expected true or false, got '{v}'").into()),
            },
        }
    }
}
