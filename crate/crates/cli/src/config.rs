//! `key = value` configuration files. Blank lines and `#` comments are
//! ignored; keys use the long flag names without dashes.

use std::collections::BTreeMap;
use std::path::Path;

pub const KEYS: [&str; 10] = ["gmin", "gmax", "tol", "res", "threads", "step", "cluster", "flood_res", "width", "zoom"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let k = k.trim().trim_start_matches("--").replace('-', "_");
            if !KEYS.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key {k:?}", i + 1));
            }
            values.insert(k, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config value {key} = {v:?} is invalid")),
        }
    }
}
