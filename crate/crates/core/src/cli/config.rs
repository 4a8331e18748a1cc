//! `key = value` configuration files. Lines starting with `#` and blank
//! lines are ignored. Command-line flags override anything set here.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: [&str; 19] = [
    "seed",
    "jobs",
    "format",
    "out",
    "learner.kind",
    "learner.lr",
    "learner.epochs",
    "learner.seed",
    "data.label_column",
    "data.splits",
    "data.train_fraction",
    "reduction.kind",
    "reduction.tree",
    "tournament.k",
    "tournament.m",
    "tournament.semantics",
    "tournament.repeated",
    "search.mode",
    "search.cap",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !KNOWN_KEYS.contains(&k) {
                return Err(Error::InvalidArgument(format!("config line {}: unknown key '{k}'", n + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidArgument(format!("config key '{key}': cannot parse '{v}'")))
            })
            .transpose()
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}
