//! Flat `key = value` run configuration. Command-line flags override it.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a config file; each mirrors the long flag of the same
/// name with `-` replaced by `_`.
pub const KNOWN_KEYS: &[&str] = &[
    "kind", "n", "alpha", "s_max", "count", "seed", "out", "csv", "data", "model", "learner", "kernel", "c",
    "epsilon", "gamma", "degree", "coef0", "tol", "max_passes", "retries", "trees", "max_features", "min_split",
    "max_depth", "pca", "standardize", "json", "format",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key = value", k + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("config line {}: unknown key '{key}'", k + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::config(format!("config line {}: duplicate key '{key}'", k + 1)));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the parsed config entry.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::config(format!("config key '{key}' = '{v}': {e}")))
            })
            .transpose()
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::config(format!("missing --{} (or '{key}' in the config file)", key.replace('_', "-"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let c = Config::parse("# run\nkind = tomo\ncount=10\ns-max = 4 # trailing\n").unwrap();
        assert_eq!(c.pick::<u32>(None, "count").unwrap(), Some(10));
        assert_eq!(c.pick(Some(3u32), "count").unwrap(), Some(3));
        assert_eq!(c.pick::<u32>(None, "s_max").unwrap(), Some(4));
        assert_eq!(c.pick_or::<f64>(None, "alpha", 1.0).unwrap(), 1.0);
        assert!(c.require::<u64>(None, "seed").is_err());
    }

    #[test]
    fn rejects_malformed_files() {
        assert_eq!(Config::parse("bogus = 1").unwrap_err().code, 2);
        assert_eq!(Config::parse("count 10").unwrap_err().code, 2);
        assert_eq!(Config::parse("n = 1\nn = 2").unwrap_err().code, 2);
        let c = Config::parse("count = ten").unwrap();
        assert_eq!(c.pick::<u32>(None, "count").unwrap_err().code, 2);
    }
}
