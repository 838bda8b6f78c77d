//! `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const KNOWN_KEYS: &[&str] = &["r", "tol", "max_iter", "band", "seed", "grid", "method", "workers", "dense_cap"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parameter(format!("config line {}: expected key = value", lineno + 1)));
            };
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parameter(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("config value {key} = {v:?} is invalid"))),
        }
    }

    pub fn band(&self) -> Result<Option<(f64, f64)>> {
        self.values.get("band").map(|v| parse_band(v)).transpose()
    }
}

/// Parses `LO:HI`.
pub fn parse_band(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Parameter(format!("band {s:?} is not LO:HI with 0 < LO < HI"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > 0.0 && lo < hi && hi.is_finite() {
        Ok((lo, hi))
    } else {
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = Config::parse("# run\nr = 12\nmax-iter=7 # short\nband = 1e-3:1\n").unwrap();
        assert_eq!(cfg.get::<usize>("r").unwrap(), Some(12));
        assert_eq!(cfg.get::<usize>("max_iter").unwrap(), Some(7));
        assert_eq!(cfg.band().unwrap(), Some((1e-3, 1.0)));
        assert_eq!(cfg.get::<f64>("tol").unwrap(), None);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("r 3").is_err());
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("r = x").unwrap().get::<usize>("r").is_err());
        assert!(parse_band("1:0.5").is_err());
        assert!(parse_band("0:1").is_err());
    }
}
