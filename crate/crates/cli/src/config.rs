//! Flat key=value experiment configs. Files hold one `key = value` pair per
//! line (`#` comments allowed); command-line flags override file values. The
//! merged pairs are echoed verbatim into the run manifest.

use entrolab_core::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "config line {}: expected key = value, found {raw:?}",
                    lineno + 1
                )));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(KeyValues { map })
    }

    /// Flag overrides beat file values.
    pub fn set_override(&mut self, key: &str, value: impl Display) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(format!("missing required key {key:?}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: bad number {v:?}")))
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::invalid(format!("missing required key {key:?}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: bad integer {v:?}")))
            })
            .transpose()
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.get_usize(key)?
            .ok_or_else(|| Error::invalid(format!("missing required key {key:?}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: bad integer {v:?}")))
            })
            .transpose()
    }

    /// Grids are comma-separated values or inclusive `start..end` ranges.
    pub fn get_grid(&self, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        Ok(Some(parse_grid(v)?))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let list = v
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: bad number {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Some(list))
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        self.map
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

pub fn parse_grid(v: &str) -> Result<Vec<usize>> {
    let grid: Vec<usize> = if let Some((a, b)) = v.split_once("..") {
        let lo: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid start {a:?}")))?;
        let hi: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid end {b:?}")))?;
        (lo..=hi).collect()
    } else {
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad grid entry {t:?}")))
            })
            .collect::<Result<Vec<usize>>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be nonempty and increasing"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let mut kv = KeyValues::parse("a1 = 1.0\nk = 0  # resolution\n\nseed = 7\n").unwrap();
        assert_eq!(kv.get("a1"), Some("1.0"));
        kv.set_override("a1", 2.5);
        assert_eq!(kv.require_f64("a1").unwrap(), 2.5);
        assert!(kv.require("missing").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,3,9").unwrap(), vec![1, 3, 9]);
        assert_eq!(parse_grid("2..=5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_grid("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert!(parse_grid("5,4").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KeyValues::parse("just words\n").is_err());
    }
}
