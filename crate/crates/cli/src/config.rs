//! Run configuration. Each setting comes from the first source that has it:
//! command-line flag, `CORRSPEC_*` environment variable, config file, default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format {other:?} (json, csv, text)")),
        }
    }
}

/// Values read from a `key = value` config file. Keys use the long flag
/// names; `-` and `_` are interchangeable.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "p",
    "m",
    "e",
    "n",
    "method",
    "format",
    "output",
    "cache_dir",
    "threads",
    "precision_bits",
    "cap",
];

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key {key:?}", i + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }
}

/// Settings after precedence has been applied.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: Option<u64>,
    pub m: Option<u32>,
    pub e: Option<u32>,
    pub n: Option<u32>,
    pub method: String,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// 0 means one worker per core.
    pub threads: usize,
    pub precision_bits: u32,
    pub cap: u64,
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub const DEFAULT_PRECISION_BITS: u32 = 53;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let c = FileConfig::parse("p = 13\n# note\nprecision-bits = 80  # trailing\n\nmethod=sums\n").unwrap();
        assert_eq!(c.get::<u64>("p").unwrap(), Some(13));
        assert_eq!(c.get::<u32>("precision_bits").unwrap(), Some(80));
        assert_eq!(c.get::<String>("method").unwrap().as_deref(), Some("sums"));
        assert_eq!(c.get::<u32>("m").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(FileConfig::parse("p 5").is_err());
        assert!(FileConfig::parse("colour = red").is_err());
        let c = FileConfig::parse("p = five").unwrap();
        assert!(c.get::<u64>("p").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
    }
}
