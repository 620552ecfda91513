//! Flat `key = value` configuration files.
//!
//! One assignment per line. `#` starts a comment anywhere on a line, blank
//! lines are ignored, keys are `[a-z0-9_]+`, values are trimmed and may not
//! be empty. A key may appear once.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    path: PathBuf,
    /// key -> (value, 1-based line)
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let err = |line: usize, msg: String| Error::Config {
            path: path.clone(),
            line,
            msg,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty()
                || !key
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
            {
                return Err(err(line, format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(line, format!("empty value for `{key}`")));
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), line)) {
                return Err(err(line, format!("`{key}` already set on line {first}")));
            }
        }
        Ok(Self { path, entries })
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (key, (_, line)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config {
                    path: self.path.clone(),
                    line: *line,
                    msg: format!("unknown key `{key}`; known keys: {}", allowed.join(", ")),
                });
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((value, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        value.parse().map(Some).map_err(|e: T::Err| Error::Config {
            path: self.path.clone(),
            line: *line,
            msg: format!("`{key}`: cannot parse `{value}`: {e}"),
        })
    }

    /// `flag` wins over the file, which wins over `default`.
    pub fn resolve<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
