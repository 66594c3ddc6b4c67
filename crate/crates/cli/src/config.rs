//! Layered settings: inline flag, then config file, then built-in default.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub struct Layers {
    file: Map<String, Value>,
    file_path: Option<PathBuf>,
    file_digest: Option<String>,
    used: BTreeSet<String>,
    resolved: Map<String, Value>,
    sources: BTreeMap<String, String>,
}

impl Layers {
    /// Loads `path` as TOML, or as JSON when it ends in `.json`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut layers = Self {
            file: Map::new(),
            file_path: None,
            file_digest: None,
            used: BTreeSet::new(),
            resolved: Map::new(),
            sources: BTreeMap::new(),
        };
        let Some(path) = path else {
            return Ok(layers);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("{}: cannot read config file", path.display()))
            .map_err(CliError::Io)?;
        let value: Value = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .with_context(|| format!("{}: invalid JSON", path.display()))
                .map_err(CliError::Invalid)?
        } else {
            let table: toml::Table = toml::from_str(&text)
                .with_context(|| format!("{}: invalid TOML", path.display()))
                .map_err(CliError::Invalid)?;
            serde_json::to_value(table).expect("TOML values map to JSON")
        };
        let Value::Object(map) = value else {
            return Err(CliError::Invalid(anyhow::anyhow!("{}: expected a table of settings", path.display())));
        };
        layers.file = map;
        layers.file_digest = Some(arucount::io::sha256_hex(text.as_bytes()));
        layers.file_path = Some(path.to_path_buf());
        Ok(layers)
    }

    fn file_value<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let Some(v) = self.file.get(key) else {
            return Ok(None);
        };
        self.used.insert(key.to_string());
        let path = self.file_path.as_deref().map_or("<config>".into(), |p| p.display().to_string());
        serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| CliError::Invalid(anyhow::anyhow!("{path}: field `{key}`: {e}")))
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T, source: &str) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(value).expect("settings serialize"));
        self.sources.insert(key.to_string(), source.to_string());
    }

    /// Resolves `key` with a default.
    pub fn get<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.get_opt(key, flag)?.unwrap_or_else(|| {
            self.record(key, &default, "default");
            default
        }))
    }

    /// Resolves `key` with no default; unset keys are left out of the
    /// resolved configuration.
    pub fn get_opt<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let from_file = self.file_value::<T>(key)?;
        let (value, source) = match (flag, from_file) {
            (Some(v), _) => (v, "flag"),
            (None, Some(v)) => (v, "file"),
            (None, None) => return Ok(None),
        };
        self.record(key, &value, source);
        Ok(Some(value))
    }

    /// Fails on config-file keys that no setting consumed.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.used.contains(*k)).collect();
        if let Some(k) = unknown.first() {
            let path = self.file_path.as_deref().map_or("<config>".into(), |p| p.display().to_string());
            return Err(CliError::Invalid(anyhow::anyhow!("{path}: unknown field `{k}`")));
        }
        Ok(())
    }

    pub fn resolved(&self) -> Value {
        Value::Object(self.resolved.clone())
    }

    pub fn sources(&self) -> BTreeMap<String, String> {
        self.sources.clone()
    }

    /// `(file name, digest)` of the config file, if one was given.
    pub fn input(&self) -> Option<(String, String)> {
        let path = self.file_path.as_ref()?;
        let name = path.file_name().map_or("config".into(), |n| n.to_string_lossy().into_owned());
        Some((format!("config:{name}"), self.file_digest.clone()?))
    }
}

/// Parses a comma-separated list.
pub fn split_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow::anyhow!("invalid {what} `{t}`: {e}")))
        .collect::<anyhow::Result<Vec<T>>>()
        .and_then(|v| if v.is_empty() { bail!("empty {what} list") } else { Ok(v) })
}
