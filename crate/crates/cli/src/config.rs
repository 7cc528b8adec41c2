//! Flat key-value config files for `simulate`.
//!
//! Keys are the long flag names (`graph`, `n`, `k`, `fixed-graph`, ...).
//! Values may be TOML strings, numbers, booleans or arrays; arrays become
//! the comma-separated lists the flags accept.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub type FlatConfig = BTreeMap<String, String>;

fn flatten(key: &str, value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| flatten(key, v))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("config key '{key}' must be a plain value or a list"),
    })
}

pub fn parse(text: &str, known: &[&str]) -> Result<FlatConfig> {
    let table: toml::Table = text.parse().context("config file is not valid TOML")?;
    let mut out = FlatConfig::new();
    for (key, value) in &table {
        let key = key.replace('_', "-");
        if !known.contains(&key.as_str()) {
            bail!("unknown config key '{key}'");
        }
        out.insert(key.clone(), flatten(&key, value)?);
    }
    Ok(out)
}

pub fn load(path: &Path, known: &[&str]) -> Result<FlatConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse(&text, known)
}
