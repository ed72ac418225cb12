//! Flat `key = value` config files (a TOML subset without tables).

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{CgcError, Result};

pub(crate) struct FlatConfig {
    table: Table,
    used: BTreeSet<String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CgcError::invalid(format!("config: {}", e.message())))?;
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table()) {
            return Err(CgcError::invalid(format!("config: nested table `{k}` not supported")));
        }
        Ok(Self {
            table,
            used: BTreeSet::new(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CgcError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn get(&mut self, key: &str) -> Option<&Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    pub fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn str(&mut self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(type_error(key, "a string", v)),
        }
    }

    pub fn uint(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(type_error(key, "a non-negative integer", v)),
        }
    }

    pub fn float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(type_error(key, "a number", v)),
        }
    }

    pub fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(type_error(key, "true or false", v)),
        }
    }

    /// A list given either as an array or as a comma-separated string.
    pub fn list(&mut self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(
                s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
            )),
            Some(Value::Array(items)) => Ok(Some(
                items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect(),
            )),
            Some(v) => Err(type_error(key, "a list", v)),
        }
    }

    /// Fail on keys nobody asked for, so typos do not pass silently.
    pub fn finish(self) -> Result<()> {
        let unknown: Vec<&String> = self.table.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CgcError::invalid(format!("config: unknown keys {unknown:?}")))
        }
    }
}

fn type_error(key: &str, want: &str, got: &Value) -> CgcError {
    CgcError::invalid(format!("config: `{key}` must be {want}, got {got}"))
}

/// Quote a string for a flat config file.
pub(crate) fn quoted(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Float formatted so TOML reads it back as a float with the same bits.
pub(crate) fn float_literal(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}
