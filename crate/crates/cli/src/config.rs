//! JSON configuration with `--set dotted.key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

fn read_config_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::validation(format!("config {} must be a JSON object", path.display())));
    }
    Ok(value)
}

/// Recursively overlays `patch` onto `base`. Keys absent from `base` are
/// unknown and rejected with their dotted path.
fn merge(base: &mut Value, patch: &Value, prefix: &str) -> CliResult<()> {
    let (Value::Object(b), Value::Object(p)) = (&mut *base, patch) else {
        *base = patch.clone();
        return Ok(());
    };
    for (k, v) in p {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match b.get_mut(k) {
            None => return Err(CliError::validation(format!("unknown config key: {path}"))),
            Some(slot) if slot.is_object() && v.is_object() => merge(slot, v, &path)?,
            Some(slot) => *slot = v.clone(),
        }
    }
    Ok(())
}

/// `key=value`; the value is read as JSON when it parses, else as a string.
fn apply_override(config: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("override {assignment:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::validation(format!("override {assignment:?} has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = &mut *config;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| CliError::validation(format!("unknown config key: {key}")))?;
    }
    *slot = value;
    Ok(())
}

/// Defaults, then the config file, then each override in order.
pub fn resolve<T>(defaults: &T, file: Option<&Path>, overrides: &[String]) -> CliResult<T>
where
    T: Serialize + DeserializeOwned,
{
    let mut value = serde_json::to_value(defaults)?;
    if let Some(path) = file {
        merge(&mut value, &read_config_file(path)?, "")?;
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::validation(format!("invalid config: {e}")))
}
