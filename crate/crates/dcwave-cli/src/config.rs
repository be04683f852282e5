//! JSON configuration files, overridden by command-line flags.
//!
//! A config file is an object keyed by subcommand name; each entry holds
//! the same fields as the subcommand's flags (snake_case):
//!
//! ```json
//! { "eval": { "k": 2, "nu": 0.3 }, "strichartz": { "seed": 7 } }
//! ```

use crate::error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::path::Path;

pub fn load(path: Option<&Path>) -> CliResult<Value> {
    match path {
        None => Ok(Value::Object(Default::default())),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("invalid config {}: {e}", p.display())))?;
            if !v.is_object() {
                return Err(CliError::usage("config file must hold a JSON object"));
            }
            Ok(v)
        }
    }
}

/// Overlay the flags that were given on top of the config section for
/// `command`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: &Value, command: &str) -> CliResult<T> {
    let mut base = match config.get(command) {
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(CliError::usage(format!("config section `{command}` must be an object"))),
        None => Default::default(),
    };
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base))
        .map_err(|e| CliError::usage(format!("config section `{command}`: {e}")))
}
