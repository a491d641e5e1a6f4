use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::CliError;

/// Reads a JSON document from `path`, or from stdin when absent.
pub fn read_json<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, CliError> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?
        }
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    Ok(serde_json::from_str(&text)?)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
