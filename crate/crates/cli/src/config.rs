//! Config files: one JSON object with optional `seed`, `format`, `preset` and a
//! section per command. A section is layered over the chosen preset, so it only
//! needs the keys it changes. A run manifest is itself a valid config.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::output::Format;

/// Sections and the keys a manifest adds on top of them.
const TOP_LEVEL: [&str; 15] = [
    "seed",
    "format",
    "preset",
    "command",
    "tool",
    "version",
    "status",
    "warnings",
    "outputs",
    "summary",
    "scan_filter",
    "scan_detuning",
    "simulate",
    "analyze",
    "fit_anticrossing",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    root: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(root) = value else {
            return Err(CliError::Config("top level must be an object".into()));
        };
        if let Some(key) = root.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        Ok(Self { root })
    }

    pub fn seed(&self) -> CliResult<Option<u64>> {
        self.root.get("seed").map(|v| typed::<u64>("seed", v.clone())).transpose()
    }

    pub fn format(&self) -> CliResult<Option<Format>> {
        self.root.get("format").map(|v| typed::<Format>("format", v.clone())).transpose()
    }

    pub fn preset(&self) -> CliResult<Option<String>> {
        self.root.get("preset").map(|v| typed::<String>("preset", v.clone())).transpose()
    }

    pub fn command(&self) -> CliResult<Option<String>> {
        self.root.get("command").map(|v| typed::<String>("command", v.clone())).transpose()
    }

    pub fn section(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }
}

/// Deep merge of `over` into `base`. Objects merge key by key, anything else is
/// replaced. An object that switches enum variant (a different single key, or a
/// different `mode` tag) replaces the old one instead of mixing fields.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !switches_variant(b, o) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn switches_variant(base: &Map<String, Value>, over: &Map<String, Value>) -> bool {
    let single = |m: &Map<String, Value>| (m.len() == 1).then(|| m.keys().next().cloned()).flatten();
    if let (Some(a), Some(b)) = (single(base), single(over)) {
        if a != b {
            return true;
        }
    }
    matches!((base.get("mode"), over.get("mode")), (Some(a), Some(b)) if a != b)
}

/// Preset section, overlaid with the user's section and any command-line
/// overrides, then decoded with the failing field's path in the error.
pub fn resolve<T: Serialize + DeserializeOwned>(key: &str, preset: &T, layers: &[Option<&Value>]) -> CliResult<T> {
    let mut value = serde_json::to_value(preset).expect("sections serialize");
    for layer in layers.iter().flatten() {
        if !layer.is_object() {
            return Err(CliError::Config(format!("`{key}` must be an object")));
        }
        merge(&mut value, layer);
    }
    typed(key, value)
}

pub fn typed<T: DeserializeOwned>(key: &str, value: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { key.to_string() } else { format!("{key}.{path}") };
        CliError::Config(format!("{at}: {}", e.into_inner()))
    })
}
