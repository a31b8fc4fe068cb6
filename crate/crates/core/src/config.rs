//! Project configuration file.
//!
//! ```json
//! {
//!   "color_dict": {"gland": [0, 255, 0, 255]},
//!   "default_fill_alpha": 128,
//!   "default_colormap": "viridis",
//!   "start_slide": "case_01"
//! }
//! ```
//!
//! Every key is optional. Errors name the offending field, e.g.
//! `color_dict.gland[0]`.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::raster::{Rgb, Rgba};
use crate::render::{Colormap, DEFAULT_COLORMAP};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub color_dict: BTreeMap<String, Rgba>,
    pub default_fill_alpha: u8,
    pub default_colormap: String,
    pub start_slide: Option<String>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            color_dict: BTreeMap::new(),
            default_fill_alpha: 255,
            default_colormap: DEFAULT_COLORMAP.to_string(),
            start_slide: None,
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.into(), message: message.into() }
}

fn byte(v: &Value, path: &str) -> Result<u8, ConfigError> {
    match v.as_u64() {
        Some(n) if n <= 255 => Ok(n as u8),
        _ => Err(schema(path, format!("expected an integer in 0..=255, got {v}"))),
    }
}

fn color(v: &Value, path: &str) -> Result<Rgba, ConfigError> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected [r, g, b] or [r, g, b, a]"))?;
    if arr.len() != 3 && arr.len() != 4 {
        return Err(schema(path, format!("expected 3 or 4 components, got {}", arr.len())));
    }
    let mut out = [0, 0, 0, 255];
    for (i, c) in arr.iter().enumerate() {
        out[i] = byte(c, &format!("{path}[{i}]"))?;
    }
    Ok(Rgba(out))
}

impl ProjectConfig {
    pub fn from_value(v: &Value) -> Result<Self, ConfigError> {
        let obj = v.as_object().ok_or_else(|| schema("(root)", "expected an object"))?;
        let mut cfg = ProjectConfig::default();
        for (key, value) in obj {
            match key.as_str() {
                "color_dict" => {
                    let dict = value.as_object().ok_or_else(|| schema("color_dict", "expected an object"))?;
                    for (name, c) in dict {
                        cfg.color_dict.insert(name.clone(), color(c, &format!("color_dict.{name}"))?);
                    }
                }
                "default_fill_alpha" => cfg.default_fill_alpha = byte(value, "default_fill_alpha")?,
                "default_colormap" => {
                    let name = value.as_str().ok_or_else(|| schema("default_colormap", "expected a string"))?;
                    if Colormap::by_name(name).is_none() {
                        return Err(schema(
                            "default_colormap",
                            format!("unknown colormap {name:?} (known: {})", Colormap::NAMES.join(", ")),
                        ));
                    }
                    cfg.default_colormap = name.to_string();
                }
                "start_slide" => {
                    cfg.start_slide = match value {
                        Value::Null => None,
                        Value::String(s) => Some(s.clone()),
                        _ => return Err(schema("start_slide", "expected a string or null")),
                    }
                }
                other => return Err(schema(other, "unknown key")),
            }
        }
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let v: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json_str(&text)
    }

    /// Per-type color overrides. Alpha is ignored; fill opacity comes from
    /// the layer.
    pub fn type_colors(&self) -> BTreeMap<String, Rgb> {
        self.color_dict.iter().map(|(k, c)| (k.clone(), Rgb([c.0[0], c.0[1], c.0[2]]))).collect()
    }

    pub fn colormap(&self) -> Colormap {
        Colormap::by_name(&self.default_colormap).unwrap_or_else(Colormap::diverging)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_defaults() {
        assert_eq!(ProjectConfig::from_json_str("{}").unwrap(), ProjectConfig::default());
    }

    #[test]
    fn color_dict_parsed() {
        let cfg = ProjectConfig::from_json_str(r#"{"color_dict": {"gland": [0,255,0,255]}}"#).unwrap();
        assert_eq!(cfg.color_dict["gland"], Rgba::new(0, 255, 0, 255));
        assert_eq!(cfg.type_colors()["gland"], Rgb([0, 255, 0]));
    }

    #[test]
    fn error_names_field() {
        let err = ProjectConfig::from_json_str(r#"{"color_dict": {"gland": [300,0,0,255]}}"#).unwrap_err();
        assert!(matches!(&err, ConfigError::Schema { path, .. } if path == "color_dict.gland[0]"), "{err}");
        assert!(err.to_string().starts_with("color_dict.gland[0]"));
    }

    #[test]
    fn other_errors() {
        for (text, path) in [
            (r#"{"default_fill_alpha": -1}"#, "default_fill_alpha"),
            (r#"{"default_colormap": "rainbow"}"#, "default_colormap"),
            (r#"{"color_dict": {"a": [1,2]}}"#, "color_dict.a"),
            (r#"{"colour_dict": {}}"#, "colour_dict"),
        ] {
            let err = ProjectConfig::from_json_str(text).unwrap_err();
            assert!(matches!(&err, ConfigError::Schema { path: p, .. } if p == path), "{text}: {err}");
        }
    }
}
