//! File formats: PGM/PPM images and masks, CSV traces, JSON configs.

mod pnm;

use std::path::Path;

use log::warn;

use crate::error::{Result, SplicError};
use crate::solver::{ConvergenceTrace, SplicConfig};

pub use pnm::{
    decode_pnm, encode_pnm, quantize, read_image, read_mask, write_image, write_mask, Encoding,
    Image,
};

pub const TRACE_CSV_HEADER: &str = "t,delta,rel_change,srf,tv";

/// Config keys accepted in JSON files; identical to the [`SplicConfig`] fields.
pub const CONFIG_KEYS: [&str; 11] = [
    "lambda",
    "rho",
    "mu",
    "r",
    "epsilon",
    "maxiter",
    "inner_steps",
    "anchor_fraction",
    "seed",
    "tv_mode",
    "clamp_output",
];

pub fn trace_to_csv(trace: &ConvergenceTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for rec in trace.iter() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rec.t, rec.delta, rec.rel_change, rec.srf, rec.tv
        ));
    }
    out
}

pub fn write_trace_csv(trace: &ConvergenceTrace, path: impl AsRef<Path>) -> Result<()> {
    pnm::write_atomic(path.as_ref(), trace_to_csv(trace).as_bytes())
}

/// Writes arbitrary text through a temp file and rename.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    pnm::write_atomic(path.as_ref(), text.as_bytes())
}

/// Parses a JSON config. Absent keys take their defaults; unknown keys are
/// reported back (and logged) but do not fail the parse.
pub fn parse_config_json(text: &str) -> Result<(SplicConfig, Vec<String>)> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| SplicError::Config {
            path: ".".into(),
            message: e.to_string(),
        })?;
    let object = value.as_object_mut().ok_or_else(|| SplicError::Config {
        path: ".".into(),
        message: "top level must be a JSON object".into(),
    })?;

    let unknown: Vec<String> = object
        .keys()
        .filter(|k| !CONFIG_KEYS.contains(&k.as_str()))
        .cloned()
        .collect();
    for key in &unknown {
        warn!("ignoring unknown config key `{key}`");
        object.remove(key);
    }

    let cfg: SplicConfig =
        serde_path_to_error::deserialize(value).map_err(|e| SplicError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    cfg.validate()?;
    Ok((cfg, unknown))
}

pub fn read_config_json(path: impl AsRef<Path>) -> Result<SplicConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SplicError::io(path, e))?;
    Ok(parse_config_json(&text)?.0)
}
