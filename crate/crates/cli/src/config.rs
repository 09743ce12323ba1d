//! TOML config files for `synth` and the pipeline commands.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

use ic_mapper::pipeline::PipelineConfig;
use ic_mapper::synth::SceneConfig;

/// Bad invocation or bad config content; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

pub fn load_pipeline_config(path: &Path) -> Result<PipelineConfig> {
    load(path)
}

/// Scene keys at top level, noise parameters under `[noise]`, the range as
/// `range = { length = 100, width = 50 }`.
pub fn load_scene_config(path: &Path) -> Result<SceneConfig> {
    load(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ic_mapper::synth::{Curvature, PerceptionRange};

    fn tmp(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn pipeline_keys_override_defaults() {
        let f = tmp("theta = 0.3\nmax_age = 4\nfusion = false\n");
        let cfg = load_pipeline_config(f.path()).unwrap();
        assert_eq!((cfg.theta, cfg.max_age, cfg.fusion), (0.3, 4, false));
        assert_eq!(cfg.tau, PipelineConfig::default().tau);
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let f = tmp("thetta = 0.3\n");
        let err = load_pipeline_config(f.path()).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        assert!(err.to_string().contains("thetta"), "{err}");
    }

    #[test]
    fn scene_config_with_noise_table() {
        let f = tmp("curvature = \"s_curve\"\nrange = { length = 60, width = 30 }\n[noise]\njitter = 0.2\n");
        let cfg = load_scene_config(f.path()).unwrap();
        assert_eq!(cfg.curvature, Curvature::SCurve);
        assert_eq!(cfg.range, PerceptionRange::SMALL);
        assert_eq!(cfg.noise.jitter, 0.2);
        assert_eq!(cfg.noise.dropout, SceneConfig::default().noise.dropout);
    }
}
