pub mod analyze;
pub mod basin;
pub mod orbits;
pub mod report;
pub mod surgery;

use std::path::Path;

use sha2::{Digest, Sha256};

use flow3::periodic::SectionSpec;
use flow3::VectorFieldSpec;
use nalgebra::Vector3;

use crate::config::AnalysisConfig;
use crate::CliError;

/// Explicit sections from the config, validated against the flow; None when
/// the config has no overrides (auto-placement).
pub fn user_sections(
    cfg: &AnalysisConfig,
    spec: &VectorFieldSpec,
) -> Result<Option<Vec<SectionSpec>>, CliError> {
    if cfg.sections.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(cfg.sections.len());
    for s in &cfg.sections {
        let sec = SectionSpec::new(
            spec,
            Vector3::new(s.anchor[0], s.anchor[1], s.anchor[2]),
            Vector3::new(s.normal[0], s.normal[1], s.normal[2]),
            s.half_width,
        )
        .map_err(|e| {
            CliError::Config(crate::config::ConfigError::Invalid(format!("section: {e}")))
        })?;
        out.push(sec);
    }
    Ok(Some(out))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn config_hash(raw: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(raw);
    format!("{:x}", h.finalize())
}
