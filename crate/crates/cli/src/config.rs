//! Analysis configuration: one TOML file drives the whole pipeline.
//!
//! ```toml
//! seed = 0
//! output_dir = "out"
//!
//! [flow]
//! builtin = "cylinder"          # rotation | cylinder | catmap-suspension
//! [flow.params]
//! c = -1.0
//!
//! # alternatively, component expressions over x, y, z and named constants:
//! # [flow.expression]
//! # x = "x * (1 - (x^2 + y^2)) - y"
//! # y = "y * (1 - (x^2 + y^2)) + x"
//! # z = "c * z"
//! # [flow.constants]
//! # c = 1.0
//! # [domain]
//! # kind = "torus"              # torus | box
//! # periods = [1.0, 1.0, 1.0]   # torus
//! # min = [-2,-2,-1]; max = [2,2,1]  # box
//! # [domain.trapping]           # optional sampling region for box domains
//! # kind = "shell"
//! # r_min = 0.5
//! # r_max = 1.5
//! # z_abs = 0.5
//! ```
//!
//! The `OUTPUT_DIR` environment variable overrides `output_dir`; the `--out`
//! flag overrides both. No other environment configuration exists.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use flow3::flowcore::{builtin, from_expressions, DomainSpec};
use flow3::region::RegionSpec;
use flow3::VectorFieldSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub threads: usize,
    pub flow: FlowConfig,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub certificates: Certificates,
    /// Explicit Poincaré sections; auto-placed when empty.
    #[serde(default)]
    pub sections: Vec<SectionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub anchor: [f64; 3],
    pub normal: [f64; 3],
    pub half_width: f64,
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub expression: Option<ExpressionConfig>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionConfig {
    pub x: String,
    pub y: String,
    pub z: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    #[serde(default)]
    pub periods: Option<[f64; 3]>,
    #[serde(default)]
    pub min: Option<[f64; 3]>,
    #[serde(default)]
    pub max: Option<[f64; 3]>,
    #[serde(default)]
    pub trapping: Option<RegionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub seeds: usize,
    pub period_bound: f64,
    pub max_returns: usize,
    pub flow_tol: f64,
    pub orbit_tol: f64,
    pub auto_sections: usize,
    pub section_half_width: Option<f64>,
    pub min_period: f64,
    pub mc_samples: u64,
    pub t_transient: f64,
    pub t_horizon: f64,
    pub trap_horizons: Vec<f64>,
    pub trap_tube_radius: f64,
    pub eps_fat: Option<f64>,
    /// Probes for the unit-time cocycle norm bound estimate.
    pub norm_probes: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            seeds: 200,
            period_bound: 12.0,
            max_returns: 3,
            flow_tol: 1e-10,
            orbit_tol: 1e-9,
            auto_sections: 4,
            section_half_width: None,
            min_period: 0.25,
            mc_samples: 2000,
            t_transient: 20.0,
            t_horizon: 200.0,
            trap_horizons: vec![0.0, 2.0, 5.0, 10.0, 20.0, 40.0],
            trap_tube_radius: 0.05,
            eps_fat: None,
            norm_probes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Certificates {
    pub dominated_window: f64,
    pub dominated_gaps: usize,
    pub contraction_rate: f64,
    pub angle_floor: f64,
    pub hyperbolic_k: f64,
    pub hyperbolic_rate: f64,
    pub hyperbolic_horizon: f64,
    pub attractor_tube_radius: f64,
    pub attractor_tau: f64,
    pub attractor_horizon: f64,
    pub attractor_eps: f64,
}

impl Default for Certificates {
    fn default() -> Self {
        Certificates {
            dominated_window: 1.0,
            dominated_gaps: 64,
            contraction_rate: 0.9,
            angle_floor: 0.1,
            hyperbolic_k: 2.0,
            hyperbolic_rate: 0.1,
            hyperbolic_horizon: 20.0,
            attractor_tube_radius: 0.4,
            attractor_tau: 1.0,
            attractor_horizon: 25.0,
            attractor_eps: 0.05,
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let raw = std::fs::read(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        let text = String::from_utf8_lossy(&raw);
        let cfg: AnalysisConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok((cfg, raw))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.flow.builtin.is_some() == self.flow.expression.is_some() {
            return Err(ConfigError::Invalid(
                "exactly one of flow.builtin and flow.expression must be set".into(),
            ));
        }
        for (name, v) in [
            ("budgets.flow_tol", self.budgets.flow_tol),
            ("budgets.orbit_tol", self.budgets.orbit_tol),
            ("budgets.period_bound", self.budgets.period_bound),
            ("certificates.dominated_window", self.certificates.dominated_window),
            ("certificates.angle_floor", self.certificates.angle_floor),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if !(self.certificates.contraction_rate > 0.0 && self.certificates.contraction_rate < 1.0) {
            return Err(ConfigError::Invalid("certificates.contraction_rate must lie in (0,1)".into()));
        }
        Ok(())
    }

    /// Build the flow this config describes.
    pub fn build_spec(&self) -> Result<VectorFieldSpec, ConfigError> {
        if let Some(name) = &self.flow.builtin {
            let mut spec = builtin(name, &self.flow.params)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if let Some(dc) = &self.domain {
                let domain = dc.build()?;
                spec.domain = domain;
                if let Some(t) = &dc.trapping {
                    spec.trapping = Some(t.clone());
                }
            }
            return Ok(spec);
        }
        let expr = self.flow.expression.as_ref().expect("validated");
        let dc = self.domain.as_ref().ok_or_else(|| {
            ConfigError::Invalid("expression flows need a [domain] section".into())
        })?;
        let domain = dc.build()?;
        let consts: HashMap<String, f64> =
            self.flow.constants.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let mut spec = from_expressions(
            "expression",
            [expr.x.as_str(), expr.y.as_str(), expr.z.as_str()],
            &consts,
            domain,
        )
        .map_err(|e| ConfigError::Invalid(format!("flow expression: {e}")))?;
        if let Some(t) = &dc.trapping {
            spec.trapping = Some(t.clone());
        }
        Ok(spec)
    }
}

impl DomainConfig {
    fn build(&self) -> Result<DomainSpec, ConfigError> {
        match self.kind.as_str() {
            "torus" => {
                let p = self.periods.unwrap_or([1.0, 1.0, 1.0]);
                DomainSpec::torus(p).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            "box" => {
                let (min, max) = match (self.min, self.max) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(ConfigError::Invalid(
                            "box domain needs min and max".into(),
                        ))
                    }
                };
                DomainSpec::boxed(min, max).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            other => Err(ConfigError::Invalid(format!("unknown domain kind `{other}`"))),
        }
    }
}

/// Parameters for the surgery subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryParams {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
    #[serde(default)]
    pub budget: Option<SurgeryBudgetInputs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryBudgetInputs {
    pub c: f64,
    pub eps: f64,
    pub lambda_rate: f64,
    pub alpha: f64,
}

impl SurgeryParams {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}
