use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::SsimConfig;
use crate::halmap::TransformConfig;
use crate::linop::DEFAULT_EPSILON;
use crate::recon::PlsTvConfig;
use crate::simulate::NoiseConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    pub factor: usize,
    #[serde(default)]
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub candidates: Vec<f64>,
}

/// One file configures every stage; each stage reads its own sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mask: Option<MaskConfig>,
    pub noise: Option<NoiseConfig>,
    /// Stability cutoff of the truncated pseudoinverse.
    pub epsilon: f64,
    pub plstv: PlsTvConfig,
    pub transform: TransformConfig,
    pub ssim: SsimConfig,
    pub sweep: SweepConfig,
    pub pdf_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mask: None,
            noise: None,
            epsilon: DEFAULT_EPSILON,
            plstv: PlsTvConfig::default(),
            transform: TransformConfig::default(),
            ssim: SsimConfig::default(),
            sweep: SweepConfig::default(),
            pdf_bins: 20,
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<(), CliError> {
        fn at(field: &'static str) -> impl Fn(crate::Error) -> CliError {
            move |e| CliError::Config(format!("{field}: {e}"))
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(CliError::Config("epsilon: must be a positive number".into()));
        }
        if self.pdf_bins == 0 {
            return Err(CliError::Config("pdf_bins: must be at least 1".into()));
        }
        if let Some(noise) = &self.noise {
            noise.validate().map_err(at("noise"))?;
        }
        if let Some(m) = &self.mask {
            if m.factor == 0 || m.offset >= m.factor {
                return Err(CliError::Config(format!(
                    "mask: need factor >= 1 and offset < factor, got factor {} offset {}",
                    m.factor, m.offset
                )));
            }
        }
        self.plstv.validate().map_err(at("plstv"))?;
        self.transform.validate().map_err(at("transform"))?;
        if let Some(bad) = self.sweep.candidates.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(CliError::Config(format!("sweep.candidates: invalid lambda {bad}")));
        }
        Ok(())
    }
}

/// Reads and validates a configuration; no path gives the defaults.
/// Type errors name the JSON path of the offending field.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let cfg = match path {
        None => PipelineConfig::default(),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let de = &mut serde_json::Deserializer::from_slice(&bytes);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                CliError::Config(format!("{path}: {}", e.into_inner()))
            })?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
