//! Optional JSON config file overlaying the run defaults.
//!
//! Every field is optional; present fields replace the corresponding
//! default. Unknown keys are rejected so typos fail loudly.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use opf_core::{FeedbackConfig, FilterNoise, OpConfig, RunConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub op: OpOverrides,
    #[serde(default)]
    pub feedback: FeedbackOverrides,
    #[serde(default)]
    pub filter_noise: FilterNoiseOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpOverrides {
    pub history_len: Option<usize>,
    pub static_translation_eps: Option<f64>,
    pub static_rotation_eps: Option<f64>,
    pub occluder_gap: Option<f64>,
    pub inflation_base: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackOverrides {
    pub epsilon_safe: Option<f64>,
    pub k_p_nom: Option<f64>,
    pub k_d_nom: Option<f64>,
    pub steepness: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterNoiseOverrides {
    pub process_sigma_t: Option<f64>,
    pub process_sigma_r: Option<f64>,
    pub measurement_sigma_t: Option<f64>,
    pub measurement_sigma_r: Option<f64>,
    pub init_spread_t: Option<f64>,
    pub init_spread_r: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies the present fields onto a run config.
    pub fn apply(&self, run: &mut RunConfig) {
        apply_op(&self.op, &mut run.op);
        if let Some(v) = self.feedback.epsilon_safe {
            run.epsilon_safe = Some(v);
        }
        apply_feedback(&self.feedback, &mut run.feedback);
        apply_filter_noise(&self.filter_noise, &mut run.filter_noise);
    }
}

fn apply_op(src: &OpOverrides, dst: &mut OpConfig) {
    if let Some(v) = src.history_len {
        dst.history_len = v;
    }
    if let Some(v) = src.static_translation_eps {
        dst.static_translation_eps = v;
    }
    if let Some(v) = src.static_rotation_eps {
        dst.static_rotation_eps = v;
    }
    if let Some(v) = src.occluder_gap {
        dst.occluder_gap = v;
    }
    if let Some(v) = src.inflation_base {
        dst.inflation_base = v;
    }
}

fn apply_feedback(src: &FeedbackOverrides, dst: &mut FeedbackConfig) {
    if let Some(v) = src.epsilon_safe {
        dst.epsilon_safe = v;
    }
    if let Some(v) = src.k_p_nom {
        dst.k_p_nom = v;
    }
    if let Some(v) = src.k_d_nom {
        dst.k_d_nom = v;
    }
    if let Some(v) = src.steepness {
        dst.steepness = v;
    }
}

fn apply_filter_noise(src: &FilterNoiseOverrides, dst: &mut FilterNoise) {
    if let Some(v) = src.process_sigma_t {
        dst.process_sigma_t = Some(v);
    }
    if let Some(v) = src.process_sigma_r {
        dst.process_sigma_r = Some(v);
    }
    if let Some(v) = src.measurement_sigma_t {
        dst.measurement_sigma_t = Some(v);
    }
    if let Some(v) = src.measurement_sigma_r {
        dst.measurement_sigma_r = Some(v);
    }
    if let Some(v) = src.init_spread_t {
        dst.init_spread_t = Some(v);
    }
    if let Some(v) = src.init_spread_r {
        dst.init_spread_r = Some(v);
    }
}
