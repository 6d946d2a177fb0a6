//! Flat run configuration: a JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Result;
use pvc_core::bicop::Family;
use pvc_core::dvine::presets::Preset;
use pvc_core::dvine::DVineSpec;
use pvc_core::fit::{bb1_sarmanov_model, frank_model, ModelSpec};
use pvc_core::pvc::PvcBuildConfig;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Either a model name (`frank`, `bb1_sarmanov`), a family layout such as
/// `"fgm,fgm;fgm"`, or a full model object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Named(String),
    Spec(ModelSpec),
}

impl ModelChoice {
    pub fn resolve(&self, d: usize) -> Result<ModelSpec> {
        match self {
            ModelChoice::Spec(m) => Ok(m.clone()),
            ModelChoice::Named(s) => match s.as_str() {
                "frank" => Ok(frank_model()),
                "bb1_sarmanov" => Ok(bb1_sarmanov_model()),
                layout => {
                    let trees = layout
                        .split(';')
                        .map(|t| t.split(',').map(|f| f.trim().parse::<Family>()).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| UsageError(format!("model {layout:?}: {e}")))?;
                    let d = if trees.is_empty() { d } else { trees[0].len() + 1 };
                    Ok(ModelSpec::from_families(d, &trees).map_err(|e| UsageError(format!("model {layout:?}: {e}")))?)
                }
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub experiment: Option<String>,
    /// Preset in `name(a,b,...)` form.
    pub dgp: Option<String>,
    pub model: Option<ModelChoice>,
    #[serde(rename = "N")]
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "R")]
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub order: Option<usize>,
    pub mc_n: Option<usize>,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub family: Option<String>,
    pub data: Option<PathBuf>,
    pub approx: Option<PathBuf>,
    pub ranks: Option<bool>,
    /// θ₁₂ values of a KLD scan.
    pub grid: Option<Vec<f64>>,
    pub pvc: Option<PvcBuildConfig>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?)
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, dgp, model, n_list, replications, seed, out, order, mc_n, gamma, theta, delta, intercept,
            slope, family, data, approx, ranks, grid, pvc
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn dgp(&self) -> Result<(Preset, DVineSpec)> {
        let s = self.dgp.as_deref().ok_or_else(|| UsageError("--dgp is required".into()))?;
        let preset = s.parse::<Preset>().map_err(|e| UsageError(e.to_string()))?;
        let dgp = preset.build().map_err(|e| UsageError(format!("{preset}: {e}")))?;
        Ok((preset, dgp))
    }

    pub fn family(&self, default: Family) -> Result<Family> {
        match &self.family {
            None => Ok(default),
            Some(s) => Ok(s.parse::<Family>().map_err(|e| UsageError(e.to_string()))?),
        }
    }

    pub fn out_dir(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out").join(default))
    }
}
