//! Option structs shared by the JSON config files and the command line.
//! Flags are parsed into the same structs and laid over the file contents.

use std::path::Path;

use bpm_core::detector::ConvergenceCriteria;
use bpm_core::systems::SystemConfig;
use bpm_core::{DetectionConfig, Error, Method, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Ccm,
    Bpm,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Ccm => vec![Method::Ccm],
            MethodChoice::Bpm => vec![Method::Bpm],
            MethodChoice::Both => vec![Method::Ccm, Method::Bpm],
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Detection options. Every field is optional so a config file and the
/// command line can each supply a subset.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSettings {
    /// Column holding the first series
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    /// Column holding the second series
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    /// Column holding θ (required for BPM unless --theta-staircase is given)
    #[arg(long, conflicts_with = "theta_staircase")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    /// Build θ as a staircase that steps once every SEG samples
    #[arg(long, value_name = "SEG")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_staircase: Option<usize>,
    /// Step height of the staircase θ
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staircase_delta: Option<f64>,
    /// Column holding trial ids; a column named `trial` is used when present
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_column: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodChoice>,
    /// Total embedding dimension (default 2 for CCM, 4 for BPM)
    #[arg(short = 'E', long)]
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    /// Comma-separated, strictly increasing library sizes
    #[arg(long, value_delimiter = ',')]
    #[serde(rename = "L_grid", skip_serializing_if = "Option::is_none")]
    pub l_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_final_skill: Option<f64>,
    /// Largest tolerated |slope| of skill per unit L
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
    /// Trailing grid points used for the plateau test
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theiler_window: Option<usize>,
    /// Keep delay windows inside one trial
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub respect_trials: Option<bool>,
    /// Attractor dimension, used only to warn when E is small
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_hint: Option<usize>,
}

impl DetectSettings {
    /// Fields set in `other` win.
    pub fn overlay(self, other: &DetectSettings) -> DetectSettings {
        let o = other.clone();
        DetectSettings {
            x: o.x.or(self.x),
            y: o.y.or(self.y),
            theta: o.theta.or(self.theta),
            theta_staircase: o.theta_staircase.or(self.theta_staircase),
            staircase_delta: o.staircase_delta.or(self.staircase_delta),
            trial_column: o.trial_column.or(self.trial_column),
            method: o.method.or(self.method),
            embed_dim: o.embed_dim.or(self.embed_dim),
            tau: o.tau.or(self.tau),
            l_grid: o.l_grid.or(self.l_grid),
            replicates: o.replicates.or(self.replicates),
            seed: o.seed.or(self.seed),
            min_final_skill: o.min_final_skill.or(self.min_final_skill),
            max_slope: o.max_slope.or(self.max_slope),
            window: o.window.or(self.window),
            theiler_window: o.theiler_window.or(self.theiler_window),
            respect_trials: o.respect_trials.or(self.respect_trials),
            m_hint: o.m_hint.or(self.m_hint),
        }
    }

    pub fn method_choice(&self) -> MethodChoice {
        self.method.unwrap_or(MethodChoice::Ccm)
    }

    pub fn needs_theta(&self) -> bool {
        self.method_choice().methods().contains(&Method::Bpm)
    }

    pub fn detection_config(&self, method: Method) -> DetectionConfig {
        let mut cfg = DetectionConfig::for_method(method);
        let defaults = ConvergenceCriteria::default();
        cfg.embed_dim = self.embed_dim.unwrap_or(cfg.embed_dim);
        cfg.tau = self.tau.unwrap_or(cfg.tau);
        cfg.l_grid = self.l_grid.clone();
        cfg.replicates = self.replicates.unwrap_or(cfg.replicates);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.convergence = ConvergenceCriteria {
            min_final_skill: self.min_final_skill.unwrap_or(defaults.min_final_skill),
            max_slope: self.max_slope.unwrap_or(defaults.max_slope),
            window: self.window.unwrap_or(defaults.window),
        };
        cfg.theiler_window = self.theiler_window.unwrap_or(cfg.theiler_window);
        cfg.respect_trials = self.respect_trials.unwrap_or(cfg.respect_trials);
        cfg.m_hint = self.m_hint;
        cfg
    }
}

/// System parameters given on the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemFlags {
    /// Benchmark case (1, 2 or 3)
    #[arg(long)]
    pub case: Option<u8>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub beta3: Option<f64>,
    #[arg(long)]
    pub beta4: Option<f64>,
    #[arg(long)]
    pub beta5: Option<f64>,
    #[arg(long)]
    pub beta6: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of recorded samples
    #[arg(long)]
    pub steps: Option<usize>,
    /// Updates discarded before recording
    #[arg(long)]
    pub burn_in: Option<usize>,
}

impl SystemFlags {
    pub fn is_empty(&self) -> bool {
        self.to_config() == SystemConfig::default()
    }

    pub fn to_config(&self) -> SystemConfig {
        SystemConfig {
            case: self.case,
            beta1: self.beta1,
            beta2: self.beta2,
            beta3: self.beta3,
            beta4: self.beta4,
            beta5: self.beta5,
            beta6: self.beta6,
            x0: self.x0,
            y0: self.y0,
            theta0: self.theta0,
            alpha: self.alpha,
            steps: self.steps,
            burn_in: self.burn_in,
        }
    }
}

/// Loads the optional config file and applies the flags on top.
pub fn merge_system(path: Option<&Path>, flags: &SystemFlags) -> Result<SystemConfig> {
    let base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            SystemConfig::from_json(&text)?
        }
        None => SystemConfig::default(),
    };
    Ok(base.overlay(&flags.to_config()))
}

pub fn merge_detect(path: Option<&Path>, flags: &DetectSettings) -> Result<DetectSettings> {
    let base: DetectSettings = match path {
        Some(p) => read_json(p)?,
        None => DetectSettings::default(),
    };
    Ok(base.overlay(flags))
}
