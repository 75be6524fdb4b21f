//! Simulation configuration and its TOML file format.
//!
//! Every key maps one-to-one onto a field below; unknown keys are rejected
//! so a misspelt tuning parameter fails loudly instead of being ignored.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ConvPath, DoGKernel, GaussianKernel, StepParams};
use crate::network::MapId;

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Per-map dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    pub tau: f64,
    #[serde(default)]
    pub baseline: f64,
    #[serde(default)]
    pub lateral: Option<DoGKernel>,
}

/// `sign · Σ_y s(x-y)·u_source(y)` added to the target's input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaProjection {
    pub source: MapId,
    pub target: MapId,
    pub kernel: GaussianKernel,
    pub sign: i8,
}

/// Conjunctive sigma-pi input `weight · Σ_y spread(x-y)·u_a(y)·u_b(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatedProjection {
    pub source_a: MapId,
    pub source_b: MapId,
    pub target: MapId,
    pub weight: f64,
    pub spread: GaussianKernel,
}

/// Sigma-pi correlation of a memory map with a focus map, scaled by `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionProjection {
    pub memory: MapId,
    pub focus: MapId,
    pub target: MapId,
}

/// Parameters of the scan experiment itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialParams {
    /// Ticks of blank input while the eye moves.
    pub blank_ticks: u32,
    /// Upper bound for a single settle phase.
    pub settle_max_ticks: u32,
    pub max_total_ticks: u64,
    /// Decoded target must fall this close (Chebyshev, cells) to a stimulus.
    pub fixation_tolerance_cells: usize,
    /// Standard deviation of gaussian landing error, degrees. Zero disables it.
    #[serde(default)]
    pub motor_noise_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Grid side; must be odd so the fovea is a single cell.
    pub n: usize,
    pub dt: f64,
    /// Gain of the anticipation correlation.
    pub beta: f64,
    /// Uniform noise `[0, a]` added to the focus input each tick.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
    pub theta_bump: f64,
    pub theta_off: f64,
    #[serde(default)]
    pub conv_path: ConvPath,
    pub cell_size_deg: f64,
    pub stimulus_amplitude: f64,
    pub stimulus_width_deg: f64,
    pub switch_amplitude: f64,
    pub switch_duration: u32,
    pub trial: TrialParams,
    pub maps: BTreeMap<MapId, MapParams>,
    #[serde(default)]
    pub sigma: Vec<SigmaProjection>,
    #[serde(default)]
    pub gated: Vec<GatedProjection>,
    #[serde(default)]
    pub convolution: Vec<ConvolutionProjection>,
}

/// The network half of the configuration is not split out; the two names
/// refer to the same thing.
pub type NetworkSpec = SimConfig;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::from_toml_str(DEFAULT_CONFIG, "default.toml")
            .expect("shipped default config is valid")
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: origin.to_string(),
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimConfig::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn map(&self, id: MapId) -> &MapParams {
        &self.maps[&id]
    }

    pub fn step_params(&self, id: MapId) -> StepParams {
        let m = self.map(id);
        StepParams::new(m.tau, self.dt).with_baseline(m.baseline)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n.is_multiple_of(2) {
            return Err(Error::config("n must be odd"));
        }
        let positive = [
            ("dt", self.dt),
            ("theta_bump", self.theta_bump),
            ("theta_off", self.theta_off),
            ("cell_size_deg", self.cell_size_deg),
            ("stimulus_amplitude", self.stimulus_amplitude),
            ("stimulus_width_deg", self.stimulus_width_deg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        let non_negative = [
            ("beta", self.beta),
            ("noise_amplitude", self.noise_amplitude),
            ("switch_amplitude", self.switch_amplitude),
            ("trial.motor_noise_deg", self.trial.motor_noise_deg),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative")));
            }
        }
        if self.theta_off >= self.theta_bump {
            return Err(Error::config("theta_off must be below theta_bump"));
        }
        if self.switch_duration == 0 {
            return Err(Error::config("switch_duration must be positive"));
        }
        if self.trial.settle_max_ticks == 0 || self.trial.max_total_ticks == 0 {
            return Err(Error::config("trial tick limits must be positive"));
        }
        for id in MapId::ALL {
            let m = self
                .maps
                .get(&id)
                .ok_or_else(|| Error::config(format!("maps.{} is missing", id.name())))?;
            self.step_params(id)
                .validate()
                .map_err(|e| Error::config(format!("maps.{}: {e}", id.name())))?;
            if let Some(k) = &m.lateral {
                k.validate()
                    .map_err(|e| Error::config(format!("maps.{}.lateral: {e}", id.name())))?;
            }
        }
        match &self.map(MapId::Focus).lateral {
            None => return Err(Error::config("maps.focus.lateral is missing")),
            Some(k) => k
                .validate_competitive()
                .map_err(|e| Error::config(format!("maps.focus.lateral: {e}")))?,
        }
        for (i, p) in self.sigma.iter().enumerate() {
            p.kernel
                .validate()
                .map_err(|e| Error::config(format!("sigma[{i}]: {e}")))?;
            if p.sign != 1 && p.sign != -1 {
                return Err(Error::config(format!("sigma[{i}].sign must be 1 or -1")));
            }
        }
        for (i, p) in self.gated.iter().enumerate() {
            p.spread
                .validate()
                .map_err(|e| Error::config(format!("gated[{i}]: {e}")))?;
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::config(format!("gated[{i}].weight must be positive")));
            }
        }
        Ok(())
    }
}
