use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::heatfield::{build_schedule, HeatError, NoiseSchedule, DEFAULT_LOG_FLOOR};

/// Sampler parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Number of diffusion levels `T`.
    pub diffusion_steps: usize,
    /// Langevin iterations per level `K`.
    pub anneal_steps: usize,
    /// Inter-robot guidance strength.
    pub beta: f64,
    /// Hard minimum distance between robots (units).
    pub d_safe: f64,
    /// Distance below which the repulsive cost activates (units).
    pub d_margin: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `alpha_t = step_ratio * sigma_t`.
    pub step_ratio: f64,
    /// Floor for `u` relative to its peak before taking logs.
    pub log_floor: f64,
    pub seed: u64,
    /// Wall-clock budget per plan in seconds.
    pub time_limit_s: f64,
    /// Drop the noise on the final iterate of the finest level.
    pub final_step_noiseless: bool,
    /// Goal tolerance around a region (units).
    pub goal_tol: f64,
    /// Reject micro-steps that would cross an obstacle or bring two robots
    /// within `d_safe` (the previous position is kept instead).
    pub feasibility_filter: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            diffusion_steps: 20,
            anneal_steps: 40,
            beta: 2.0,
            d_safe: 0.10,
            d_margin: 0.12,
            sigma_min: 0.005,
            sigma_max: 1.0,
            step_ratio: 0.25,
            log_floor: DEFAULT_LOG_FLOOR,
            seed: 0,
            time_limit_s: 180.0,
            final_step_noiseless: true,
            goal_tol: 0.05,
            feasibility_filter: true,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Config(m));
        if self.diffusion_steps < 2 {
            return bad(format!("steps must be >= 2, got {}", self.diffusion_steps));
        }
        if self.anneal_steps < 1 {
            return bad("anneal must be >= 1".into());
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !(self.d_safe > 0.0) {
            return bad(format!("d_safe must be positive, got {}", self.d_safe));
        }
        if !(self.d_margin > self.d_safe) {
            return bad(format!(
                "d_margin ({}) must exceed d_safe ({})",
                self.d_margin, self.d_safe
            ));
        }
        if !(self.time_limit_s > 0.0) {
            return bad("time_limit must be positive".into());
        }
        if !(self.goal_tol >= 0.0) {
            return bad("goal_tol must be >= 0".into());
        }
        if !(self.log_floor > 0.0 && self.log_floor < 1.0) {
            return bad(format!("log_floor must lie in (0, 1), got {}", self.log_floor));
        }
        self.schedule().map(|_| ()).map_err(PlanError::from)
    }

    pub fn schedule(&self) -> Result<NoiseSchedule, HeatError> {
        build_schedule(
            self.diffusion_steps,
            self.sigma_min,
            self.sigma_max,
            self.step_ratio,
        )
    }

    /// Applies every field set in `overrides`.
    pub fn apply(&mut self, overrides: &ConfigOverrides) {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if let Some(v) = overrides.$f { self.$f = v; })*
            };
        }
        take!(
            diffusion_steps,
            anneal_steps,
            beta,
            d_safe,
            d_margin,
            sigma_min,
            sigma_max,
            step_ratio,
            log_floor,
            seed,
            time_limit_s,
            final_step_noiseless,
            goal_tol,
            feasibility_filter
        );
    }

    pub fn with(mut self, overrides: &ConfigOverrides) -> Self {
        self.apply(overrides);
        self
    }
}

/// Partial configuration as found in a scenario's `config` block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(rename = "steps", default, skip_serializing_if = "Option::is_none")]
    pub diffusion_steps: Option<usize>,
    #[serde(rename = "anneal", default, skip_serializing_if = "Option::is_none")]
    pub anneal_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_safe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "time_limit", default, skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_step_noiseless: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_filter: Option<bool>,
}

impl ConfigOverrides {
    /// Fields set in `other` win.
    pub fn merged(&self, other: &ConfigOverrides) -> ConfigOverrides {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigOverrides { $($f: other.$f.or(self.$f),)* }
            };
        }
        pick!(
            diffusion_steps,
            anneal_steps,
            beta,
            d_safe,
            d_margin,
            sigma_min,
            sigma_max,
            step_ratio,
            log_floor,
            seed,
            time_limit_s,
            final_step_noiseless,
            goal_tol,
            feasibility_filter
        )
    }
}
