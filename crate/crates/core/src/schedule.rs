//! Parameter schedules `ell_t, n_t, M_t, eps_t, delta_t, zeta_t`.
//!
//! Each sequence is drawn from a small parametric family whose shape
//! guarantees the required monotonicity:
//!
//! | field | rule | default |
//! |-------|------|---------|
//! | `ell` | `base + floor(log2(1 + t) / log_divisor)` | `1 + floor(log2(1+t)/8)` |
//! | `n`   | `base + floor(t / step)` | `3 + floor(t/1000)` |
//! | `M`   | `base + floor(t / step)` | `1 + floor(t/2000)` |
//! | `eps` | `scale * t^-exponent` | `t^-1/4` |
//! | `delta` | `total * 6 / (pi^2 t^2)` | `total = 0.05` |
//! | `zeta` | `scale * t^-exponent` | `t^-1/4` |
//!
//! Configs are TOML documents with one table per field; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelRule {
    pub base: u32,
    pub log_divisor: f64,
}

impl Default for LevelRule {
    fn default() -> Self {
        Self {
            base: 1,
            log_divisor: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRule {
    pub base: u32,
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerRule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for PowerRule {
    fn default() -> Self {
        Self {
            scale: 1.0,
            exponent: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaRule {
    pub total: f64,
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self { total: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub ell: LevelRule,
    pub n: StepRule,
    #[serde(rename = "M")]
    pub max_gap: StepRule,
    pub eps: PowerRule,
    pub delta: DeltaRule,
    pub zeta: PowerRule,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            ell: LevelRule::default(),
            n: StepRule {
                base: 3,
                step: 1000,
            },
            max_gap: StepRule {
                base: 1,
                step: 2000,
            },
            eps: PowerRule::default(),
            delta: DeltaRule::default(),
            zeta: PowerRule::default(),
        }
    }
}

impl ScheduleConfig {
    /// Defaults with `eps_t = zeta_t = t^-1/2`. Over horizons of a few dozen
    /// steps the `t^-1/4` defaults stay above 0.35, which masks dependence
    /// of that order; this preset lets short runs resolve it.
    pub fn desk() -> Self {
        let fast = PowerRule {
            scale: 1.0,
            exponent: 0.5,
        };
        Self {
            eps: fast,
            zeta: fast,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schedule config serializes")
    }
}

/// A validated schedule. Immutable; all accessors take the time index
/// `t >= 1` (zero is treated as one).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ParameterSchedule {
    config: ScheduleConfig,
}

/// Every schedule value at one time index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleValues {
    pub t: u64,
    pub ell: u32,
    pub n: u32,
    #[serde(rename = "M")]
    pub max_gap: u32,
    pub eps: f64,
    pub delta: f64,
    pub zeta: f64,
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ParameterSchedule {
    pub fn new(config: ScheduleConfig) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if config.ell.base == 0 {
            return bad("ell.base must be at least 1");
        }
        if !positive_finite(config.ell.log_divisor) {
            return bad("ell.log_divisor must be positive");
        }
        if config.n.base == 0 || config.n.step == 0 {
            return bad("n.base and n.step must be at least 1");
        }
        if config.max_gap.base == 0 || config.max_gap.step == 0 {
            return bad("M.base and M.step must be at least 1");
        }
        for (name, rule) in [("eps", config.eps), ("zeta", config.zeta)] {
            if !positive_finite(rule.scale) || !positive_finite(rule.exponent) {
                return Err(Error::Config(format!(
                    "{name}.scale and {name}.exponent must be positive"
                )));
            }
        }
        if !(config.delta.total > 0.0 && config.delta.total < 1.0) {
            return bad("delta.total must lie in (0, 1)");
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &ScheduleConfig {
        &self.config
    }

    pub fn ell(&self, t: u64) -> u32 {
        let t = t.max(1);
        let steps = ((1 + t) as f64).log2() / self.config.ell.log_divisor;
        self.config.ell.base + steps.floor() as u32
    }

    pub fn n(&self, t: u64) -> u32 {
        step_value(self.config.n, t)
    }

    pub fn max_gap(&self, t: u64) -> u32 {
        step_value(self.config.max_gap, t)
    }

    pub fn eps(&self, t: u64) -> f64 {
        power_value(self.config.eps, t)
    }

    pub fn delta(&self, t: u64) -> f64 {
        let t = t.max(1) as f64;
        self.config.delta.total * 6.0 / (std::f64::consts::PI * std::f64::consts::PI * t * t)
    }

    pub fn zeta(&self, t: u64) -> f64 {
        power_value(self.config.zeta, t)
    }

    pub fn values_at(&self, t: u64) -> ScheduleValues {
        let t = t.max(1);
        ScheduleValues {
            t,
            ell: self.ell(t),
            n: self.n(t),
            max_gap: self.max_gap(t),
            eps: self.eps(t),
            delta: self.delta(t),
            zeta: self.zeta(t),
        }
    }
}

fn step_value(rule: StepRule, t: u64) -> u32 {
    let extra = t.max(1) / rule.step;
    rule.base.saturating_add(u32::try_from(extra).unwrap_or(u32::MAX))
}

fn power_value(rule: PowerRule, t: u64) -> f64 {
    rule.scale * (t.max(1) as f64).powf(-rule.exponent)
}
