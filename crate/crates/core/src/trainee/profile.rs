use serde::{Deserialize, Serialize};

use super::TraineeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspStrategy {
    FewLargePulls,
    ManySmallPulls,
}

/// Behavioral parameters of a synthetic trainee. Distances are millimeters,
/// times milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillProfile {
    /// Stationary per-axis SD of the controller hand-noise process.
    pub tremor_sd_mm: f64,
    /// Multiplier on movement speeds and inverse multiplier on pauses.
    pub speed_factor: f64,
    /// 0–1. Raises hover margins and slows pulls.
    pub caution: f64,
    /// 0–1. Rate of deliberate over-travel toward the retina.
    pub recklessness: f64,
    pub grasp_strategy: GraspStrategy,
    /// SD of laser aim scatter around the intended cell.
    pub aim_sd_mm: f64,
    /// 0–1. Fraction of laser shots drawn toward the break center.
    pub center_bias: f64,
    /// SD of the misjudged position of a 3-D target.
    pub depth_error_mm: f64,
    /// Perception-to-action delay.
    pub reaction_ms: f64,
    /// Pace gain per repeated run: run k is `1 + learning_per_run·(k − 1)`
    /// times faster.
    pub learning_per_run: f64,
    /// Peripheral path following speed.
    pub tracking_speed_mm_s: f64,
    /// Rate of attention lapses while holding a target still.
    pub lapse_hz: f64,
}

impl SkillProfile {
    pub const EXPERT: SkillProfile = SkillProfile {
        tremor_sd_mm: 0.2,
        speed_factor: 1.0,
        caution: 0.8,
        recklessness: 0.04,
        grasp_strategy: GraspStrategy::ManySmallPulls,
        aim_sd_mm: 0.12,
        center_bias: 0.02,
        depth_error_mm: 0.35,
        reaction_ms: 450.0,
        learning_per_run: 0.18,
        tracking_speed_mm_s: 0.7,
        lapse_hz: 0.32,
    };

    pub const NOVICE: SkillProfile = SkillProfile {
        tremor_sd_mm: 0.3,
        speed_factor: 1.0,
        caution: 0.2,
        recklessness: 0.12,
        grasp_strategy: GraspStrategy::FewLargePulls,
        aim_sd_mm: 0.2,
        center_bias: 0.1,
        depth_error_mm: 0.5,
        reaction_ms: 400.0,
        learning_per_run: 0.2,
        tracking_speed_mm_s: 0.7,
        lapse_hz: 0.6,
    };

    /// Noise-free, unbiased, never reckless.
    pub fn ideal() -> Self {
        Self { tremor_sd_mm: 0.0, recklessness: 0.0, aim_sd_mm: 0.0, center_bias: 0.0, depth_error_mm: 0.0, lapse_hz: 0.0, ..Self::EXPERT }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "expert" => Some(Self::EXPERT),
            "novice" => Some(Self::NOVICE),
            "ideal" => Some(Self::ideal()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), TraineeError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let ok = nonneg(self.tremor_sd_mm)
            && self.speed_factor.is_finite()
            && self.speed_factor > 0.0
            && unit(self.caution)
            && unit(self.recklessness)
            && nonneg(self.aim_sd_mm)
            && unit(self.center_bias)
            && nonneg(self.depth_error_mm)
            && nonneg(self.reaction_ms)
            && nonneg(self.learning_per_run)
            && self.tracking_speed_mm_s.is_finite()
            && self.tracking_speed_mm_s > 0.0
            && nonneg(self.lapse_hz);
        if ok {
            Ok(())
        } else {
            Err(TraineeError::InvalidProfile)
        }
    }

    /// Pace multiplier for a (1-based) run index.
    pub fn run_pace(&self, run_index: u32) -> f64 {
        1.0 + self.learning_per_run * f64::from(run_index.saturating_sub(1))
    }
}
