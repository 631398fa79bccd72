use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, GroupSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectBand {
    /// |d| < 0.01.
    None,
    Minimal,
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl EffectBand {
    pub fn of(d: f64) -> Self {
        let a = d.abs();
        if a < 0.01 {
            EffectBand::None
        } else if a < 0.20 {
            EffectBand::Minimal
        } else if a < 0.50 {
            EffectBand::Small
        } else if a < 0.80 {
            EffectBand::Medium
        } else if a < 1.00 {
            EffectBand::Large
        } else {
            EffectBand::VeryLarge
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectBand::None => "none",
            EffectBand::Minimal => "minimal",
            EffectBand::Small => "small",
            EffectBand::Medium => "medium",
            EffectBand::Large => "large",
            EffectBand::VeryLarge => "very_large",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub d: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub band: EffectBand,
}

impl fmt::Display for EffectSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} [{:.2}, {:.2}]", self.d, self.ci_low, self.ci_high)
    }
}

const Z_95: f64 = 1.96;

/// Standardized mean difference of `a` over `b` with pooled SD and a
/// normal-approximation 95% interval. Positive when `a` is higher.
pub fn cohens_d(a: &GroupSummary, b: &GroupSummary) -> Result<EffectSize, AnalyticsError> {
    if a.n < 2 || b.n < 2 {
        return Err(AnalyticsError::InsufficientData("each group needs n >= 2".into()));
    }
    let (n1, n2) = (a.n as f64, b.n as f64);
    let pooled_var = ((n1 - 1.0) * a.sd * a.sd + (n2 - 1.0) * b.sd * b.sd) / (n1 + n2 - 2.0);
    let diff = a.mean - b.mean;
    let d = if pooled_var > 0.0 {
        diff / pooled_var.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        return Err(AnalyticsError::DegeneratePooledSd);
    };
    let se = ((n1 + n2) / (n1 * n2) + d * d / (2.0 * (n1 + n2))).sqrt();
    Ok(EffectSize { d, ci_low: d - Z_95 * se, ci_high: d + Z_95 * se, band: EffectBand::of(d) })
}
