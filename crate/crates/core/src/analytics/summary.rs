use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Sample descriptive statistics; `sd` uses the n − 1 denominator and is 0
/// for a single value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl GroupSummary {
    /// Summary from published moments, when raw values are unavailable.
    pub fn from_moments(n: usize, mean: f64, sd: f64) -> Self {
        Self { n, mean, sd, min: f64::NAN, max: f64::NAN }
    }
}

pub fn summarize(values: &[f64]) -> Result<GroupSummary, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let n = values.len();
    // Welford: one pass, no catastrophic cancellation.
    let (mut mean, mut m2) = (0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(GroupSummary { n, mean: mean.clamp(min, max), sd, min, max })
}
