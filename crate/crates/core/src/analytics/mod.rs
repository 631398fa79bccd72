//! Descriptive statistics, standardized effect sizes, random-intercept mixed
//! models and laser-spot heatmaps.

mod effect;
mod heatmap;
mod lmm;
mod reference;
mod report;
mod summary;

pub use effect::{cohens_d, EffectBand, EffectSize};
pub use heatmap::{heatmap, ring_mass, HeatmapGrid, DEFAULT_GRID};
pub use lmm::{fit_lmm, fit_random_intercept, FixedEffect, LmmData, LmmFit, LmmSpec};
pub use reference::{
    bundled_summaries, effect_sizes_from_summaries, read_summaries, EffectRow, SummaryRow, GROUP_SUMMARIES_CSV,
};
pub use report::{analyze, run_effect_on_efficiency, write_report, AnalysisReport, LmmRow, RingMass};
pub use summary::{summarize, GroupSummary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value")]
    NonFinite,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("pooled standard deviation is zero but the means differ")]
    DegeneratePooledSd,
    #[error("fixed-effect design is rank deficient")]
    SingularDesign,
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("data error: {0}")]
    Data(String),
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::EmptyInput => "EmptyInput",
            AnalyticsError::NonFinite => "NonFinite",
            AnalyticsError::InsufficientData(_) => "InsufficientData",
            AnalyticsError::DegeneratePooledSd => "DegeneratePooledSD",
            AnalyticsError::SingularDesign => "SingularDesign",
            AnalyticsError::NonConvergence(_) => "NonConvergence",
            AnalyticsError::Data(_) => "DataError",
        }
    }
}
