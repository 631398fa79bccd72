//! Per-group summary statistics of a reference cohort (10 novices and 10
//! experts, three runs each) and the effect sizes derived from them.

use std::io;

use serde::{Deserialize, Serialize};

use crate::session::Group;
use crate::task::TaskKind;

use super::{cohens_d, AnalyticsError, EffectSize, GroupSummary};

/// Bundled copy of `data/group_summaries.csv`.
pub const GROUP_SUMMARIES_CSV: &str = include_str!("../../data/group_summaries.csv");

/// `run` is `"1"`, `"2"`, `"3"` or `"overall"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub module: TaskKind,
    pub metric: String,
    pub run: String,
    pub group: Group,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryRow {
    pub fn summary(&self) -> GroupSummary {
        GroupSummary { n: self.n, mean: self.mean, sd: self.sd, min: self.min, max: self.max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub module: TaskKind,
    pub metric: String,
    pub run: String,
    pub effect: EffectSize,
}

pub fn read_summaries<R: io::Read>(r: R) -> Result<Vec<SummaryRow>, AnalyticsError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(|e| AnalyticsError::Data(e.to_string()))
}

pub fn bundled_summaries() -> Vec<SummaryRow> {
    read_summaries(GROUP_SUMMARIES_CSV.as_bytes()).expect("bundled summaries parse")
}

/// Novice-versus-expert effect size for every (module, metric, run) that has
/// both groups, in input order.
pub fn effect_sizes_from_summaries(rows: &[SummaryRow]) -> Result<Vec<EffectRow>, AnalyticsError> {
    let mut out = Vec::new();
    for novice in rows.iter().filter(|r| r.group == Group::Novice) {
        let expert = rows
            .iter()
            .find(|r| r.group == Group::Expert && r.module == novice.module && r.metric == novice.metric && r.run == novice.run);
        if let Some(expert) = expert {
            out.push(EffectRow {
                module: novice.module,
                metric: novice.metric.clone(),
                run: novice.run.clone(),
                effect: cohens_d(&novice.summary(), &expert.summary())?,
            });
        }
    }
    Ok(out)
}
