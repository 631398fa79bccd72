use std::collections::BTreeSet;
use std::io;

use serde::{Deserialize, Serialize};

use crate::task::{MetricsReport, TaskKind};

use super::{replay, Group, ParticipantMeta, SessionError, SessionLog, Sex};

/// Per-session result as stored in `*.metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    #[serde(flatten)]
    pub participant: ParticipantMeta,
    pub seed: u64,
    pub report: MetricsReport,
}

/// One (session, metric) observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub participant_id: String,
    pub group: Group,
    pub age: f64,
    pub sex: Sex,
    pub run_index: u32,
    pub module: TaskKind,
    pub metric: String,
    pub value: f64,
}

/// Long-format metrics, ordered by participant, run, module, then each
/// module's metric order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsRecord {
    pub fn from_log(log: &SessionLog) -> Result<Self, SessionError> {
        Ok(Self { participant: log.header.participant.clone(), seed: log.header.seed, report: replay(log)? })
    }
}

pub fn metrics_records(logs: &[SessionLog]) -> Result<Vec<MetricsRecord>, SessionError> {
    logs.iter().map(MetricsRecord::from_log).collect()
}

/// Replays each log and tabulates the completed sessions.
pub fn export_metrics(logs: &[SessionLog]) -> Result<MetricsTable, SessionError> {
    MetricsTable::from_records(&metrics_records(logs)?)
}

impl MetricsTable {
    pub fn from_records(records: &[MetricsRecord]) -> Result<Self, SessionError> {
        let incomplete: Vec<String> = records
            .iter()
            .filter(|r| !r.report.completed)
            .map(|r| format!("{}/run{}/{}", r.participant.participant_id, r.participant.run_index, r.report.module))
            .collect();
        if !incomplete.is_empty() {
            return Err(SessionError::IncompleteSession(incomplete));
        }
        let mut sorted: Vec<&MetricsRecord> = records.iter().collect();
        sorted.sort_by(|a, b| {
            (&a.participant.participant_id, a.participant.run_index, a.report.module).cmp(&(
                &b.participant.participant_id,
                b.participant.run_index,
                b.report.module,
            ))
        });
        let mut seen = BTreeSet::new();
        let mut rows = Vec::new();
        for r in sorted {
            let p = &r.participant;
            if !seen.insert((p.participant_id.clone(), p.run_index, r.report.module)) {
                return Err(SessionError::DuplicateSession {
                    participant_id: p.participant_id.clone(),
                    run_index: p.run_index,
                    module: r.report.module,
                });
            }
            for (metric, value) in r.report.metric_rows() {
                rows.push(MetricsRow {
                    participant_id: p.participant_id.clone(),
                    group: p.group,
                    age: p.age,
                    sex: p.sex,
                    run_index: p.run_index,
                    module: r.report.module,
                    metric: metric.to_string(),
                    value,
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select<'a>(&'a self, module: TaskKind, metric: &'a str) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.rows.iter().filter(move |r| r.module == module && r.metric == metric)
    }

    /// Values of one metric for one group, optionally restricted to a run.
    pub fn values(&self, module: TaskKind, metric: &str, group: Group, run: Option<u32>) -> Vec<f64> {
        self.select(module, metric)
            .filter(|r| r.group == group && run.is_none_or(|k| r.run_index == k))
            .map(|r| r.value)
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), SessionError> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, SessionError> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<Result<Vec<MetricsRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }
}
