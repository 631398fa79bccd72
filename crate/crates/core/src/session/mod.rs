//! Session logs, replay and metrics export.
//!
//! A `*.session.jsonl` file holds one header line followed by frame lines and,
//! optionally, the event lines each frame produced. Floats are written in
//! shortest round-trip form and read back bit-exactly.

mod log;
mod table;

use serde::{Deserialize, Serialize};

use crate::task::{MetricsReport, Task, TaskError, TaskEvent, TaskKind};

pub(crate) use log::{event_line, frame_line, header_line};
pub use log::{read_log, read_log_str, write_log, write_log_string, FrameRecord, SessionHeader, SessionLog, LOG_VERSION};
pub use table::{export_metrics, metrics_records, MetricsRecord, MetricsRow, MetricsTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Novice,
    Expert,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Novice => "novice",
            Group::Expert => "expert",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

/// Who performed a session, and which of their runs it was.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMeta {
    pub participant_id: String,
    pub group: Group,
    pub age: f64,
    pub sex: Sex,
    pub run_index: u32,
}

impl Default for ParticipantMeta {
    fn default() -> Self {
        Self { participant_id: "anonymous".into(), group: Group::Novice, age: 30.0, sex: Sex::Female, run_index: 1 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("corrupt log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("unsupported log version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("layout hash mismatch: header {expected}, regenerated {found}")]
    SeedMismatch { expected: String, found: String },
    #[error("incomplete sessions: {}", .0.join(", "))]
    IncompleteSession(Vec<String>),
    #[error("duplicate session for participant {participant_id}, run {run_index}, module {module}")]
    DuplicateSession { participant_id: String, run_index: u32, module: TaskKind },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::CorruptLog { .. } => "CorruptLog",
            SessionError::VersionMismatch { .. } => "VersionMismatch",
            SessionError::SeedMismatch { .. } => "SeedMismatch",
            SessionError::IncompleteSession(_) => "IncompleteSession",
            SessionError::DuplicateSession { .. } => "DuplicateSession",
            SessionError::Task(e) => e.code(),
            SessionError::Io(_) => "Io",
            SessionError::Csv(_) => "Csv",
            SessionError::Json(_) => "Json",
        }
    }
}

/// Rebuilds the task a log was recorded against, checking its layout hash.
pub fn task_for_header(header: &SessionHeader) -> Result<Task, SessionError> {
    let task = Task::new(header.module, header.config.clone(), header.seed, header.calibration)?;
    let found = task.layout_hash();
    if found != header.layout_hash {
        return Err(SessionError::SeedMismatch { expected: header.layout_hash.clone(), found });
    }
    Ok(task)
}

/// Replays every frame and returns the regenerated events with the report.
/// Logs that stop before completion yield a forced, incomplete report.
pub fn replay_with_events(log: &SessionLog) -> Result<(MetricsReport, Vec<TaskEvent>), SessionError> {
    let mut task = task_for_header(&log.header)?;
    let mut events = Vec::new();
    for frame in &log.frames {
        events.extend(task.tick(frame)?);
    }
    Ok((task.finalize(true)?, events))
}

pub fn replay(log: &SessionLog) -> Result<MetricsReport, SessionError> {
    replay_with_events(log).map(|(r, _)| r)
}

#[cfg(test)]
mod tests;
