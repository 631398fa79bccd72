use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geom::CalibrationOffset;
use crate::task::{Task, TaskConfig, TaskEvent, TaskKind, TickInput};

use super::{ParticipantMeta, SessionError};

pub const LOG_VERSION: u64 = 1;

/// A recorded input frame; identical to the engine's tick input.
pub type FrameRecord = TickInput;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub v: u64,
    pub module: TaskKind,
    pub seed: u64,
    pub config: TaskConfig,
    /// Hash of the layout generated from `(module, config, seed)`.
    pub layout_hash: String,
    #[serde(default)]
    pub calibration: CalibrationOffset,
    #[serde(flatten)]
    pub participant: ParticipantMeta,
}

impl SessionHeader {
    /// Header for a new session; computes the layout hash from the task it
    /// describes.
    pub fn new(
        module: TaskKind,
        config: TaskConfig,
        seed: u64,
        calibration: CalibrationOffset,
        participant: ParticipantMeta,
    ) -> Result<Self, SessionError> {
        let task = Task::new(module, config.clone(), seed, calibration)?;
        Ok(Self { v: LOG_VERSION, module, seed, config, layout_hash: task.layout_hash(), calibration, participant })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub frames: Vec<FrameRecord>,
    /// Engine output, if recorded. Regenerable by replay.
    pub events: Vec<TaskEvent>,
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    #[serde(rename = "type")]
    ty: &'static str,
    #[serde(flatten)]
    inner: &'a T,
}

pub(crate) fn header_line(h: &SessionHeader) -> String {
    serde_json::to_string(&Tagged { ty: "header", inner: h }).expect("header serializes")
}

pub(crate) fn frame_line(f: &FrameRecord) -> String {
    serde_json::to_string(&Tagged { ty: "frame", inner: f }).expect("frame serializes")
}

pub(crate) fn event_line(e: &TaskEvent) -> String {
    serde_json::to_string(&Tagged { ty: "event", inner: e }).expect("event serializes")
}

/// Serializes a log. Each frame is followed by the events stamped at or
/// before its timestamp, which is the order a live capture appends them in.
pub fn write_log_string(log: &SessionLog) -> String {
    let mut out = header_line(&log.header);
    out.push('\n');
    let mut ev = log.events.iter().peekable();
    for f in &log.frames {
        out.push_str(&frame_line(f));
        out.push('\n');
        while let Some(e) = ev.next_if(|e| e.t_ms() <= f.t_ms) {
            out.push_str(&event_line(e));
            out.push('\n');
        }
    }
    for e in ev {
        out.push_str(&event_line(e));
        out.push('\n');
    }
    out
}

pub fn write_log(path: impl AsRef<Path>, log: &SessionLog) -> Result<(), SessionError> {
    let mut f = fs::File::create(path)?;
    f.write_all(write_log_string(log).as_bytes())?;
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<SessionLog, SessionError> {
    read_log_str(&fs::read_to_string(path)?)
}

fn corrupt(line: usize, reason: impl ToString) -> SessionError {
    SessionError::CorruptLog { line, reason: reason.to_string() }
}

fn parse_line(line_no: usize, text: &str) -> Result<(String, Value), SessionError> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| corrupt(line_no, e))?;
    let ty = v
        .as_object_mut()
        .and_then(|o| o.remove("type"))
        .and_then(|t| t.as_str().map(str::to_owned))
        .ok_or_else(|| corrupt(line_no, "missing record type"))?;
    Ok((ty, v))
}

pub fn read_log_str(text: &str) -> Result<SessionLog, SessionError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (n, first) = lines.next().ok_or_else(|| corrupt(1, "empty log"))?;
    let (ty, hv) = parse_line(n, first)?;
    if ty != "header" {
        return Err(corrupt(n, "first record must be the header"));
    }
    let version = hv.get("v").and_then(Value::as_u64).ok_or_else(|| corrupt(n, "header lacks version"))?;
    if version != LOG_VERSION {
        return Err(SessionError::VersionMismatch { found: version, expected: LOG_VERSION });
    }
    let header: SessionHeader = serde_json::from_value(hv).map_err(|e| corrupt(n, e))?;

    let mut frames: Vec<FrameRecord> = Vec::new();
    let mut events = Vec::new();
    for (n, text) in lines {
        let (ty, v) = parse_line(n, text)?;
        match ty.as_str() {
            "frame" => {
                let f: FrameRecord = serde_json::from_value(v).map_err(|e| corrupt(n, e))?;
                if let Some(prev) = frames.last() {
                    if f.t_ms <= prev.t_ms {
                        return Err(corrupt(n, format!("t_ms {} does not follow {}", f.t_ms, prev.t_ms)));
                    }
                }
                if !f.is_finite() {
                    return Err(corrupt(n, "non-finite frame"));
                }
                frames.push(f);
            }
            "event" => events.push(serde_json::from_value(v).map_err(|e| corrupt(n, e))?),
            "header" => return Err(corrupt(n, "second header")),
            other => return Err(corrupt(n, format!("unknown record type '{other}'"))),
        }
    }
    Ok(SessionLog { header, frames, events })
}
