use serde::{Deserialize, Serialize};

use crate::session::{FrameRecord, ParticipantMeta};
use crate::task::{MetricsReport, TaskEvent, TaskKind, TaskLayout, TaskSnapshot};

pub const PROTOCOL_VERSION: u64 = 1;

/// Minimum input-clock spacing between two state snapshots (about 30 Hz).
pub const SNAPSHOT_INTERVAL_MS: u64 = 33;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        client_version: String,
    },
    CreateSession {
        module: TaskKind,
        seed: u64,
        #[serde(default)]
        participant_meta: ParticipantMeta,
    },
    InputFrame {
        frame: FrameRecord,
    },
    EndSession,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionCreated {
        session_id: String,
        layout: TaskLayout,
        layout_hash: String,
    },
    StateSnapshot {
        snapshot: TaskSnapshot,
        metrics: MetricsReport,
    },
    Event {
        event: TaskEvent,
    },
    Completed {
        report: MetricsReport,
    },
    Error {
        code: String,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl ToString) -> Self {
        ServerMessage::Error { code: code.to_string(), message: message.to_string() }
    }

    /// True for the two messages that end a session.
    pub fn is_terminal(&self) -> bool {
        matches!(self, ServerMessage::Completed { .. } | ServerMessage::Error { .. })
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u64,
    #[serde(flatten)]
    body: T,
}

/// Wire form: the message object plus `"v": 1`.
pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(&Envelope { v: PROTOCOL_VERSION, body: msg }).expect("protocol message serializes")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u64),
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::Malformed(_) => "BadMessage",
            DecodeError::Version(_) => "VersionMismatch",
        }
    }
}

pub fn decode<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, DecodeError> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| DecodeError::Malformed("expected a JSON object".into()))?;
    let v = obj
        .remove("v")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DecodeError::Malformed("missing protocol version".into()))?;
    if v != PROTOCOL_VERSION {
        return Err(DecodeError::Version(v));
    }
    serde_json::from_value(value).map_err(|e| DecodeError::Malformed(e.to_string()))
}
