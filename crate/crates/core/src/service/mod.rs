//! Transport-independent live-session service: the versioned JSON message
//! protocol and the per-connection state machine that drives a task from
//! client frames while logging them for replay.

mod live;
mod protocol;

pub use live::{LiveSession, RegistryEntry, ServiceConfig, SessionRegistry, SessionStatus};
pub use protocol::{decode, encode, ClientMessage, DecodeError, ServerMessage, PROTOCOL_VERSION, SNAPSHOT_INTERVAL_MS};

#[cfg(test)]
mod tests;
