use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::geom::CalibrationOffset;
use crate::session::{event_line, frame_line, header_line, ParticipantMeta, SessionHeader};
use crate::task::{Task, TaskConfig, TaskEvent, TaskKind};

use super::protocol::{decode, ClientMessage, ServerMessage, SNAPSHOT_INTERVAL_MS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    Completed,
    Ended,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub session_id: String,
    pub module: TaskKind,
    pub seed: u64,
    pub log_path: Option<PathBuf>,
    pub status: SessionStatus,
}

/// Append-only record of every session the service has opened. Entries are
/// never removed; only their status moves forward.
#[derive(Debug, Default)]
pub struct SessionRegistry {
    entries: Mutex<Vec<RegistryEntry>>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn open(&self, module: TaskKind, seed: u64, log_dir: Option<&PathBuf>) -> (usize, String, Option<PathBuf>) {
        let mut entries = self.entries.lock().expect("registry lock");
        let index = entries.len();
        let session_id = format!("s{:06}-{}-{}", index + 1, module.as_str(), seed);
        let log_path = log_dir.map(|d| d.join(format!("{session_id}.session.jsonl")));
        entries.push(RegistryEntry { session_id: session_id.clone(), module, seed, log_path: log_path.clone(), status: SessionStatus::Running });
        (index, session_id, log_path)
    }

    fn close(&self, index: usize, status: SessionStatus) {
        self.entries.lock().expect("registry lock")[index].status = status;
    }

    pub fn entries(&self) -> Vec<RegistryEntry> {
        self.entries.lock().expect("registry lock").clone()
    }
}

/// Immutable settings shared by every connection.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub task: TaskConfig,
    /// Where live sessions are logged; `None` disables logging.
    pub log_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { task: TaskConfig::default(), log_dir: None }
    }
}

struct Running {
    task: Task,
    registry_index: usize,
    log: Option<BufWriter<File>>,
    last_snapshot_ms: Option<u64>,
}

/// Protocol state machine for one connection. At most one task session is
/// open at a time; every opened session ends with `Completed` or `Error`.
pub struct LiveSession {
    config: Arc<ServiceConfig>,
    registry: Arc<SessionRegistry>,
    running: Option<Running>,
}

impl LiveSession {
    pub fn new(config: Arc<ServiceConfig>, registry: Arc<SessionRegistry>) -> Self {
        Self { config, registry, running: None }
    }

    pub fn is_active(&self) -> bool {
        self.running.is_some()
    }

    /// Decodes one text frame and handles it; undecodable input aborts the
    /// open session.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match decode::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => self.abort(e.code(), e),
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Hello { .. } => Vec::new(),
            ClientMessage::CreateSession { module, seed, participant_meta } => {
                if self.running.is_some() {
                    return self.abort("SessionAlreadyActive", "a session is already running on this connection");
                }
                self.create(module, seed, participant_meta)
            }
            ClientMessage::InputFrame { frame } => self.input(frame),
            ClientMessage::EndSession => match self.running.take() {
                None => vec![ServerMessage::error("NoActiveSession", "no session to end")],
                Some(run) => match run.task.finalize(true) {
                    Ok(report) => {
                        self.finish(run, SessionStatus::Ended);
                        vec![ServerMessage::Completed { report }]
                    }
                    Err(e) => {
                        self.finish(run, SessionStatus::Aborted);
                        vec![ServerMessage::error(e.code(), e)]
                    }
                },
            },
        }
    }

    /// Closes an open session as aborted, e.g. when the connection drops.
    pub fn disconnect(&mut self) {
        if let Some(run) = self.running.take() {
            self.finish(run, SessionStatus::Aborted);
        }
    }

    fn create(&mut self, module: TaskKind, seed: u64, participant: ParticipantMeta) -> Vec<ServerMessage> {
        let calibration = CalibrationOffset::default();
        let header = match SessionHeader::new(module, self.config.task.clone(), seed, calibration, participant) {
            Ok(h) => h,
            Err(e) => return vec![ServerMessage::error(e.code(), e)],
        };
        let task = match Task::new(module, self.config.task.clone(), seed, calibration) {
            Ok(t) => t,
            Err(e) => return vec![ServerMessage::error(e.code(), e)],
        };
        let (registry_index, session_id, log_path) = self.registry.open(module, seed, self.config.log_dir.as_ref());
        let log = match log_path.map(|p| File::create(&p).map(BufWriter::new)).transpose() {
            Ok(l) => l,
            Err(e) => {
                self.registry.close(registry_index, SessionStatus::Aborted);
                return vec![ServerMessage::error("Io", e)];
            }
        };
        let mut run = Running { task, registry_index, log, last_snapshot_ms: None };
        if let Err(e) = write_line(&mut run.log, &header_line(&header)) {
            self.finish(run, SessionStatus::Aborted);
            return vec![ServerMessage::error("Io", e)];
        }
        let msg = ServerMessage::SessionCreated {
            session_id,
            layout: run.task.layout().clone(),
            layout_hash: run.task.layout_hash(),
        };
        self.running = Some(run);
        vec![msg]
    }

    fn input(&mut self, frame: crate::session::FrameRecord) -> Vec<ServerMessage> {
        let Some(run) = self.running.as_mut() else {
            return vec![ServerMessage::error("NoActiveSession", "input frame without a session")];
        };
        let events = match run.task.tick(&frame) {
            Ok(ev) => ev,
            Err(e) => return self.abort(e.code(), e),
        };
        if let Err(e) = log_frame(&mut run.log, &frame, &events) {
            return self.abort("Io", e);
        }

        let mut out: Vec<ServerMessage> = events.into_iter().map(|event| ServerMessage::Event { event }).collect();
        let done = run.task.is_complete();
        let due = run.last_snapshot_ms.is_none_or(|t| frame.t_ms >= t + SNAPSHOT_INTERVAL_MS);
        if due || done {
            run.last_snapshot_ms = Some(frame.t_ms);
            if let Ok(metrics) = run.task.finalize(true) {
                out.push(ServerMessage::StateSnapshot { snapshot: run.task.snapshot(), metrics });
            }
        }
        if done {
            let run = self.running.take().expect("session is open");
            match run.task.finalize(false) {
                Ok(report) => out.push(ServerMessage::Completed { report }),
                Err(e) => out.push(ServerMessage::error(e.code(), e)),
            }
            self.finish(run, SessionStatus::Completed);
        }
        out
    }

    fn abort(&mut self, code: &str, message: impl ToString) -> Vec<ServerMessage> {
        if let Some(run) = self.running.take() {
            self.finish(run, SessionStatus::Aborted);
        }
        vec![ServerMessage::error(code, message)]
    }

    fn finish(&self, mut run: Running, status: SessionStatus) {
        if let Some(w) = run.log.as_mut() {
            let _ = w.flush();
        }
        self.registry.close(run.registry_index, status);
    }
}

impl Drop for LiveSession {
    fn drop(&mut self) {
        self.disconnect();
    }
}

fn write_line(log: &mut Option<BufWriter<File>>, line: &str) -> std::io::Result<()> {
    if let Some(w) = log.as_mut() {
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn log_frame(log: &mut Option<BufWriter<File>>, frame: &crate::session::FrameRecord, events: &[TaskEvent]) -> std::io::Result<()> {
    write_line(log, &frame_line(frame))?;
    for e in events {
        write_line(log, &event_line(e))?;
    }
    if let Some(w) = log.as_mut() {
        w.flush()?;
    }
    Ok(())
}
