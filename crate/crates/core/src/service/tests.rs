use std::sync::Arc;

use super::*;
use crate::session::{read_log, replay, ParticipantMeta, SessionLog};
use crate::task::{init_task, TaskConfig, TaskKind, TickInput};
use crate::trainee::{generate_session, SkillProfile};

fn service(log_dir: Option<std::path::PathBuf>) -> (LiveSession, Arc<SessionRegistry>) {
    let registry = Arc::new(SessionRegistry::new());
    let cfg = Arc::new(ServiceConfig { task: TaskConfig::default(), log_dir });
    (LiveSession::new(cfg, registry.clone()), registry)
}

fn create(module: TaskKind, seed: u64) -> ClientMessage {
    ClientMessage::CreateSession { module, seed, participant_meta: ParticipantMeta::default() }
}

fn stream(live: &mut LiveSession, log: &SessionLog) -> Vec<ServerMessage> {
    let mut out = live.handle(create(log.header.module, log.header.seed));
    for f in &log.frames {
        out.extend(live.handle_text(&encode(&ClientMessage::InputFrame { frame: *f })));
    }
    out
}

#[test]
fn messages_carry_type_and_version() {
    let text = encode(&ClientMessage::EndSession);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["v"], 1);
    assert_eq!(v["type"], "end_session");
    assert_eq!(decode::<ClientMessage>(&text).unwrap(), ClientMessage::EndSession);

    let frame = ClientMessage::InputFrame { frame: TickInput::at_rest(7) };
    assert_eq!(decode::<ClientMessage>(&encode(&frame)).unwrap(), frame);

    assert_eq!(decode::<ClientMessage>(r#"{"v":2,"type":"end_session"}"#).unwrap_err(), DecodeError::Version(2));
    assert_eq!(decode::<ClientMessage>(r#"{"type":"end_session"}"#).unwrap_err().code(), "BadMessage");
    assert_eq!(decode::<ClientMessage>("[1]").unwrap_err().code(), "BadMessage");
}

#[test]
fn created_layout_matches_offline_init() {
    let (mut live, _) = service(None);
    let out = live.handle(create(TaskKind::Navigation, 42));
    let ServerMessage::SessionCreated { layout, layout_hash, .. } = &out[0] else { panic!("{out:?}") };
    let offline = init_task(TaskKind::Navigation, &TaskConfig::default(), 42).unwrap();
    assert_eq!(layout, offline.layout());
    assert_eq!(layout_hash, &offline.layout_hash());
    let crate::task::TaskLayout::Navigation { spheres, .. } = layout else { panic!() };
    assert_eq!(spheres.len(), 10);
}

#[test]
fn live_session_matches_replay_and_its_saved_log() {
    let dir = tempfile::tempdir().unwrap();
    for kind in TaskKind::ALL {
        let log = generate_session(kind, &SkillProfile::NOVICE, 11, 1).unwrap();
        let (mut live, registry) = service(Some(dir.path().to_path_buf()));
        let out = stream(&mut live, &log);
        let ServerMessage::Completed { report } = out.last().unwrap() else { panic!("{:?}", out.last()) };
        assert!(report.completed);
        assert_eq!(report, &replay(&log).unwrap());
        assert_eq!(out.iter().filter(|m| m.is_terminal()).count(), 1);
        assert!(!live.is_active());

        let entry = &registry.entries()[0];
        assert_eq!(entry.status, SessionStatus::Completed);
        let saved = read_log(entry.log_path.as_ref().unwrap()).unwrap();
        assert_eq!(saved.frames, log.frames);
        assert_eq!(saved.events, log.events);
        assert_eq!(&replay(&saved).unwrap(), report);
    }
}

#[test]
fn snapshots_are_throttled_on_the_input_clock() {
    let log = generate_session(TaskKind::Tremor, &SkillProfile::EXPERT, 2, 1).unwrap();
    let (mut live, _) = service(None);
    let out = stream(&mut live, &log);
    let times: Vec<u64> = out
        .iter()
        .filter_map(|m| match m {
            ServerMessage::StateSnapshot { snapshot, .. } => Some(snapshot.t_ms),
            _ => None,
        })
        .collect();
    assert!(times.len() > 10);
    let last = *times.last().unwrap();
    for w in times.windows(2) {
        assert!(w[1] - w[0] >= SNAPSHOT_INTERVAL_MS || w[1] == last, "{w:?}");
    }
    assert_eq!(last, log.frames.last().unwrap().t_ms);
}

#[test]
fn non_monotone_input_aborts_the_session() {
    let (mut live, registry) = service(None);
    live.handle(create(TaskKind::Laser, 1));
    live.handle(ClientMessage::InputFrame { frame: TickInput::at_rest(100) });
    let out = live.handle(ClientMessage::InputFrame { frame: TickInput::at_rest(100) });
    assert!(matches!(&out[..], [ServerMessage::Error { code, .. }] if code == "NonMonotonicTimestamp"));
    assert!(!live.is_active());
    assert_eq!(registry.entries()[0].status, SessionStatus::Aborted);
    let out = live.handle(ClientMessage::InputFrame { frame: TickInput::at_rest(200) });
    assert!(matches!(&out[..], [ServerMessage::Error { code, .. }] if code == "NoActiveSession"));
}

#[test]
fn protocol_violations_are_answered_with_errors() {
    let (mut live, _) = service(None);
    live.handle(create(TaskKind::Peeling, 1));
    let out = live.handle(create(TaskKind::Peeling, 2));
    assert!(matches!(&out[..], [ServerMessage::Error { code, .. }] if code == "SessionAlreadyActive"));
    assert!(!live.is_active());
    live.handle(create(TaskKind::Peeling, 3));
    let out = live.handle_text("{not json");
    assert!(matches!(&out[..], [ServerMessage::Error { code, .. }] if code == "BadMessage"));
    assert!(!live.is_active());
    assert!(live.handle(ClientMessage::Hello { client_version: "t".into() }).is_empty());
}

#[test]
fn ending_early_reports_an_incomplete_session() {
    let (mut live, registry) = service(None);
    live.handle(create(TaskKind::Navigation, 5));
    for t in 0..20 {
        live.handle(ClientMessage::InputFrame { frame: TickInput::at_rest(t * 11) });
    }
    let out = live.handle(ClientMessage::EndSession);
    let [ServerMessage::Completed { report }] = &out[..] else { panic!("{out:?}") };
    assert!(!report.completed);
    assert!((report.completion_time_s - 0.209).abs() < 1e-12);
    assert_eq!(registry.entries()[0].status, SessionStatus::Ended);
}

#[test]
fn parallel_sessions_with_identical_input_agree() {
    let log = generate_session(TaskKind::Peeling, &SkillProfile::EXPERT, 4, 2).unwrap();
    let registry = Arc::new(SessionRegistry::new());
    let cfg = Arc::new(ServiceConfig::default());
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (cfg, registry, log) = (cfg.clone(), registry.clone(), log.clone());
            std::thread::spawn(move || {
                let mut live = LiveSession::new(cfg, registry);
                stream(&mut live, &log)
                    .into_iter()
                    .filter(|m| !matches!(m, ServerMessage::SessionCreated { .. }))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let outs: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
    let ids: std::collections::BTreeSet<_> = registry.entries().into_iter().map(|e| e.session_id).collect();
    assert_eq!(ids.len(), 4);
}
