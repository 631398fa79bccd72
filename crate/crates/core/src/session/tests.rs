use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geom::{CalibrationOffset, Point3, Pose, UnitQuat};
use crate::task::{TaskConfig, TickInput};

fn header(kind: TaskKind, seed: u64, pid: &str, run: u32) -> SessionHeader {
    let meta = ParticipantMeta { participant_id: pid.into(), run_index: run, ..Default::default() };
    SessionHeader::new(kind, TaskConfig::default(), seed, CalibrationOffset::default(), meta).unwrap()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let q = UnitQuat::new(rng.random(), rng.random(), rng.random(), rng.random::<f64>() + 0.1).unwrap();
    Pose::new(Point3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)), q)
}

fn random_frames(n: usize, seed: u64) -> Vec<FrameRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = rng.random_range(0..1000u64);
    (0..n)
        .map(|_| {
            t += rng.random_range(1..25u64);
            TickInput {
                t_ms: t,
                left_pose: random_pose(&mut rng),
                right_pose: random_pose(&mut rng),
                grip_right: rng.random(),
                button_x_left: rng.random(),
                joystick_right: (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            }
        })
        .collect()
}

#[test]
fn empty_log_round_trips_and_replays_incomplete() {
    let log = SessionLog { header: header(TaskKind::Navigation, 42, "p1", 1), frames: vec![], events: vec![] };
    let text = write_log_string(&log);
    assert_eq!(read_log_str(&text).unwrap(), log);
    let r = replay(&log).unwrap();
    assert!(!r.completed);
    assert_eq!(r.completion_time_s, 0.0);
}

#[test]
fn large_random_log_is_byte_identical_after_round_trip() {
    let log = SessionLog { header: header(TaskKind::Laser, 9, "p2", 2), frames: random_frames(100_000, 5), events: vec![] };
    let a = write_log_string(&log);
    let back = read_log_str(&a).unwrap();
    for (x, y) in back.frames.iter().zip(&log.frames) {
        assert_eq!(x.right_pose.position.x.to_bits(), y.right_pose.position.x.to_bits());
        assert_eq!(x.joystick_right.1.to_bits(), y.joystick_right.1.to_bits());
    }
    assert_eq!(back, log);
    assert_eq!(write_log_string(&back), a);
}

#[test]
fn file_round_trip_with_events() {
    let frames = random_frames(300, 11);
    let mut log = SessionLog { header: header(TaskKind::Peeling, 0, "p3", 1), frames, events: vec![] };
    let (_, events) = replay_with_events(&log).unwrap();
    log.events = events;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.session.jsonl");
    write_log(&path, &log).unwrap();
    assert_eq!(read_log(&path).unwrap(), log);
}

#[test]
fn decreasing_timestamp_is_reported_at_its_line() {
    let frames = random_frames(5, 1);
    let log = SessionLog { header: header(TaskKind::Tremor, 0, "p", 1), frames, events: vec![] };
    let text = write_log_string(&log);
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines.swap(2, 3);
    match read_log_str(&lines.join("\n")) {
        Err(SessionError::CorruptLog { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn garbage_and_versions_are_rejected() {
    assert!(matches!(read_log_str("not json"), Err(SessionError::CorruptLog { line: 1, .. })));
    let log = SessionLog { header: header(TaskKind::Tremor, 0, "p", 1), frames: vec![], events: vec![] };
    let text = write_log_string(&log).replace("\"v\":1", "\"v\":2");
    assert!(matches!(read_log_str(&text), Err(SessionError::VersionMismatch { found: 2, expected: 1 })));
    let text = format!("{}{{\"type\":\"frame\",\"t\":1}}\n", write_log_string(&log));
    assert!(matches!(read_log_str(&text), Err(SessionError::CorruptLog { line: 2, .. })));
}

#[test]
fn replay_is_deterministic() {
    let log = SessionLog { header: header(TaskKind::Laser, 3, "p", 1), frames: random_frames(2000, 3), events: vec![] };
    let a = replay_with_events(&log).unwrap();
    let b = replay_with_events(&log).unwrap();
    assert_eq!(serde_json::to_string(&a.0).unwrap(), serde_json::to_string(&b.0).unwrap());
    assert_eq!(a.1, b.1);
}

#[test]
fn altered_seed_is_detected() {
    let mut log = SessionLog { header: header(TaskKind::Navigation, 42, "p", 1), frames: vec![], events: vec![] };
    log.header.seed = 43;
    assert!(matches!(replay(&log), Err(SessionError::SeedMismatch { .. })));
}

fn completed_record(pid: &str, run: u32, module: TaskKind) -> MetricsRecord {
    let task = crate::task::init_task(module, &TaskConfig::default(), 1).unwrap();
    let mut report = task.finalize(true).unwrap();
    report.completed = true;
    report.completion_time_s = 10.0 + run as f64;
    MetricsRecord {
        participant: ParticipantMeta { participant_id: pid.into(), run_index: run, ..Default::default() },
        seed: 1,
        report,
    }
}

#[test]
fn table_schema_counts() {
    let one = MetricsTable::from_records(&[completed_record("a", 1, TaskKind::Navigation)]).unwrap();
    let names: Vec<_> = one.rows.iter().map(|r| r.metric.as_str()).collect();
    assert_eq!(names, ["efficiency", "safety", "sphere_exits"]);

    let mut recs = Vec::new();
    for p in 0..20 {
        for run in 1..=3 {
            for m in TaskKind::ALL {
                recs.push(completed_record(&format!("p{p:02}"), run, m));
            }
        }
    }
    recs.reverse();
    let table = MetricsTable::from_records(&recs).unwrap();
    assert_eq!(table.len(), 20 * 3 * (3 + 5 + 3 + 3));
    let keys: Vec<_> = table.rows.iter().map(|r| (r.participant_id.clone(), r.run_index, r.module)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);

    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert_eq!(MetricsTable::read_csv(buf.as_slice()).unwrap(), table);
}

#[test]
fn duplicates_and_incomplete_sessions_are_rejected() {
    let recs = [completed_record("a", 1, TaskKind::Laser), completed_record("a", 1, TaskKind::Laser)];
    assert!(matches!(MetricsTable::from_records(&recs), Err(SessionError::DuplicateSession { .. })));
    let mut r = completed_record("b", 2, TaskKind::Tremor);
    r.report.completed = false;
    match MetricsTable::from_records(&[r]) {
        Err(SessionError::IncompleteSession(ids)) => assert_eq!(ids, vec!["b/run2/tremor".to_string()]),
        other => panic!("{other:?}"),
    }
}
