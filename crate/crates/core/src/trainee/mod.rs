//! Synthetic trainees. A policy plays a task through the same controller
//! interface as a person, with Ornstein–Uhlenbeck hand noise on the right
//! controller, and the frames it produced are returned as a session log.
//!
//! Everything is derived from the participant seed: demographics, a personal
//! pace multiplier, the task layout of each run and the behavior noise.

mod noise;
mod policy;
mod profile;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::CalibrationOffset;
use crate::session::{Group, ParticipantMeta, SessionError, SessionHeader, SessionLog, Sex};
use crate::task::{Task, TaskConfig, TaskError, TaskKind};

pub use noise::OuNoise3;
pub use profile::{GraspStrategy, SkillProfile};

use policy::{Driver, Stop};

/// Frame period of generated sessions (about 90 Hz).
pub const FRAME_MS: u64 = 11;
/// Correlation time of the hand-noise process.
pub const NOISE_TAU_MS: f64 = 150.0;
/// Simulated-time budget for one session.
pub const MAX_SESSION_MS: u64 = 20 * 60 * 1000;
/// Log-scale SD of the per-participant pace multiplier.
pub const PACE_LOG_SD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraineeError {
    #[error("skill profile has out-of-range parameters")]
    InvalidProfile,
    #[error("policy did not complete the task within {limit_ms} ms")]
    GenerationTimeout { limit_ms: u64 },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("session error: {0}")]
    Session(String),
}

impl From<SessionError> for TraineeError {
    fn from(e: SessionError) -> Self {
        TraineeError::Session(e.to_string())
    }
}

impl TraineeError {
    pub fn code(&self) -> &'static str {
        match self {
            TraineeError::InvalidProfile => "InvalidProfile",
            TraineeError::GenerationTimeout { .. } => "GenerationTimeout",
            TraineeError::Task(e) => e.code(),
            TraineeError::Session(_) => "SessionError",
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(salt)))
}

/// Stable per-participant traits.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantTraits {
    pub age: f64,
    pub sex: Sex,
    pub pace: f64,
}

impl ParticipantTraits {
    pub fn from_seed(seed: u64, group: Group) -> Self {
        let mut rng = stream(seed, 0x7472_6169_7473);
        let age = match group {
            Group::Novice => rng.random_range(22.0..32.0_f64),
            Group::Expert => rng.random_range(32.0..62.0_f64),
        };
        let sex = if rng.random::<bool>() { Sex::Male } else { Sex::Female };
        let pace = libm::exp(PACE_LOG_SD * noise::gaussian(&mut rng));
        Self { age: age.round(), sex, pace }
    }
}

/// Participant record for `seed`; the group is the nominal label of the
/// profile (cautious profiles are experts).
pub fn participant_for(seed: u64, profile: &SkillProfile, run_index: u32) -> ParticipantMeta {
    let group = nominal_group(profile);
    let traits = ParticipantTraits::from_seed(seed, group);
    ParticipantMeta {
        participant_id: format!("{}-{seed:04}", group.as_str()),
        group,
        age: traits.age,
        sex: traits.sex,
        run_index,
    }
}

pub fn nominal_group(profile: &SkillProfile) -> Group {
    if profile.caution >= 0.5 {
        Group::Expert
    } else {
        Group::Novice
    }
}

/// Layout seed of one run of one module.
pub fn session_seed(participant_seed: u64, kind: TaskKind, run_index: u32) -> u64 {
    splitmix(participant_seed ^ splitmix(u64::from(run_index) << 8 | kind as u64)) >> 11
}

/// One complete session of `kind` by the participant `seed` on its
/// `run_index`-th run, with the default task configuration.
pub fn generate_session(kind: TaskKind, profile: &SkillProfile, seed: u64, run_index: u32) -> Result<SessionLog, TraineeError> {
    let participant = participant_for(seed, profile, run_index);
    generate_session_with(kind, profile, seed, participant, &TaskConfig::default())
}

/// As [`generate_session`], with explicit participant metadata and config.
pub fn generate_session_with(
    kind: TaskKind,
    profile: &SkillProfile,
    seed: u64,
    participant: ParticipantMeta,
    config: &TaskConfig,
) -> Result<SessionLog, TraineeError> {
    profile.validate()?;
    let run_index = participant.run_index.max(1);
    let traits = ParticipantTraits::from_seed(seed, participant.group);
    let pace = profile.speed_factor * traits.pace * profile.run_pace(run_index);

    let task_seed = session_seed(seed, kind, run_index);
    let calibration = CalibrationOffset::default();
    let header = SessionHeader::new(kind, config.clone(), task_seed, calibration, participant)?;
    let task = Task::new(kind, config.clone(), task_seed, calibration)?;
    let rng = stream(seed, task_seed ^ 0x6265_6861_7669_6f72);

    let mut driver = Driver::new(task, profile, rng, pace, MAX_SESSION_MS);
    match driver.run() {
        Ok(()) | Err(Stop::Complete) => {}
        Err(Stop::Timeout) => return Err(TraineeError::GenerationTimeout { limit_ms: MAX_SESSION_MS }),
        Err(Stop::Engine(e)) => return Err(e.into()),
    }
    if !driver.task.is_complete() {
        return Err(TraineeError::GenerationTimeout { limit_ms: MAX_SESSION_MS });
    }
    Ok(SessionLog { header, frames: driver.frames, events: driver.events })
}

/// Participant seeds of a cohort: novices first, then experts.
pub fn cohort_seeds(base_seed: u64, novices: usize, experts: usize) -> Vec<(u64, Group)> {
    let n = (0..novices).map(|i| (splitmix(base_seed ^ (i as u64 + 1)) % 1_000_000, Group::Novice));
    let e = (0..experts).map(|i| (splitmix(base_seed ^ ((i as u64 + 1) << 32)) % 1_000_000, Group::Expert));
    n.chain(e).collect()
}

#[cfg(test)]
mod tests;
