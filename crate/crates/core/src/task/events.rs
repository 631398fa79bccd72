use serde::{Deserialize, Serialize};

use crate::geom::Point3;

/// Observable outputs of a tick, in emission order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TaskEvent {
    SphereCollected { t_ms: u64, sphere: usize },
    SphereExited { t_ms: u64, sphere: usize },
    Grasped { t_ms: u64, patch: usize },
    PatchDetached { t_ms: u64, patch: usize },
    SpotFired { t_ms: u64, position: Point3, radius_mm: f64, intensity: f64 },
    ShotMissed { t_ms: u64 },
    BreakTreated { t_ms: u64, break_index: usize },
    RetinalTouch { t_ms: u64, count: u32 },
    Magnification { t_ms: u64, enabled: bool },
    TaskCompleted { t_ms: u64, elapsed_ms: u64 },
}

impl TaskEvent {
    pub fn t_ms(&self) -> u64 {
        match *self {
            TaskEvent::SphereCollected { t_ms, .. }
            | TaskEvent::SphereExited { t_ms, .. }
            | TaskEvent::Grasped { t_ms, .. }
            | TaskEvent::PatchDetached { t_ms, .. }
            | TaskEvent::SpotFired { t_ms, .. }
            | TaskEvent::ShotMissed { t_ms }
            | TaskEvent::BreakTreated { t_ms, .. }
            | TaskEvent::RetinalTouch { t_ms, .. }
            | TaskEvent::Magnification { t_ms, .. }
            | TaskEvent::TaskCompleted { t_ms, .. } => t_ms,
        }
    }
}
