use serde::{Deserialize, Serialize};

use super::{EyeModel, GeomError, Point3};

/// Counts retinal-touch episodes with hysteresis: contact engages when the
/// clearance drops to `engage_threshold_mm` and only releases once it climbs
/// back to `release_threshold_mm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TouchEpisodeTracker {
    pub engage_threshold_mm: f64,
    pub release_threshold_mm: f64,
    pub in_contact: bool,
    pub touch_count: u32,
}

impl TouchEpisodeTracker {
    pub fn new(engage_threshold_mm: f64, release_threshold_mm: f64) -> Result<Self, GeomError> {
        if !(engage_threshold_mm.is_finite() && release_threshold_mm.is_finite()) {
            return Err(GeomError::NonFiniteInput);
        }
        if engage_threshold_mm < 0.0 || release_threshold_mm < engage_threshold_mm {
            return Err(GeomError::InvalidTracker);
        }
        Ok(Self { engage_threshold_mm, release_threshold_mm, in_contact: false, touch_count: 0 })
    }

    /// Feeds one clearance sample; returns true when a new episode starts.
    pub fn observe_clearance(&mut self, clearance_mm: f64) -> bool {
        if self.in_contact {
            if clearance_mm >= self.release_threshold_mm && clearance_mm > self.engage_threshold_mm {
                self.in_contact = false;
            }
            false
        } else if clearance_mm <= self.engage_threshold_mm {
            self.in_contact = true;
            self.touch_count += 1;
            true
        } else {
            false
        }
    }

    pub fn update(&mut self, tip: Point3, eye: &EyeModel) -> bool {
        self.observe_clearance(eye.clearance(tip))
    }
}

/// Value-semantic form of [`TouchEpisodeTracker::update`].
pub fn update_touch(mut tracker: TouchEpisodeTracker, tip: Point3, eye: &EyeModel) -> TouchEpisodeTracker {
    tracker.update(tip, eye);
    tracker
}
