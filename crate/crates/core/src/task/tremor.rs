//! Peripheral shaving: a target sphere advances along a fixed path while the
//! vitrector tip stays in contact with it.

use serde::{Deserialize, Serialize};

use crate::geom::{sphere_contact, Point3};

use super::{ShavingPath, TaskEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TremorState {
    pub path: ShavingPath,
    pub path_length: f64,
    pub path_speed_mm_s: f64,
    pub target_radius: f64,
    /// Accumulated time with contact held across consecutive frames.
    pub contact_ms: u64,
    pub s_mm: f64,
    pub in_contact: bool,
    pub started: bool,
    pub contact_episodes: u32,
    pub exits: u32,
    pub deviation: DeviationStats,
}

/// Tip-to-path deviation since first contact: time-weighted mean and maximum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub weighted_sum: f64,
    pub weight_ms: u64,
    pub max_mm: f64,
    pub samples: u64,
}

impl DeviationStats {
    pub fn record(&mut self, dev: f64, dt_ms: u64) {
        self.weighted_sum += dev * dt_ms as f64;
        self.weight_ms += dt_ms;
        self.samples += 1;
        if dev > self.max_mm {
            self.max_mm = dev;
        }
    }

    pub fn mean_mm(&self) -> f64 {
        if self.weight_ms == 0 {
            0.0
        } else {
            self.weighted_sum / self.weight_ms as f64
        }
    }
}

impl TremorState {
    pub fn new(path: ShavingPath, path_speed_mm_s: f64, target_radius: f64) -> Self {
        let path_length = path.length();
        Self {
            path,
            path_length,
            path_speed_mm_s,
            target_radius,
            contact_ms: 0,
            s_mm: 0.0,
            in_contact: false,
            started: false,
            contact_episodes: 0,
            exits: 0,
            deviation: DeviationStats::default(),
        }
    }

    pub fn target_center(&self) -> Point3 {
        self.path.point_at(self.s_mm)
    }

    pub fn is_complete(&self) -> bool {
        self.s_mm >= self.path_length
    }

    /// Applies one frame of `dt_ms`. The sphere advances only over intervals
    /// where contact held at both ends; deviation is sampled from the first
    /// contact onward, each sample weighted by the interval it closes.
    pub fn step(&mut self, tip: Option<Point3>, dt_ms: u64, t_ms: u64, events: &mut Vec<TaskEvent>) -> bool {
        let Some(tip) = tip else {
            if self.in_contact {
                self.in_contact = false;
                self.exits += 1;
                events.push(TaskEvent::SphereExited { t_ms, sphere: 0 });
            }
            return self.is_complete();
        };

        if self.started {
            self.deviation.record(self.path.distance_to(tip), dt_ms);
        }

        let contact = sphere_contact(tip, self.target_center(), self.target_radius);
        if contact {
            if self.in_contact {
                self.contact_ms += dt_ms;
                let s = self.path_speed_mm_s * self.contact_ms as f64 / 1000.0;
                self.s_mm = s.min(self.path_length);
            } else {
                self.in_contact = true;
                self.contact_episodes += 1;
                if !self.started {
                    self.started = true;
                    self.deviation.record(self.path.distance_to(tip), 0);
                }
            }
        } else if self.in_contact {
            self.in_contact = false;
            self.exits += 1;
            events.push(TaskEvent::SphereExited { t_ms, sphere: 0 });
        }
        self.is_complete()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_60mm() -> TremorState {
        TremorState::new(
            ShavingPath::Polyline { points: vec![Point3::ZERO, Point3::new(60.0, 0.0, 0.0)] },
            10.0,
            1.2,
        )
    }

    #[test]
    fn perfect_tracking_completes_at_path_length_over_speed() {
        let mut st = straight_60mm();
        let mut ev = Vec::new();
        let mut t = 0;
        let mut done_at = None;
        let mut first = true;
        while done_at.is_none() && t < 20_000 {
            let tip = st.target_center();
            let dt = if first { 0 } else { 10 };
            first = false;
            if st.step(Some(tip), dt, t, &mut ev) {
                done_at = Some(t);
            }
            t += 10;
        }
        assert_eq!(done_at, Some(6000));
        assert_eq!(st.exits, 0);
        assert!(ev.is_empty());
    }

    #[test]
    fn untouched_sphere_never_moves() {
        let mut st = straight_60mm();
        let mut ev = Vec::new();
        for i in 0..1000 {
            assert!(!st.step(Some(Point3::new(0.0, 5.0, 0.0)), 10, i * 10, &mut ev));
        }
        assert_eq!(st.s_mm, 0.0);
        assert_eq!(st.exits, 0);
        assert_eq!(st.deviation.samples, 0);
    }

    #[test]
    fn deviation_matches_time_weighted_oracle() {
        let mut st = straight_60mm();
        let mut ev = Vec::new();
        // Known offsets perpendicular to the path (y axis), variable frame spacing.
        let offsets = [0.0, 0.3, -0.5, 0.8, 0.1, -0.9, 0.4, 0.0, 0.7, -0.2];
        let dts = [0u64, 11, 9, 13, 10, 12, 8, 11, 10, 14];
        let mut t = 0;
        let mut series = Vec::new();
        for (&off, &dt) in offsets.iter().zip(&dts) {
            t += dt;
            let c = st.target_center();
            st.step(Some(Point3::new(c.x, off, 0.0)), dt, t, &mut ev);
            series.push((off.abs(), dt));
        }
        // Oracle: first sample opens the record with zero weight.
        let num: f64 = series[1..].iter().map(|&(d, dt)| d * dt as f64).sum();
        let den: f64 = series[1..].iter().map(|&(_, dt)| dt as f64).sum();
        let max = series.iter().map(|&(d, _)| d).fold(0.0, f64::max);
        assert!((st.deviation.mean_mm() - num / den).abs() < 1e-9);
        assert!((st.deviation.max_mm - max).abs() < 1e-9);
        assert!(st.deviation.mean_mm() <= st.deviation.max_mm);
    }

    #[test]
    fn losing_contact_halts_and_counts_an_exit() {
        let mut st = straight_60mm();
        let mut ev = Vec::new();
        st.step(Some(Point3::ZERO), 0, 0, &mut ev);
        st.step(Some(st.target_center()), 100, 100, &mut ev);
        let s = st.s_mm;
        assert!((s - 1.0).abs() < 1e-12);
        st.step(Some(Point3::new(0.0, 3.0, 0.0)), 100, 200, &mut ev);
        assert_eq!(st.exits, 1);
        assert_eq!(st.s_mm, s);
        assert_eq!(ev, vec![TaskEvent::SphereExited { t_ms: 200, sphere: 0 }]);
    }
}
