//! Endolaser retinopexy around peripheral breaks.
//!
//! Each break carries a coverage grid of `rows × sectors` cells spanning the
//! treatment annulus `[r_in, r_out]` (geodesic). A spot deposits its intensity
//! on every cell whose center lies within the spot radius; a break is treated
//! once every cell reaches the threshold.

use serde::{Deserialize, Serialize};

use crate::geom::{central_angle, retina_raycast, EyeModel, InstrumentState, Point3, TangentFrame};

use super::{LaserConfig, TaskEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub row: usize,
    pub sector: usize,
    pub center: Point3,
    pub accumulated_intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetinalBreak {
    pub center: Point3,
    pub frame: TangentFrame,
    pub r_in: f64,
    pub r_out: f64,
    pub cells: Vec<CoverageCell>,
    pub treated: bool,
}

impl RetinalBreak {
    pub fn new(eye: &EyeModel, center: Point3, cfg: &LaserConfig) -> Self {
        let frame = eye.tangent_frame(center);
        let row_width = (cfg.r_out_mm - cfg.r_in_mm) / cfg.grid_rows as f64;
        let mut cells = Vec::with_capacity(cfg.grid_rows * cfg.grid_sectors);
        for row in 0..cfg.grid_rows {
            let rho = cfg.r_in_mm + (row as f64 + 0.5) * row_width;
            for sector in 0..cfg.grid_sectors {
                let ang = (sector as f64 + 0.5) * std::f64::consts::TAU / cfg.grid_sectors as f64;
                cells.push(CoverageCell { row, sector, center: eye.geodesic_offset(&frame, ang, rho), accumulated_intensity: 0.0 });
            }
        }
        Self { center: frame.origin, frame, r_in: cfg.r_in_mm, r_out: cfg.r_out_mm, cells, treated: false }
    }

    pub fn covered_fraction(&self, threshold: f64) -> f64 {
        let n = self.cells.iter().filter(|c| c.accumulated_intensity >= threshold).count();
        n as f64 / self.cells.len() as f64
    }

    /// Deposits a spot; returns true if this spot completed the treatment.
    pub fn deposit(&mut self, eye: &EyeModel, spot: &LaserSpot, threshold: f64) -> bool {
        let r = eye.retina_radius;
        let from_center = r * central_angle(spot.position - eye.center, self.center - eye.center);
        if from_center > self.r_out + spot.radius + 1e-9 {
            return false;
        }
        for cell in &mut self.cells {
            let d = r * central_angle(spot.position - eye.center, cell.center - eye.center);
            if d <= spot.radius {
                cell.accumulated_intensity += spot.intensity;
            }
        }
        if !self.treated && self.cells.iter().all(|c| c.accumulated_intensity >= threshold) {
            self.treated = true;
            return true;
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserSpot {
    pub position: Point3,
    pub radius: f64,
    pub intensity: f64,
    pub t_ms: u64,
    /// Probe-tip to retina distance along the aiming ray.
    pub distance_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserState {
    pub breaks: Vec<RetinalBreak>,
    pub spots: Vec<LaserSpot>,
    pub shots_missed: u32,
    pub next_fire_ms: Option<u64>,
    pub cfg: LaserConfig,
}

impl LaserState {
    /// Breaks equally spaced in longitude on a circle `break_polar_deg` from
    /// the posterior pole.
    pub fn layout(cfg: &LaserConfig, eye: &EyeModel) -> Self {
        let breaks = (0..cfg.break_count)
            .map(|i| {
                let lon = cfg.first_break_longitude_deg + 360.0 * i as f64 / cfg.break_count as f64;
                RetinalBreak::new(eye, eye.surface_point(cfg.break_polar_deg, lon, 0.0), cfg)
            })
            .collect();
        Self { breaks, spots: Vec::new(), shots_missed: 0, next_fire_ms: None, cfg: cfg.clone() }
    }

    pub fn is_complete(&self) -> bool {
        self.breaks.iter().all(|b| b.treated)
    }

    /// Spot size grows linearly with probe distance; intensity falls with the
    /// square of the size ratio.
    pub fn spot_for_distance(&self, distance_mm: f64) -> (f64, f64) {
        let r0 = self.cfg.spot_radius_min_mm;
        let radius = r0 + self.cfg.spot_growth_per_mm * distance_mm.max(0.0);
        (radius, (r0 / radius) * (r0 / radius))
    }

    fn fire(&mut self, eye: &EyeModel, probe: &InstrumentState, t_ms: u64, events: &mut Vec<TaskEvent>) {
        let hit = if !probe.inside_eye {
            None
        } else if eye.clearance(probe.tip) <= 1e-9 {
            Some((probe.tip, 0.0))
        } else {
            retina_raycast(probe.tip, probe.axis, eye).ok().map(|h| (h.point, h.distance))
        };
        let Some((position, distance)) = hit else {
            self.shots_missed += 1;
            events.push(TaskEvent::ShotMissed { t_ms });
            return;
        };
        let (radius, intensity) = self.spot_for_distance(distance);
        let spot = LaserSpot { position, radius, intensity, t_ms, distance_mm: distance };
        self.spots.push(spot);
        events.push(TaskEvent::SpotFired { t_ms, position, radius_mm: radius, intensity });
        let threshold = self.cfg.treat_threshold;
        for (i, b) in self.breaks.iter_mut().enumerate() {
            if b.deposit(eye, &spot, threshold) {
                events.push(TaskEvent::BreakTreated { t_ms, break_index: i });
            }
        }
    }

    /// Applies one frame. A press fires at once; holding repeats at every
    /// `repeat_interval_ms` boundary after the press.
    pub fn step(
        &mut self,
        eye: &EyeModel,
        probe: &InstrumentState,
        grip_pressed: bool,
        grip_held: bool,
        t_ms: u64,
        events: &mut Vec<TaskEvent>,
    ) -> bool {
        if !grip_held {
            self.next_fire_ms = None;
            return self.is_complete();
        }
        let interval = self.cfg.repeat_interval_ms;
        if grip_pressed || self.next_fire_ms.is_none() {
            self.fire(eye, probe, t_ms, events);
            self.next_fire_ms = Some(t_ms + interval);
        } else if let Some(mut next) = self.next_fire_ms {
            while next <= t_ms && !self.is_complete() {
                self.fire(eye, probe, t_ms, events);
                next += interval;
            }
            self.next_fire_ms = Some(next);
        }
        self.is_complete()
    }

    /// Index of the break nearest to `p` with its geodesic distance.
    pub fn nearest_break(&self, eye: &EyeModel, p: Point3) -> Option<(usize, f64)> {
        self.breaks
            .iter()
            .enumerate()
            .map(|(i, b)| (i, eye.retina_radius * central_angle(p - eye.center, b.center - eye.center)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::InstrumentKind;

    fn touching_probe(eye: &EyeModel, at: Point3) -> InstrumentState {
        InstrumentState {
            kind: InstrumentKind::LaserProbe,
            tip: at,
            axis: (at - eye.center).normalized().unwrap(),
            inside_eye: true,
        }
    }

    #[test]
    fn layout_has_five_untreated_breaks_of_48_cells() {
        let eye = EyeModel::default();
        let st = LaserState::layout(&LaserConfig::default(), &eye);
        assert_eq!(st.breaks.len(), 5);
        for b in &st.breaks {
            assert_eq!(b.cells.len(), 48);
            assert!(!b.treated);
            assert!(b.cells.iter().all(|c| c.accumulated_intensity == 0.0));
        }
    }

    #[test]
    fn contact_spot_has_minimum_radius_and_full_intensity() {
        let eye = EyeModel::default();
        let st = LaserState::layout(&LaserConfig::default(), &eye);
        assert_eq!(st.spot_for_distance(0.0), (0.3, 1.0));
        let (r, i) = st.spot_for_distance(2.0);
        assert!((r - 0.6).abs() < 1e-12 && (i - 0.25).abs() < 1e-12);
    }

    #[test]
    fn spots_on_every_cell_center_treat_the_break() {
        let eye = EyeModel::default();
        let mut st = LaserState::layout(&LaserConfig::default(), &eye);
        let centers: Vec<Point3> = st.breaks[2].cells.iter().map(|c| c.center).collect();
        let mut ev = Vec::new();
        for (k, c) in centers.iter().enumerate() {
            let probe = touching_probe(&eye, *c);
            st.step(&eye, &probe, true, true, k as u64 * 1000, &mut ev);
            st.step(&eye, &probe, false, false, k as u64 * 1000 + 10, &mut ev);
        }
        assert!(st.breaks[2].treated);
        assert_eq!(ev.iter().filter(|e| matches!(e, TaskEvent::BreakTreated { break_index: 2, .. })).count(), 1);
        assert!(!st.breaks[0].treated);
    }

    #[test]
    fn held_trigger_repeats_every_interval() {
        let eye = EyeModel::default();
        let mut st = LaserState::layout(&LaserConfig::default(), &eye);
        let probe = touching_probe(&eye, eye.posterior_pole());
        let mut ev = Vec::new();
        st.step(&eye, &probe, true, true, 5000, &mut ev);
        for t in (5011..=6000).step_by(11) {
            st.step(&eye, &probe, false, true, t, &mut ev);
        }
        st.step(&eye, &probe, false, true, 6000, &mut ev);
        let fired = ev.iter().filter(|e| matches!(e, TaskEvent::SpotFired { .. })).count();
        assert_eq!(fired, 6);
    }

    #[test]
    fn withdrawn_probe_misses() {
        let eye = EyeModel::default();
        let mut st = LaserState::layout(&LaserConfig::default(), &eye);
        let mut probe = touching_probe(&eye, eye.posterior_pole());
        probe.inside_eye = false;
        let mut ev = Vec::new();
        st.step(&eye, &probe, true, true, 0, &mut ev);
        assert_eq!(ev, vec![TaskEvent::ShotMissed { t_ms: 0 }]);
        assert!(st.spots.is_empty());
    }
}
