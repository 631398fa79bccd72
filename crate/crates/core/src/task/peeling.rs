//! Cutter-based membrane peeling over a ring × sector patch grid centered on
//! the posterior pole.
//!
//! A patch may detach only if it lies on the outer ring or already has a
//! detached 4-neighbor (ring ± 1, sector ± 1 with wrap-around). A grasp
//! engages the nearest attached patch; every `pull_threshold` of tip travel
//! from the grasp anchor peels one more patch, first the grasped one and then
//! the eligible attached patch nearest the tip.

use serde::{Deserialize, Serialize};

use crate::geom::{EyeModel, Point3};

use super::{PeelingConfig, TaskEvent};

/// Pull lengths are compared with this slack so a threshold-length pull counts.
const PULL_EPS_MM: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembranePatch {
    pub ring: usize,
    pub sector: usize,
    pub center: Point3,
    pub attached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembraneMesh {
    pub rings: usize,
    pub sectors: usize,
    pub patches: Vec<MembranePatch>,
    pub grab_radius: f64,
    pub pull_threshold: f64,
    pub grasped_patch: Option<usize>,
    pub grasp_anchor: Point3,
    /// Pull steps already taken in the current grasp.
    pub pull_steps: u32,
    pub grasps: u32,
}

impl MembraneMesh {
    pub fn layout(cfg: &PeelingConfig, eye: &EyeModel) -> Self {
        let frame = eye.tangent_frame(eye.posterior_pole());
        let ring_width = cfg.disc_radius_mm / cfg.rings as f64;
        let mut patches = Vec::with_capacity(cfg.rings * cfg.sectors);
        for ring in 0..cfg.rings {
            for sector in 0..cfg.sectors {
                let rho = (ring as f64 + 0.5) * ring_width;
                let ang = (sector as f64 + 0.5) * std::f64::consts::TAU / cfg.sectors as f64;
                patches.push(MembranePatch { ring, sector, center: eye.geodesic_offset(&frame, ang, rho), attached: true });
            }
        }
        Self {
            rings: cfg.rings,
            sectors: cfg.sectors,
            patches,
            grab_radius: cfg.grab_radius_mm,
            pull_threshold: cfg.pull_threshold_mm,
            grasped_patch: None,
            grasp_anchor: Point3::ZERO,
            pull_steps: 0,
            grasps: 0,
        }
    }

    pub fn index(&self, ring: usize, sector: usize) -> usize {
        ring * self.sectors + sector
    }

    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ring, sector) = (idx / self.sectors, idx % self.sectors);
        let s = self.sectors;
        let ring_nb = [ring.checked_sub(1), (ring + 1 < self.rings).then_some(ring + 1)];
        let sector_nb = [(sector + s - 1) % s, (sector + 1) % s];
        ring_nb
            .into_iter()
            .flatten()
            .map(move |r| self.index(r, sector))
            .chain(sector_nb.into_iter().map(move |q| self.index(ring, q)))
    }

    pub fn is_eligible(&self, idx: usize) -> bool {
        idx / self.sectors == self.rings - 1 || self.neighbors(idx).any(|n| !self.patches[n].attached)
    }

    pub fn detached_count(&self) -> usize {
        self.patches.iter().filter(|p| !p.attached).count()
    }

    pub fn is_complete(&self) -> bool {
        self.patches.iter().all(|p| !p.attached)
    }

    fn nearest_attached_within(&self, tip: Point3, radius: f64) -> Option<usize> {
        self.patches
            .iter()
            .enumerate()
            .filter(|(_, p)| p.attached)
            .map(|(i, p)| (i, p.center.distance(tip)))
            .filter(|&(_, d)| d <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn nearest_eligible(&self, tip: Point3) -> Option<usize> {
        (0..self.patches.len())
            .filter(|&i| self.patches[i].attached && self.is_eligible(i))
            .map(|i| (i, self.patches[i].center.distance(tip)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn detach(&mut self, idx: usize, t_ms: u64, events: &mut Vec<TaskEvent>) {
        self.patches[idx].attached = false;
        events.push(TaskEvent::PatchDetached { t_ms, patch: idx });
    }

    /// Applies one frame. `grip_pressed` is the rising edge, `grip_held` the
    /// current button level.
    pub fn step(&mut self, tip: Option<Point3>, grip_pressed: bool, grip_held: bool, t_ms: u64, events: &mut Vec<TaskEvent>) -> bool {
        if !grip_held {
            self.grasped_patch = None;
            return self.is_complete();
        }
        let Some(tip) = tip else {
            self.grasped_patch = None;
            return self.is_complete();
        };

        if grip_pressed {
            if let Some(idx) = self.nearest_attached_within(tip, self.grab_radius) {
                self.grasps += 1;
                self.grasped_patch = Some(idx);
                self.grasp_anchor = tip;
                self.pull_steps = 0;
                events.push(TaskEvent::Grasped { t_ms, patch: idx });
            }
        }

        if let Some(grasped) = self.grasped_patch {
            let travel = tip.distance(self.grasp_anchor);
            while travel + PULL_EPS_MM >= self.pull_threshold * f64::from(self.pull_steps + 1) {
                self.pull_steps += 1;
                if self.pull_steps == 1 {
                    if self.patches[grasped].attached && self.is_eligible(grasped) {
                        self.detach(grasped, t_ms, events);
                    } else {
                        // Nothing peels from an anchored patch.
                        self.grasped_patch = None;
                        break;
                    }
                } else if let Some(next) = self.nearest_eligible(tip) {
                    self.detach(next, t_ms, events);
                } else {
                    break;
                }
            }
        }
        self.is_complete()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> (MembraneMesh, EyeModel) {
        let eye = EyeModel::default();
        (MembraneMesh::layout(&PeelingConfig::default(), &eye), eye)
    }

    fn hover(eye: &EyeModel, p: Point3, h: f64) -> Point3 {
        eye.center + (p - eye.center) * ((eye.retina_radius - h) / eye.retina_radius)
    }

    #[test]
    fn layout_is_a_four_by_twelve_disc_on_the_retina() {
        let (m, eye) = mesh();
        assert_eq!(m.patches.len(), 48);
        for p in &m.patches {
            assert!((p.center.distance(eye.center) - 12.0).abs() < 1e-9);
            assert!(p.center.distance(eye.posterior_pole()) < 3.0);
        }
        assert_eq!(m.neighbors(m.index(0, 0)).count(), 3);
        assert_eq!(m.neighbors(m.index(1, 0)).count(), 4);
        assert!(m.neighbors(m.index(2, 0)).any(|n| n == m.index(2, 11)));
    }

    #[test]
    fn interior_first_grasp_does_not_peel() {
        let (mut m, eye) = mesh();
        let idx = m.index(1, 3);
        let grab = hover(&eye, m.patches[idx].center, 0.4);
        let mut ev = Vec::new();
        m.step(Some(grab), true, true, 0, &mut ev);
        assert_eq!(m.grasps, 1);
        m.step(Some(grab + Point3::X * 1.0), false, true, 10, &mut ev);
        assert_eq!(m.detached_count(), 0);
        assert_eq!(m.grasped_patch, None);
    }

    #[test]
    fn outer_ring_pull_detaches_one_patch() {
        let (mut m, eye) = mesh();
        let idx = m.index(3, 5);
        let grab = hover(&eye, m.patches[idx].center, 0.4);
        let mut ev = Vec::new();
        m.step(Some(grab), true, true, 0, &mut ev);
        m.step(Some(grab + Point3::Y * 0.8), false, true, 10, &mut ev);
        assert_eq!(m.detached_count(), 1);
        assert!(!m.patches[idx].attached);
        assert_eq!(m.grasps, 1);
        m.step(Some(grab + Point3::Y * 0.8), false, false, 20, &mut ev);
        assert_eq!(m.grasped_patch, None);
    }

    #[test]
    fn far_grasp_is_not_counted() {
        let (mut m, eye) = mesh();
        let mut ev = Vec::new();
        m.step(Some(eye.center), true, true, 0, &mut ev);
        assert_eq!(m.grasps, 0);
        assert!(ev.is_empty());
    }
}
