//! Core vitrectomy: collect ten targets by holding the vitrector tip inside
//! each one for an uninterrupted dwell.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{sphere_contact, EyeModel, Point3};

use super::{NavigationConfig, TaskError, TaskEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSphere {
    pub center: Point3,
    pub radius: f64,
    pub collected: bool,
    /// Contact episodes on this sphere that ended before collection.
    pub exits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigationState {
    pub spheres: Vec<TargetSphere>,
    pub active_contact: Option<usize>,
    pub contact_since_ms: u64,
    pub dwell_ms: u64,
    pub exits: u32,
    pub dwell_required_ms: u64,
}

impl NavigationState {
    /// Rejection-samples sphere centers: depth (distance from the eye center)
    /// uniform in `[depth_min, depth_max]`, direction uniform outside the
    /// anterior cap, all pairs at least `min_separation` apart.
    pub fn layout(cfg: &NavigationConfig, eye: &EyeModel, rng: &mut ChaCha8Rng) -> Result<Self, TaskError> {
        let anterior = -eye.posterior_pole_dir;
        let mut centers: Vec<Point3> = Vec::with_capacity(cfg.sphere_count);
        let mut attempts = 0usize;
        while centers.len() < cfg.sphere_count {
            attempts += 1;
            if attempts > cfg.max_placement_attempts {
                return Err(TaskError::SeedPlacementFailure { placed: centers.len(), attempts: attempts - 1 });
            }
            let dir = loop {
                let p = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let n = p.norm();
                if n > 1e-3 && n <= 1.0 {
                    break p * (1.0 / n);
                }
            };
            if dir.dot(anterior) > cfg.max_anterior_cos {
                continue;
            }
            let depth = rng.random_range(cfg.depth_min_mm..=cfg.depth_max_mm);
            let c = eye.center + dir * depth;
            if centers.iter().all(|o| o.distance(c) >= cfg.min_separation_mm) {
                centers.push(c);
            }
        }
        Ok(Self {
            spheres: centers
                .into_iter()
                .map(|center| TargetSphere { center, radius: cfg.sphere_radius_mm, collected: false, exits: 0 })
                .collect(),
            active_contact: None,
            contact_since_ms: 0,
            dwell_ms: 0,
            exits: 0,
            dwell_required_ms: cfg.dwell_required_ms,
        })
    }

    pub fn collected_count(&self) -> usize {
        self.spheres.iter().filter(|s| s.collected).count()
    }

    pub fn is_complete(&self) -> bool {
        self.spheres.iter().all(|s| s.collected)
    }

    /// Applies one frame. Dwell is the time since the first frame of the
    /// current uninterrupted contact; any exit resets it.
    pub fn step(&mut self, tip: Option<Point3>, t_ms: u64, events: &mut Vec<TaskEvent>) -> bool {
        let contact = tip.and_then(|tip| {
            self.spheres
                .iter()
                .position(|s| !s.collected && sphere_contact(tip, s.center, s.radius))
        });

        match (self.active_contact, contact) {
            (Some(a), Some(c)) if a == c => {
                self.dwell_ms = t_ms - self.contact_since_ms;
            }
            (Some(a), next) => {
                self.spheres[a].exits += 1;
                self.exits += 1;
                events.push(TaskEvent::SphereExited { t_ms, sphere: a });
                self.active_contact = next;
                self.contact_since_ms = t_ms;
                self.dwell_ms = 0;
            }
            (None, Some(c)) => {
                self.active_contact = Some(c);
                self.contact_since_ms = t_ms;
                self.dwell_ms = 0;
            }
            (None, None) => {}
        }

        if let Some(a) = self.active_contact {
            if self.dwell_ms >= self.dwell_required_ms {
                self.spheres[a].collected = true;
                self.active_contact = None;
                self.dwell_ms = 0;
                events.push(TaskEvent::SphereCollected { t_ms, sphere: a });
            }
        }
        self.is_complete()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn state_with_one_sphere() -> NavigationState {
        NavigationState {
            spheres: vec![
                TargetSphere { center: Point3::ZERO, radius: 1.5, collected: false, exits: 0 },
                TargetSphere { center: Point3::new(6.0, 0.0, 0.0), radius: 1.5, collected: false, exits: 0 },
            ],
            active_contact: None,
            contact_since_ms: 0,
            dwell_ms: 0,
            exits: 0,
            dwell_required_ms: 2000,
        }
    }

    fn drive(st: &mut NavigationState, trace: &[(u64, Option<Point3>)]) -> Vec<TaskEvent> {
        let mut ev = Vec::new();
        for &(t, tip) in trace {
            st.step(tip, t, &mut ev);
        }
        ev
    }

    const INSIDE: Option<Point3> = Some(Point3::ZERO);
    const OUTSIDE: Option<Point3> = Some(Point3::new(0.0, 5.0, 0.0));

    #[test]
    fn full_dwell_collects() {
        let mut st = state_with_one_sphere();
        let trace: Vec<_> = (0..=200).map(|i| (1000 + i * 10, INSIDE)).collect();
        let ev = drive(&mut st, &trace);
        assert_eq!(ev, vec![TaskEvent::SphereCollected { t_ms: 3000, sphere: 0 }]);
        assert_eq!(st.spheres[0].exits, 0);
        assert!(st.spheres[0].collected);
    }

    #[test]
    fn short_dwell_exits_and_resets() {
        let mut st = state_with_one_sphere();
        let mut trace: Vec<_> = (0..=199).map(|i| (1000 + i * 10, INSIDE)).collect();
        trace.push((3000, OUTSIDE));
        let ev = drive(&mut st, &trace);
        assert_eq!(ev, vec![TaskEvent::SphereExited { t_ms: 3000, sphere: 0 }]);
        assert_eq!(st.dwell_ms, 0);
        assert!(!st.spheres[0].collected);
    }

    #[test]
    fn interrupted_dwell_never_collects() {
        let mut st = state_with_one_sphere();
        let mut trace = Vec::new();
        let mut t = 0;
        for _ in 0..4 {
            for _ in 0..=50 {
                trace.push((t, INSIDE));
                t += 10;
            }
            trace.push((t, OUTSIDE));
            t += 10;
        }
        drive(&mut st, &trace);
        assert_eq!(st.exits, 4);
        assert!(!st.spheres[0].collected);
    }

    #[test]
    fn layout_is_seeded_and_separated() {
        let eye = EyeModel::default();
        let cfg = NavigationConfig::default();
        for seed in 0..200 {
            let a = NavigationState::layout(&cfg, &eye, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = NavigationState::layout(&cfg, &eye, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.spheres.len(), 10);
            for (i, s) in a.spheres.iter().enumerate() {
                let depth = s.center.distance(eye.center);
                assert!((2.0..=10.0).contains(&depth));
                for o in &a.spheres[i + 1..] {
                    assert!(s.center.distance(o.center) >= 4.0);
                }
            }
        }
    }

    #[test]
    fn impossible_layout_fails() {
        let eye = EyeModel::default();
        let cfg = NavigationConfig { sphere_count: 500, max_placement_attempts: 2000, ..Default::default() };
        let r = NavigationState::layout(&cfg, &eye, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(TaskError::SeedPlacementFailure { .. })));
    }
}
