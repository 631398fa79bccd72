//! Closed-loop behavior. Policies read the task state the way a person reads
//! the scene and steer an intended tip position; the driver turns that into
//! controller frames with hand noise added.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{controller_pose_for_tip, Hand, Point3, Pose, UnitQuat};
use crate::task::{Task, TaskError, TaskEvent, TaskState, TickInput};

use super::noise::{gaussian, gaussian3, OuNoise3};
use super::{GraspStrategy, SkillProfile, FRAME_MS, NOISE_TAU_MS};

/// Travel speed of an unhurried reach at pace 1.
const REACH_SPEED_MM_S: f64 = 9.0;
/// Time constant of the final approach to a target.
const SETTLE_TAU_S: f64 = 0.12;
const ARRIVE_TOL_MM: f64 = 0.05;
/// Over-travel episodes per second at recklessness 1.
const PLUNGE_RATE_HZ: f64 = 0.25;
const PLUNGE_MS: f64 = 450.0;
const PLUNGE_OVERSHOOT_MM: f64 = 0.3;

pub(crate) enum Stop {
    Complete,
    Timeout,
    Engine(TaskError),
}

type Flow = Result<(), Stop>;

pub(crate) struct Driver<'p> {
    pub task: Task,
    profile: &'p SkillProfile,
    rng: ChaCha8Rng,
    right_noise: OuNoise3,
    left_noise: OuNoise3,
    /// Movement speed multiplier; pauses scale by its inverse.
    pace: f64,
    t_ms: u64,
    limit_ms: u64,
    tip: Point3,
    grip: bool,
    plunge_start: Option<u64>,
    pub frames: Vec<TickInput>,
    pub events: Vec<TaskEvent>,
}

impl<'p> Driver<'p> {
    pub fn new(task: Task, profile: &'p SkillProfile, mut rng: ChaCha8Rng, pace: f64, limit_ms: u64) -> Self {
        let step = FRAME_MS as f64;
        let right_noise = OuNoise3::new(profile.tremor_sd_mm, NOISE_TAU_MS, step, &mut rng);
        let left_noise = OuNoise3::new(profile.tremor_sd_mm, NOISE_TAU_MS, step, &mut rng);
        let tip = task.rig().rest_tip(Hand::Right, task.eye());
        Self {
            task,
            profile,
            rng,
            right_noise,
            left_noise,
            pace,
            t_ms: 0,
            limit_ms,
            tip,
            grip: false,
            plunge_start: None,
            frames: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn run(&mut self) -> Flow {
        match self.task.state() {
            TaskState::Navigation(_) => self.navigation(),
            TaskState::Tremor(_) => self.tremor(),
            TaskState::Peeling(_) => self.peeling(),
            TaskState::Laser(_) => self.laser(),
        }
    }

    fn frame(&mut self) -> Flow {
        if self.task.is_complete() {
            return Err(Stop::Complete);
        }
        if self.t_ms > self.limit_ms {
            return Err(Stop::Timeout);
        }
        let tip = self.plunged_tip();
        let task = &self.task;
        let mut right =
            controller_pose_for_tip(tip, UnitQuat::IDENTITY, task.rig(), task.calibration(), task.right_kind(), task.eye());
        right.position += self.right_noise.sample(&mut self.rng);
        let left = Pose::new(self.left_noise.sample(&mut self.rng), UnitQuat::IDENTITY);
        let input = TickInput {
            t_ms: self.t_ms,
            left_pose: left,
            right_pose: right,
            grip_right: self.grip,
            button_x_left: false,
            joystick_right: (0.0, 0.0),
        };
        let events = self.task.tick(&input).map_err(Stop::Engine)?;
        self.frames.push(input);
        self.events.extend(events);
        self.t_ms += FRAME_MS;
        if self.task.is_complete() {
            Err(Stop::Complete)
        } else {
            Ok(())
        }
    }

    /// Occasional over-travel: the tip is carried along the outward normal
    /// to the retina and back on a half-sine profile.
    fn plunged_tip(&mut self) -> Point3 {
        let dt = FRAME_MS as f64 / 1000.0;
        if self.plunge_start.is_none() && self.rng.random::<f64>() < self.profile.recklessness * PLUNGE_RATE_HZ * dt {
            self.plunge_start = Some(self.t_ms);
        }
        let Some(start) = self.plunge_start else {
            return self.tip;
        };
        let phase = (self.t_ms - start) as f64 / PLUNGE_MS;
        if phase >= 1.0 {
            self.plunge_start = None;
            return self.tip;
        }
        let eye = self.task.eye();
        let Some(normal) = (self.tip - eye.center).normalized() else {
            return self.tip;
        };
        let reach = eye.clearance(self.tip) + PLUNGE_OVERSHOOT_MM;
        self.tip + normal * (reach * libm::sin(std::f64::consts::PI * phase))
    }

    fn pause(&mut self, ms: f64) -> Flow {
        let frames = (ms / self.pace / FRAME_MS as f64).round().max(1.0) as usize;
        for _ in 0..frames {
            self.frame()?;
        }
        Ok(())
    }

    /// One frame of motion toward `target`, slowing exponentially near it.
    fn step_toward(&mut self, target: Point3, speed_mm_s: f64) -> Flow {
        let d = target - self.tip;
        let dist = d.norm();
        if dist > 1e-12 {
            let v = (speed_mm_s * self.pace).min(dist / SETTLE_TAU_S);
            let step = (v * FRAME_MS as f64 / 1000.0).min(dist);
            self.tip += d * (step / dist);
        }
        self.frame()
    }

    fn reach(&mut self, target: Point3, speed_mm_s: f64) -> Flow {
        loop {
            self.step_toward(target, speed_mm_s)?;
            if self.tip.distance(target) <= ARRIVE_TOL_MM {
                return Ok(());
            }
        }
    }

    /// Straight-line motion at constant speed, as in a deliberate pull.
    fn glide(&mut self, target: Point3, speed_mm_s: f64) -> Flow {
        let step = speed_mm_s * self.pace * FRAME_MS as f64 / 1000.0;
        loop {
            let d = target - self.tip;
            let dist = d.norm();
            if dist <= step {
                self.tip = target;
                return self.frame();
            }
            self.tip += d * (step / dist);
            self.frame()?;
        }
    }

    fn misjudged(&mut self, target: Point3, sd: f64) -> Point3 {
        target + gaussian3(&mut self.rng) * sd
    }

    /// Point `clearance` inside the retina above surface point `p`.
    fn above(&self, p: Point3, clearance: f64) -> Point3 {
        let eye = self.task.eye();
        eye.center + (p - eye.center) * ((eye.retina_radius - clearance) / eye.retina_radius)
    }

    // Navigation: reach each sphere in turn (nearest first) and hold still in
    // it. A hold that keeps missing the sphere is re-aimed with a smaller error.
    fn navigation(&mut self) -> Flow {
        loop {
            let TaskState::Navigation(nav) = self.task.state() else { unreachable!() };
            let tip = self.tip;
            let Some((idx, center, radius)) = nav
                .spheres
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.collected)
                .min_by(|a, b| a.1.center.distance(tip).total_cmp(&b.1.center.distance(tip)))
                .map(|(i, s)| (i, s.center, s.radius))
            else {
                return Err(Stop::Complete);
            };
            // Locating the next sphere in depth takes a couple of looks.
            self.pause(2.0 * self.profile.reaction_ms)?;
            let mut err = self.profile.depth_error_mm;
            let mut aim = self.misjudged(center, err);
            self.reach(aim, REACH_SPEED_MM_S)?;
            let mut outside_ms = 0.0;
            let mut exits_at_aim = nav_exits(&self.task, idx);
            let lapse_p = self.profile.lapse_hz / self.pace * FRAME_MS as f64 / 1000.0;
            loop {
                if self.rng.random::<f64>() < lapse_p {
                    // Attention lapse: the hand wanders off the sphere and is
                    // brought back.
                    let dir = gaussian3(&mut self.rng).normalized().unwrap_or(Point3::X);
                    self.reach(center + dir * (radius + 0.6), REACH_SPEED_MM_S)?;
                    self.pause(0.5 * self.profile.reaction_ms)?;
                    self.reach(aim, REACH_SPEED_MM_S)?;
                    exits_at_aim = nav_exits(&self.task, idx);
                }
                self.step_toward(aim, REACH_SPEED_MM_S)?;
                let TaskState::Navigation(nav) = self.task.state() else { unreachable!() };
                if nav.spheres[idx].collected {
                    break;
                }
                let flicker = nav.spheres[idx].exits >= exits_at_aim + 2;
                if nav.active_contact == Some(idx) {
                    outside_ms = 0.0;
                } else {
                    outside_ms += FRAME_MS as f64;
                }
                if flicker || outside_ms > self.profile.reaction_ms / self.pace {
                    err *= 0.5;
                    aim = self.misjudged(center, err.min(0.5 * radius));
                    outside_ms = 0.0;
                    exits_at_aim = nav_exits(&self.task, idx);
                }
            }
        }
    }

    // Tremor: push the moving sphere along its path, steering toward where it
    // was one reaction time ago.
    fn tremor(&mut self) -> Flow {
        let TaskState::Tremor(tr) = self.task.state() else { unreachable!() };
        let start = tr.target_center();
        let bias = gaussian3(&mut self.rng) * (0.3 * self.profile.depth_error_mm);
        let approach = self.misjudged(start, 0.5 * self.profile.depth_error_mm);
        self.reach(approach, REACH_SPEED_MM_S)?;
        let delay_frames = (self.profile.reaction_ms / FRAME_MS as f64).round() as usize;
        let mut seen: VecDeque<Point3> = VecDeque::with_capacity(delay_frames + 1);
        loop {
            let TaskState::Tremor(tr) = self.task.state() else { unreachable!() };
            seen.push_back(tr.target_center());
            if seen.len() > delay_frames + 1 {
                seen.pop_front();
            }
            let aim = seen[0] + bias;
            self.step_toward(aim, self.profile.tracking_speed_mm_s)?;
        }
    }

    // Peeling: grasp a peelable patch from just above the membrane, pull
    // toward the disc center for a planned number of patch lengths, release
    // and lift.
    fn peeling(&mut self) -> Flow {
        let caution = self.profile.caution;
        let hover = 0.5 + 0.4 * caution;
        let pull_speed = 2.6 - 1.8 * caution;
        loop {
            let TaskState::Peeling(mesh) = self.task.state() else { unreachable!() };
            let tip = self.tip;
            let target = (0..mesh.patches.len())
                .filter(|&i| mesh.patches[i].attached && mesh.is_eligible(i))
                .min_by(|&a, &b| mesh.patches[a].center.distance(tip).total_cmp(&mesh.patches[b].center.distance(tip)));
            let Some(target) = target else {
                return Err(Stop::Complete);
            };
            let center = mesh.patches[target].center;
            let threshold = mesh.pull_threshold;
            let pole = self.task.eye().posterior_pole();

            self.pause(0.5 * self.profile.reaction_ms)?;
            let grab = self.above(center, hover);
            self.reach(self.above(center, hover + 1.0), REACH_SPEED_MM_S)?;
            self.reach(grab, 0.5 * REACH_SPEED_MM_S)?;
            self.pause(0.5 * self.profile.reaction_ms)?;

            self.grip = true;
            self.frame()?;
            let patches = match self.profile.grasp_strategy {
                GraspStrategy::ManySmallPulls => self.rng.random_range(5..=6),
                GraspStrategy::FewLargePulls => self.rng.random_range(6..=8),
            };
            let toward = (self.above(pole, hover) - grab).normalized().unwrap_or_else(|| {
                let n = (grab - self.task.eye().center).normalized().unwrap_or(Point3::Z);
                n.any_orthonormal()
            });
            let length = threshold * f64::from(patches) + 0.15;
            let end = self.above(surface(self.task.eye(), grab + toward * length), hover);
            self.glide(end, pull_speed)?;
            self.grip = false;
            self.frame()?;
            let lift = self.above(end, hover + 1.0);
            self.reach(lift, REACH_SPEED_MM_S)?;
        }
    }

    // Laser: visit breaks nearest first; within a break, aim at the
    // untreated cell nearest the previous aim point and fire single shots.
    fn laser(&mut self) -> Flow {
        let standoff = 2.0 + 0.4 * self.profile.caution;
        let trocar = self.task.rig().trocar(Hand::Right);
        let mut last_aim = self.tip;
        loop {
            let TaskState::Laser(st) = self.task.state() else { unreachable!() };
            let threshold = st.cfg.treat_threshold;
            let pick = st
                .breaks
                .iter()
                .enumerate()
                .filter(|(_, b)| !b.treated)
                .flat_map(|(i, b)| {
                    b.cells
                        .iter()
                        .filter(|c| c.accumulated_intensity < threshold)
                        .map(move |c| (i, b.center, c.center))
                })
                .min_by(|a, b| a.2.distance(last_aim).total_cmp(&b.2.distance(last_aim)));
            let Some((_, break_center, cell)) = pick else {
                return Err(Stop::Complete);
            };
            let eye = *self.task.eye();
            // Aim on the midline of the annulus at the cell's bearing.
            let mid = 0.5 * (st.cfg.r_in_mm + st.cfg.r_out_mm);
            let bframe = eye.tangent_frame(break_center);
            let (u, v) = eye.gnomonic(&bframe, cell).unwrap_or((mid, 0.0));
            let cell = eye.geodesic_offset(&bframe, libm::atan2(v, u), mid);
            let frame = eye.tangent_frame(cell);
            let mut aim = cell + (frame.e1 * gaussian(&mut self.rng) + frame.e2 * gaussian(&mut self.rng)) * self.profile.aim_sd_mm;
            if self.rng.random::<f64>() < self.profile.center_bias {
                aim = break_center + (aim - break_center) * self.rng.random_range(0.0..0.6);
            }
            let aim = eye.center + (aim - eye.center).normalized().unwrap_or(eye.posterior_pole_dir) * eye.retina_radius;
            let along = (aim - trocar).normalized().unwrap_or(eye.posterior_pole_dir);
            let far = last_aim.distance(aim) > 2.0 * st.cfg.r_out_mm;
            last_aim = aim;

            if far {
                self.pause(self.profile.reaction_ms)?;
            }
            self.reach(aim - along * standoff, REACH_SPEED_MM_S)?;
            self.pause(0.25 * self.profile.reaction_ms)?;
            self.grip = true;
            self.frame()?;
            self.grip = false;
            self.frame()?;
        }
    }
}

fn surface(eye: &crate::geom::EyeModel, p: Point3) -> Point3 {
    eye.center + (p - eye.center).normalized().unwrap_or(eye.posterior_pole_dir) * eye.retina_radius
}

fn nav_exits(task: &Task, idx: usize) -> u32 {
    match task.state() {
        TaskState::Navigation(nav) => nav.spheres[idx].exits,
        _ => 0,
    }
}
