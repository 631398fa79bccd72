//! The four training tasks and the tick-driven engine that runs them.
//!
//! A [`Task`] owns its layout, instrument rig and accumulated metrics. Time is
//! taken solely from input timestamps, so identical `(seed, inputs)` produce
//! bit-identical events and reports.

mod config;
mod events;
mod input;
mod laser;
mod metrics;
mod navigation;
mod path;
mod peeling;
mod tremor;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geom::{
    map_controller_pose, CalibrationOffset, EyeModel, GeomError, InstrumentKind, InstrumentState, Point3,
    TouchEpisodeTracker, TrocarRig, UnitQuat,
};

pub use config::{
    EyeConfig, LaserConfig, NavigationConfig, PeelingConfig, RigConfig, TaskConfig, TaskKind, TouchConfig, TremorConfig,
};
pub use events::TaskEvent;
pub use input::TickInput;
pub use laser::{CoverageCell, LaserSpot, LaserState, RetinalBreak};
pub use metrics::{MetricsReport, ModuleMetrics, SpotRecord};
pub use navigation::{NavigationState, TargetSphere};
pub use path::ShavingPath;
pub use peeling::{MembraneMesh, MembranePatch};
pub use tremor::{DeviationStats, TremorState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("could not place layout: {placed} placed after {attempts} attempts")]
    SeedPlacementFailure { placed: usize, attempts: usize },
    #[error("timestamp {t_ms} does not follow {prev_ms}")]
    NonMonotonicTimestamp { prev_ms: u64, t_ms: u64 },
    #[error("task already complete")]
    TaskAlreadyComplete,
    #[error("task not complete")]
    TaskNotComplete,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl TaskError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            TaskError::InvalidConfig(_) => "InvalidConfig",
            TaskError::SeedPlacementFailure { .. } => "SeedPlacementFailure",
            TaskError::NonMonotonicTimestamp { .. } => "NonMonotonicTimestamp",
            TaskError::TaskAlreadyComplete => "TaskAlreadyComplete",
            TaskError::TaskNotComplete => "TaskNotComplete",
            TaskError::NonFiniteInput => "NonFiniteInput",
            TaskError::Geom(_) => "GeometryError",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "module", rename_all = "snake_case")]
pub enum TaskState {
    Navigation(NavigationState),
    Tremor(TremorState),
    Peeling(MembraneMesh),
    Laser(LaserState),
}

/// Seed-determined geometry of a task, as announced to clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "module", rename_all = "snake_case")]
pub enum TaskLayout {
    Navigation { spheres: Vec<Point3>, sphere_radius_mm: f64 },
    Tremor { path: ShavingPath, target_radius_mm: f64 },
    Peeling { rings: usize, sectors: usize, patches: Vec<Point3> },
    Laser { breaks: Vec<Point3>, r_in_mm: f64, r_out_mm: f64 },
}

impl TaskLayout {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("layout serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-module progress shown while a session runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "module", rename_all = "snake_case")]
pub enum TaskVisuals {
    Navigation { collected: Vec<bool>, active_contact: Option<usize>, dwell_ms: u64 },
    Tremor { target: Point3, progress: f64, in_contact: bool },
    Peeling { attached: Vec<bool>, grasped_patch: Option<usize> },
    Laser { coverage: Vec<f64>, treated: Vec<bool>, spots: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSnapshot {
    pub t_ms: u64,
    pub elapsed_ms: u64,
    pub left_tip: Point3,
    pub right_tip: Point3,
    pub right_inside_eye: bool,
    pub retinal_touches: u32,
    pub magnified: bool,
    pub completed: bool,
    pub visuals: TaskVisuals,
}

/// One running training task.
#[derive(Clone, Debug)]
pub struct Task {
    kind: TaskKind,
    seed: u64,
    config: TaskConfig,
    rig: TrocarRig,
    eye: EyeModel,
    calibration: CalibrationOffset,
    state: TaskState,
    layout: TaskLayout,
    touch: TouchEpisodeTracker,
    start_ms: Option<u64>,
    last_ms: Option<u64>,
    elapsed_ms: u64,
    prev_grip: bool,
    prev_x: bool,
    magnified: bool,
    completed: bool,
    left: Option<InstrumentState>,
    right: Option<InstrumentState>,
}

/// Builds a task with its seed-determined layout.
pub fn init_task(kind: TaskKind, config: &TaskConfig, seed: u64) -> Result<Task, TaskError> {
    Task::new(kind, config.clone(), seed, CalibrationOffset::default())
}

impl Task {
    pub fn new(kind: TaskKind, config: TaskConfig, seed: u64, calibration: CalibrationOffset) -> Result<Self, TaskError> {
        config.validate()?;
        let eye = config.eye_model();
        let rig = config.trocar_rig();
        let state = match kind {
            TaskKind::Navigation => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                TaskState::Navigation(NavigationState::layout(&config.navigation, &eye, &mut rng)?)
            }
            TaskKind::Tremor => TaskState::Tremor(TremorState::new(
                tremor_path(&config.tremor, &eye),
                config.tremor.path_speed_mm_s,
                config.tremor.target_radius_mm,
            )),
            TaskKind::Peeling => TaskState::Peeling(MembraneMesh::layout(&config.peeling, &eye)),
            TaskKind::Laser => TaskState::Laser(LaserState::layout(&config.laser, &eye)),
        };
        let layout = layout_of(&state, &config);
        let touch = TouchEpisodeTracker::new(config.touch.engage_mm, config.touch.release_mm)
            .map_err(|e| TaskError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            kind,
            seed,
            config,
            rig,
            eye,
            calibration,
            state,
            layout,
            touch,
            start_ms: None,
            last_ms: None,
            elapsed_ms: 0,
            prev_grip: false,
            prev_x: false,
            magnified: false,
            completed: false,
            left: None,
            right: None,
        })
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn rig(&self) -> &TrocarRig {
        &self.rig
    }

    pub fn eye(&self) -> &EyeModel {
        &self.eye
    }

    pub fn calibration(&self) -> &CalibrationOffset {
        &self.calibration
    }

    pub fn state(&self) -> &TaskState {
        &self.state
    }

    pub fn layout(&self) -> &TaskLayout {
        &self.layout
    }

    pub fn layout_hash(&self) -> String {
        self.layout.hash()
    }

    pub fn is_complete(&self) -> bool {
        self.completed
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.elapsed_ms
    }

    pub fn last_t_ms(&self) -> Option<u64> {
        self.last_ms
    }

    pub fn retinal_touches(&self) -> u32 {
        self.touch.touch_count
    }

    /// Right-hand instrument after the most recent tick.
    pub fn right_instrument(&self) -> Option<&InstrumentState> {
        self.right.as_ref()
    }

    pub fn left_instrument(&self) -> Option<&InstrumentState> {
        self.left.as_ref()
    }

    pub fn right_kind(&self) -> InstrumentKind {
        match self.kind {
            TaskKind::Laser => InstrumentKind::LaserProbe,
            _ => InstrumentKind::Vitrector,
        }
    }

    /// Advances the task by one input frame.
    pub fn tick(&mut self, input: &TickInput) -> Result<Vec<TaskEvent>, TaskError> {
        if self.completed {
            return Err(TaskError::TaskAlreadyComplete);
        }
        if let Some(prev) = self.last_ms {
            if input.t_ms <= prev {
                return Err(TaskError::NonMonotonicTimestamp { prev_ms: prev, t_ms: input.t_ms });
            }
        }
        if !input.is_finite() {
            return Err(TaskError::NonFiniteInput);
        }
        let t = input.t_ms;
        let dt = self.last_ms.map_or(0, |p| t - p);
        let start = *self.start_ms.get_or_insert(t);
        self.last_ms = Some(t);
        self.elapsed_ms = t - start;

        self.rotate_eye(input.joystick_right, dt);

        let left = map_controller_pose(&input.left_pose, &self.rig, &self.calibration, InstrumentKind::LightPipe, &self.eye)?;
        let right = map_controller_pose(&input.right_pose, &self.rig, &self.calibration, self.right_kind(), &self.eye)?;
        self.left = Some(left);
        self.right = Some(right);

        let mut events = Vec::new();
        if input.button_x_left && !self.prev_x {
            self.magnified = !self.magnified;
            events.push(TaskEvent::Magnification { t_ms: t, enabled: self.magnified });
        }
        self.prev_x = input.button_x_left;

        if right.inside_eye && self.touch.update(right.tip, &self.eye) {
            events.push(TaskEvent::RetinalTouch { t_ms: t, count: self.touch.touch_count });
        }

        let grip_pressed = input.grip_right && !self.prev_grip;
        self.prev_grip = input.grip_right;
        let tip = right.inside_eye.then_some(right.tip);
        let done = match &mut self.state {
            TaskState::Navigation(s) => s.step(tip, t, &mut events),
            TaskState::Tremor(s) => s.step(tip, dt, t, &mut events),
            TaskState::Peeling(s) => s.step(tip, grip_pressed, input.grip_right, t, &mut events),
            TaskState::Laser(s) => s.step(&self.eye, &right, grip_pressed, input.grip_right, t, &mut events),
        };
        if done {
            self.completed = true;
            events.push(TaskEvent::TaskCompleted { t_ms: t, elapsed_ms: self.elapsed_ms });
        }
        Ok(events)
    }

    /// Joystick deflection turns the globe: x yaws about the vertical axis,
    /// y pitches about the horizontal one.
    fn rotate_eye(&mut self, (jx, jy): (f64, f64), dt_ms: u64) {
        if dt_ms == 0 || (jx == 0.0 && jy == 0.0) {
            return;
        }
        let rate = self.config.eye_rotation_deg_per_s.to_radians() * dt_ms as f64 / 1000.0;
        let yaw = UnitQuat::from_axis_angle(Point3::Y, jx.clamp(-1.0, 1.0) * rate);
        let pitch = UnitQuat::from_axis_angle(Point3::X, jy.clamp(-1.0, 1.0) * rate);
        self.eye.eye_rotation = yaw * pitch * self.eye.eye_rotation;
    }

    /// Metrics for the session so far. Without `force`, an unfinished task is
    /// an error; forced reports are marked incomplete.
    pub fn finalize(&self, force: bool) -> Result<MetricsReport, TaskError> {
        if !self.completed && !force {
            return Err(TaskError::TaskNotComplete);
        }
        let specific = match &self.state {
            TaskState::Navigation(s) => ModuleMetrics::Navigation { sphere_exits: s.exits },
            TaskState::Tremor(s) => ModuleMetrics::Tremor {
                sphere_exits: s.exits,
                mean_dev_mm: s.deviation.mean_mm(),
                max_dev_mm: s.deviation.max_mm,
            },
            TaskState::Peeling(s) => ModuleMetrics::Peeling { grasps: s.grasps },
            TaskState::Laser(s) => ModuleMetrics::Laser {
                laser_spots: s.spots.len() as u32,
                spot_coordinates: s.spots.iter().map(|sp| spot_record(s, &self.eye, sp)).collect(),
                per_break_treated: s.breaks.iter().map(|b| b.treated).collect(),
            },
        };
        Ok(MetricsReport {
            module: self.kind,
            completed: self.completed,
            completion_time_s: self.elapsed_ms as f64 / 1000.0,
            retinal_touches: self.touch.touch_count,
            specific,
        })
    }

    pub fn snapshot(&self) -> TaskSnapshot {
        let visuals = match &self.state {
            TaskState::Navigation(s) => TaskVisuals::Navigation {
                collected: s.spheres.iter().map(|x| x.collected).collect(),
                active_contact: s.active_contact,
                dwell_ms: s.dwell_ms,
            },
            TaskState::Tremor(s) => TaskVisuals::Tremor {
                target: s.target_center(),
                progress: s.s_mm / s.path_length,
                in_contact: s.in_contact,
            },
            TaskState::Peeling(s) => TaskVisuals::Peeling {
                attached: s.patches.iter().map(|p| p.attached).collect(),
                grasped_patch: s.grasped_patch,
            },
            TaskState::Laser(s) => TaskVisuals::Laser {
                coverage: s.breaks.iter().map(|b| b.covered_fraction(s.cfg.treat_threshold)).collect(),
                treated: s.breaks.iter().map(|b| b.treated).collect(),
                spots: s.spots.len(),
            },
        };
        TaskSnapshot {
            t_ms: self.last_ms.unwrap_or(0),
            elapsed_ms: self.elapsed_ms,
            left_tip: self.left.map_or(self.rig.rest_tip(crate::geom::Hand::Left, &self.eye), |s| s.tip),
            right_tip: self.right.map_or(self.rig.rest_tip(crate::geom::Hand::Right, &self.eye), |s| s.tip),
            right_inside_eye: self.right.is_some_and(|s| s.inside_eye),
            retinal_touches: self.touch.touch_count,
            magnified: self.magnified,
            completed: self.completed,
            visuals,
        }
    }
}

/// Arc at `path_polar_deg` from the posterior pole, inset from the retina.
fn tremor_path(cfg: &TremorConfig, eye: &EyeModel) -> ShavingPath {
    let (e1, e2) = eye.equatorial_axes();
    let th = cfg.path_polar_deg.to_radians();
    let r = eye.retina_radius - cfg.path_inset_mm;
    ShavingPath::Arc {
        center: eye.center + eye.posterior_pole_dir * (r * libm::cos(th)),
        radius: r * libm::sin(th),
        u: e1,
        v: e2,
        start_rad: cfg.arc_start_longitude_deg.to_radians(),
        span_rad: cfg.arc_span_deg.to_radians(),
    }
}

fn layout_of(state: &TaskState, cfg: &TaskConfig) -> TaskLayout {
    match state {
        TaskState::Navigation(s) => TaskLayout::Navigation {
            spheres: s.spheres.iter().map(|x| x.center).collect(),
            sphere_radius_mm: cfg.navigation.sphere_radius_mm,
        },
        TaskState::Tremor(s) => TaskLayout::Tremor { path: s.path.clone(), target_radius_mm: s.target_radius },
        TaskState::Peeling(s) => TaskLayout::Peeling {
            rings: s.rings,
            sectors: s.sectors,
            patches: s.patches.iter().map(|p| p.center).collect(),
        },
        TaskState::Laser(s) => TaskLayout::Laser {
            breaks: s.breaks.iter().map(|b| b.center).collect(),
            r_in_mm: cfg.laser.r_in_mm,
            r_out_mm: cfg.laser.r_out_mm,
        },
    }
}

fn spot_record(state: &LaserState, eye: &EyeModel, spot: &LaserSpot) -> SpotRecord {
    let (break_index, geo) = state.nearest_break(eye, spot.position).unwrap_or((0, f64::NAN));
    let frame = &state.breaks[break_index].frame;
    let (local_u, local_v) = eye.gnomonic(frame, spot.position).unwrap_or((f64::INFINITY, f64::INFINITY));
    SpotRecord {
        t_ms: spot.t_ms,
        position: spot.position,
        break_index,
        local_u,
        local_v,
        geodesic_from_center_mm: geo,
        radius_mm: spot.radius,
        intensity: spot.intensity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::controller_pose_for_tip;

    fn frame_at(task: &Task, t: u64, tip: Point3, grip: bool) -> TickInput {
        let right = controller_pose_for_tip(tip, UnitQuat::IDENTITY, task.rig(), task.calibration(), task.right_kind(), task.eye());
        TickInput { right_pose: right, grip_right: grip, ..TickInput::at_rest(t) }
    }

    #[test]
    fn navigation_layout_is_seed_deterministic() {
        let cfg = TaskConfig::default();
        let a = init_task(TaskKind::Navigation, &cfg, 42).unwrap();
        let b = init_task(TaskKind::Navigation, &cfg, 42).unwrap();
        let c = init_task(TaskKind::Navigation, &cfg, 43).unwrap();
        assert_eq!(a.layout(), b.layout());
        assert_eq!(a.layout_hash(), b.layout_hash());
        assert_ne!(a.layout_hash(), c.layout_hash());
    }

    #[test]
    fn tremor_path_is_a_half_circle_inside_the_globe() {
        let t = init_task(TaskKind::Tremor, &TaskConfig::default(), 0).unwrap();
        let TaskState::Tremor(s) = t.state() else { panic!() };
        let expected = std::f64::consts::PI * 11.0 * (60f64.to_radians()).sin();
        assert!((s.path_length - expected).abs() < 1e-9);
        for i in 0..=20 {
            let p = s.path.point_at(s.path_length * i as f64 / 20.0);
            assert!((t.eye().clearance(p) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_input_only_advances_time() {
        let mut t = init_task(TaskKind::Navigation, &TaskConfig::default(), 7).unwrap();
        let before = t.state().clone();
        for i in 0..100 {
            assert!(t.tick(&TickInput::at_rest(1000 + i * 11)).unwrap().is_empty());
        }
        assert_eq!(t.state(), &before);
        assert_eq!(t.elapsed_ms(), 99 * 11);
        assert_eq!(t.retinal_touches(), 0);
    }

    #[test]
    fn timestamps_must_increase() {
        let mut t = init_task(TaskKind::Peeling, &TaskConfig::default(), 0).unwrap();
        t.tick(&TickInput::at_rest(10)).unwrap();
        assert_eq!(t.tick(&TickInput::at_rest(10)), Err(TaskError::NonMonotonicTimestamp { prev_ms: 10, t_ms: 10 }));
        assert!(matches!(t.tick(&TickInput::at_rest(5)), Err(TaskError::NonMonotonicTimestamp { .. })));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut t = init_task(TaskKind::Laser, &TaskConfig::default(), 0).unwrap();
        let mut f = TickInput::at_rest(0);
        f.joystick_right = (f64::NAN, 0.0);
        assert_eq!(t.tick(&f), Err(TaskError::NonFiniteInput));
    }

    #[test]
    fn navigation_completes_and_refuses_further_ticks() {
        let mut task = init_task(TaskKind::Navigation, &TaskConfig::default(), 3).unwrap();
        let TaskLayout::Navigation { spheres, .. } = task.layout().clone() else { panic!() };
        let mut t = 0;
        let mut collected = 0;
        for c in &spheres {
            for _ in 0..=200 {
                let ev = task.tick(&frame_at(&task, t, *c, false)).unwrap();
                collected += ev.iter().filter(|e| matches!(e, TaskEvent::SphereCollected { .. })).count();
                t += 10;
                if collected > 0 && ev.iter().any(|e| matches!(e, TaskEvent::SphereCollected { .. })) {
                    break;
                }
            }
        }
        assert_eq!(collected, 10);
        assert!(task.is_complete());
        assert_eq!(task.tick(&TickInput::at_rest(t + 10)), Err(TaskError::TaskAlreadyComplete));
        let r = task.finalize(false).unwrap();
        assert!(r.completed && r.completion_time_s > 0.0);
        assert_eq!(r.metric("sphere_exits"), Some(0.0));
    }

    #[test]
    fn forced_finalize_of_fresh_task_is_incomplete_and_zero() {
        for kind in TaskKind::ALL {
            let t = init_task(kind, &TaskConfig::default(), 1).unwrap();
            assert_eq!(t.finalize(false), Err(TaskError::TaskNotComplete));
            let r = t.finalize(true).unwrap();
            assert!(!r.completed);
            assert!(r.metric_rows().iter().all(|(_, v)| *v == 0.0));
            assert_eq!(r.metric_rows().len(), MetricsReport::metric_names(kind).len());
        }
    }

    #[test]
    fn completion_time_is_elapsed_seconds() {
        let mut t = init_task(TaskKind::Navigation, &TaskConfig::default(), 1).unwrap();
        t.tick(&TickInput::at_rest(1000)).unwrap();
        t.tick(&TickInput::at_rest(50_860)).unwrap();
        assert_eq!(t.finalize(true).unwrap().completion_time_s, 49.86);
    }

    #[test]
    fn x_button_toggles_magnification_on_rising_edge() {
        let mut t = init_task(TaskKind::Peeling, &TaskConfig::default(), 0).unwrap();
        let press = |ms| TickInput { button_x_left: true, ..TickInput::at_rest(ms) };
        let e1 = t.tick(&press(0)).unwrap();
        let e2 = t.tick(&press(10)).unwrap();
        t.tick(&TickInput::at_rest(20)).unwrap();
        let e3 = t.tick(&press(30)).unwrap();
        assert_eq!(e1, vec![TaskEvent::Magnification { t_ms: 0, enabled: true }]);
        assert!(e2.is_empty());
        assert_eq!(e3, vec![TaskEvent::Magnification { t_ms: 30, enabled: false }]);
    }

    #[test]
    fn touching_the_retina_counts_one_episode() {
        let mut task = init_task(TaskKind::Peeling, &TaskConfig::default(), 0).unwrap();
        let eye = *task.eye();
        let near = eye.surface_point(20.0, 40.0, 0.05);
        let far = eye.surface_point(20.0, 40.0, 3.0);
        let mut touches = 0;
        for (i, p) in [far, near, near, far, near].iter().enumerate() {
            let ev = task.tick(&frame_at(&task, i as u64 * 10, *p, false)).unwrap();
            touches += ev.iter().filter(|e| matches!(e, TaskEvent::RetinalTouch { .. })).count();
        }
        assert_eq!(touches, 2);
        assert_eq!(task.retinal_touches(), 2);
    }

    #[test]
    fn joystick_rotates_the_fundus_frame() {
        let mut task = init_task(TaskKind::Navigation, &TaskConfig::default(), 0).unwrap();
        task.tick(&TickInput::at_rest(0)).unwrap();
        let f = TickInput { joystick_right: (1.0, 0.0), ..TickInput::at_rest(1000) };
        task.tick(&f).unwrap();
        let q = task.eye().eye_rotation;
        let expected = UnitQuat::from_axis_angle(Point3::Y, 30f64.to_radians());
        for (a, b) in q.to_array().iter().zip(expected.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn laser_hold_fires_one_plus_floor_h_over_interval() {
        for hold in [0u64, 150, 199, 200, 201, 999, 1000, 1234] {
            let mut task = init_task(TaskKind::Laser, &TaskConfig::default(), 0).unwrap();
            let eye = *task.eye();
            let aim = eye.surface_point(80.0, 180.0, 2.0);
            let mut t = 500;
            task.tick(&frame_at(&task, t, aim, false)).unwrap();
            let mut spots = 0;
            let start = t + 7;
            t = start;
            while t <= start + hold {
                let ev = task.tick(&frame_at(&task, t, aim, true)).unwrap();
                spots += ev.iter().filter(|e| matches!(e, TaskEvent::SpotFired { .. })).count() as u64;
                t += 1;
            }
            task.tick(&frame_at(&task, t, aim, false)).unwrap();
            assert_eq!(spots, 1 + hold / 200, "hold {hold}");
        }
    }
}
