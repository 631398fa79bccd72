use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geom::{EyeModel, TrocarRig};

use super::TaskError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Navigation,
    Tremor,
    Peeling,
    Laser,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Navigation, TaskKind::Tremor, TaskKind::Peeling, TaskKind::Laser];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Navigation => "navigation",
            TaskKind::Tremor => "tremor",
            TaskKind::Peeling => "peeling",
            TaskKind::Laser => "laser",
        }
    }

    /// Module name as shown to trainees.
    pub fn display_name(self) -> &'static str {
        match self {
            TaskKind::Navigation => "Navigation Training",
            TaskKind::Tremor => "Tremor Control",
            TaskKind::Peeling => "Peeling Control",
            TaskKind::Laser => "Laser Precision",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "navigation" | "nav" => Ok(TaskKind::Navigation),
            "tremor" => Ok(TaskKind::Tremor),
            "peeling" | "peel" => Ok(TaskKind::Peeling),
            "laser" => Ok(TaskKind::Laser),
            other => Err(format!("unknown module '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EyeConfig {
    pub retina_radius_mm: f64,
}

impl Default for EyeConfig {
    fn default() -> Self {
        Self { retina_radius_mm: 12.0 }
    }
}

/// Trocar placement, given as angles from the posterior pole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    pub trocar_polar_deg: f64,
    pub trocar_left_longitude_deg: f64,
    pub trocar_right_longitude_deg: f64,
    pub lateral_scale: f64,
    pub depth_scale: f64,
    pub ergonomic_rotation_deg: f64,
    /// `None` rests the tip at the eye center.
    pub rest_depth_mm: Option<f64>,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            trocar_polar_deg: 140.0,
            trocar_left_longitude_deg: 150.0,
            trocar_right_longitude_deg: 30.0,
            lateral_scale: 0.5,
            depth_scale: 1.0,
            ergonomic_rotation_deg: 45.0,
            rest_depth_mm: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TouchConfig {
    pub engage_mm: f64,
    pub release_mm: f64,
}

impl Default for TouchConfig {
    fn default() -> Self {
        Self { engage_mm: 0.1, release_mm: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigationConfig {
    pub sphere_count: usize,
    pub sphere_radius_mm: f64,
    pub depth_min_mm: f64,
    pub depth_max_mm: f64,
    pub min_separation_mm: f64,
    /// Spheres are kept out of the anterior segment: the cosine between a
    /// sphere's direction and the anterior pole may not exceed this.
    pub max_anterior_cos: f64,
    pub dwell_required_ms: u64,
    pub max_placement_attempts: usize,
}

impl Default for NavigationConfig {
    fn default() -> Self {
        Self {
            sphere_count: 10,
            sphere_radius_mm: 1.5,
            depth_min_mm: 2.0,
            depth_max_mm: 10.0,
            min_separation_mm: 4.0,
            max_anterior_cos: 0.5,
            dwell_required_ms: 2000,
            max_placement_attempts: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TremorConfig {
    pub path_polar_deg: f64,
    pub arc_start_longitude_deg: f64,
    pub arc_span_deg: f64,
    /// Distance of the shaving path inside the retinal surface.
    pub path_inset_mm: f64,
    pub path_speed_mm_s: f64,
    pub target_radius_mm: f64,
}

impl Default for TremorConfig {
    fn default() -> Self {
        Self {
            path_polar_deg: 60.0,
            arc_start_longitude_deg: -90.0,
            arc_span_deg: 180.0,
            path_inset_mm: 1.0,
            path_speed_mm_s: 10.0,
            target_radius_mm: 1.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeelingConfig {
    pub rings: usize,
    pub sectors: usize,
    pub disc_radius_mm: f64,
    pub grab_radius_mm: f64,
    pub pull_threshold_mm: f64,
}

impl Default for PeelingConfig {
    fn default() -> Self {
        Self { rings: 4, sectors: 12, disc_radius_mm: 3.0, grab_radius_mm: 1.0, pull_threshold_mm: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserConfig {
    pub break_count: usize,
    pub break_polar_deg: f64,
    pub first_break_longitude_deg: f64,
    pub r_in_mm: f64,
    pub r_out_mm: f64,
    pub grid_rows: usize,
    pub grid_sectors: usize,
    /// Spot radius with the probe touching the retina.
    pub spot_radius_min_mm: f64,
    /// Spot growth per millimeter of probe-to-retina distance.
    pub spot_growth_per_mm: f64,
    pub treat_threshold: f64,
    pub repeat_interval_ms: u64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        Self {
            break_count: 5,
            break_polar_deg: 60.0,
            first_break_longitude_deg: 0.0,
            r_in_mm: 1.0,
            r_out_mm: 2.2,
            grid_rows: 2,
            grid_sectors: 24,
            spot_radius_min_mm: 0.3,
            spot_growth_per_mm: 0.15,
            treat_threshold: 1.0,
            repeat_interval_ms: 200,
        }
    }
}

/// Every tunable constant of the engine. Serialized into session headers so a
/// log replays under the exact configuration it was recorded with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub eye: EyeConfig,
    pub rig: RigConfig,
    pub touch: TouchConfig,
    /// Eye rotation rate per unit joystick deflection.
    pub eye_rotation_deg_per_s: f64,
    pub navigation: NavigationConfig,
    pub tremor: TremorConfig,
    pub peeling: PeelingConfig,
    pub laser: LaserConfig,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            eye: EyeConfig::default(),
            rig: RigConfig::default(),
            touch: TouchConfig::default(),
            eye_rotation_deg_per_s: 30.0,
            navigation: NavigationConfig::default(),
            tremor: TremorConfig::default(),
            peeling: PeelingConfig::default(),
            laser: LaserConfig::default(),
        }
    }
}

impl TaskConfig {
    pub fn eye_model(&self) -> EyeModel {
        EyeModel::with_radius(self.eye.retina_radius_mm)
    }

    pub fn trocar_rig(&self) -> TrocarRig {
        let eye = self.eye_model();
        let r = &self.rig;
        TrocarRig {
            trocar_left: eye.surface_point(r.trocar_polar_deg, r.trocar_left_longitude_deg, 0.0),
            trocar_right: eye.surface_point(r.trocar_polar_deg, r.trocar_right_longitude_deg, 0.0),
            lateral_scale: r.lateral_scale,
            depth_scale: r.depth_scale,
            ergonomic_rotation_deg: r.ergonomic_rotation_deg,
            rest_depth_mm: r.rest_depth_mm.unwrap_or(eye.retina_radius),
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |m: &str| Err(TaskError::InvalidConfig(m.to_string()));
        let eye = self.eye_model();
        eye.validate().map_err(|e| TaskError::InvalidConfig(e.to_string()))?;
        self.trocar_rig()
            .validate(&eye)
            .map_err(|e| TaskError::InvalidConfig(e.to_string()))?;
        if !(self.touch.engage_mm >= 0.0 && self.touch.release_mm >= self.touch.engage_mm) {
            return bad("touch thresholds require release >= engage >= 0");
        }
        if !self.eye_rotation_deg_per_s.is_finite() || self.eye_rotation_deg_per_s < 0.0 {
            return bad("eye rotation rate must be finite and non-negative");
        }
        let n = &self.navigation;
        if n.sphere_count == 0 || n.sphere_radius_mm <= 0.0 || n.depth_min_mm < 0.0 || n.depth_max_mm < n.depth_min_mm {
            return bad("navigation layout parameters out of range");
        }
        if n.depth_max_mm >= eye.retina_radius || n.dwell_required_ms == 0 {
            return bad("navigation spheres must lie inside the globe with a positive dwell");
        }
        let t = &self.tremor;
        if t.path_speed_mm_s <= 0.0 || t.target_radius_mm <= 0.0 || t.arc_span_deg <= 0.0 || t.path_inset_mm >= eye.retina_radius {
            return bad("tremor parameters out of range");
        }
        let p = &self.peeling;
        if p.rings == 0 || p.sectors < 3 || p.disc_radius_mm <= 0.0 || p.grab_radius_mm <= 0.0 || p.pull_threshold_mm <= 0.0 {
            return bad("peeling parameters out of range");
        }
        let l = &self.laser;
        if l.break_count == 0 || l.grid_rows == 0 || l.grid_sectors == 0 {
            return bad("laser grid must be non-empty");
        }
        if !(l.r_out_mm > l.r_in_mm && l.r_in_mm > 0.0) {
            return bad("laser annulus requires r_out > r_in > 0");
        }
        if l.spot_radius_min_mm <= 0.0 || l.spot_growth_per_mm < 0.0 || l.treat_threshold <= 0.0 || l.repeat_interval_ms == 0 {
            return bad("laser spot parameters out of range");
        }
        Ok(())
    }
}
