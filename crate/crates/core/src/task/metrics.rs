use serde::{Deserialize, Serialize};

use crate::geom::Point3;

use super::TaskKind;

/// One laser spot as exported for heatmaps: global position plus coordinates
/// in the tangent frame of the nearest break.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotRecord {
    pub t_ms: u64,
    pub position: Point3,
    pub break_index: usize,
    /// Gnomonic tangent-plane coordinates at the break center, mm.
    pub local_u: f64,
    pub local_v: f64,
    pub geodesic_from_center_mm: f64,
    pub radius_mm: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModuleMetrics {
    Navigation { sphere_exits: u32 },
    Tremor { sphere_exits: u32, mean_dev_mm: f64, max_dev_mm: f64 },
    Peeling { grasps: u32 },
    Laser { laser_spots: u32, spot_coordinates: Vec<SpotRecord>, per_break_treated: Vec<bool> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub module: TaskKind,
    pub completed: bool,
    pub completion_time_s: f64,
    pub retinal_touches: u32,
    pub specific: ModuleMetrics,
}

impl MetricsReport {
    /// Scalar metrics in export order. Efficiency and safety come first.
    pub fn metric_rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![("efficiency", self.completion_time_s), ("safety", f64::from(self.retinal_touches))];
        match &self.specific {
            ModuleMetrics::Navigation { sphere_exits } => rows.push(("sphere_exits", f64::from(*sphere_exits))),
            ModuleMetrics::Tremor { sphere_exits, mean_dev_mm, max_dev_mm } => {
                rows.push(("sphere_exits", f64::from(*sphere_exits)));
                rows.push(("mean_dev_mm", *mean_dev_mm));
                rows.push(("max_dev_mm", *max_dev_mm));
            }
            ModuleMetrics::Peeling { grasps } => rows.push(("grasps", f64::from(*grasps))),
            ModuleMetrics::Laser { laser_spots, .. } => rows.push(("laser_spots", f64::from(*laser_spots))),
        }
        rows
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metric_rows().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    pub fn metric_names(kind: TaskKind) -> &'static [&'static str] {
        match kind {
            TaskKind::Navigation => &["efficiency", "safety", "sphere_exits"],
            TaskKind::Tremor => &["efficiency", "safety", "sphere_exits", "mean_dev_mm", "max_dev_mm"],
            TaskKind::Peeling => &["efficiency", "safety", "grasps"],
            TaskKind::Laser => &["efficiency", "safety", "laser_spots"],
        }
    }
}
