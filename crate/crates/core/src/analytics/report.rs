use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::session::{Group, MetricsRecord, MetricsTable};
use crate::task::{LaserConfig, MetricsReport, ModuleMetrics, SpotRecord, TaskKind};

use super::{
    cohens_d, fit_lmm, heatmap, ring_mass, summarize, AnalyticsError, EffectRow, FixedEffect, HeatmapGrid, LmmFit,
    LmmSpec, DEFAULT_GRID,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmmRow {
    pub module: TaskKind,
    pub metric: String,
    pub fit: Option<LmmFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingMass {
    pub group: Group,
    pub spots: usize,
    pub ring_mass: f64,
}

/// Effect sizes, mixed models and laser heatmaps over a set of sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sessions: usize,
    pub effect_sizes: Vec<EffectRow>,
    pub lmm: Vec<LmmRow>,
    pub heatmaps: Vec<HeatmapGrid>,
    pub ring_mass: Vec<RingMass>,
}

impl AnalysisReport {
    pub fn effect(&self, module: TaskKind, metric: &str, run: &str) -> Option<&EffectRow> {
        self.effect_sizes.iter().find(|e| e.module == module && e.metric == metric && e.run == run)
    }

    pub fn lmm_fit(&self, module: TaskKind, metric: &str) -> Option<&LmmFit> {
        self.lmm.iter().find(|r| r.module == module && r.metric == metric)?.fit.as_ref()
    }

    pub fn ring_mass_of(&self, group: Group) -> Option<f64> {
        self.ring_mass.iter().find(|r| r.group == group).map(|r| r.ring_mass)
    }
}

fn laser_spots(report: &MetricsReport) -> &[SpotRecord] {
    match &report.specific {
        ModuleMetrics::Laser { spot_coordinates, .. } => spot_coordinates,
        _ => &[],
    }
}

/// Runs the whole pipeline. Effect sizes are novice over expert for each run
/// and for all runs pooled (`run = "overall"`).
pub fn analyze(records: &[MetricsRecord], laser: &LaserConfig) -> Result<AnalysisReport, AnalyticsError> {
    let table = MetricsTable::from_records(records).map_err(|e| AnalyticsError::Data(e.to_string()))?;
    let mut runs: Vec<u32> = table.rows.iter().map(|r| r.run_index).collect();
    runs.sort_unstable();
    runs.dedup();

    let mut effect_sizes = Vec::new();
    let mut lmm = Vec::new();
    for module in TaskKind::ALL {
        for &metric in MetricsReport::metric_names(module) {
            let slots = runs.iter().map(|&r| (Some(r), r.to_string())).chain([(None, "overall".to_string())]);
            for (run, label) in slots {
                let nov = table.values(module, metric, Group::Novice, run);
                let exp = table.values(module, metric, Group::Expert, run);
                if nov.len() < 2 || exp.len() < 2 {
                    continue;
                }
                if let Ok(effect) = cohens_d(&summarize(&nov)?, &summarize(&exp)?) {
                    effect_sizes.push(EffectRow { module, metric: metric.to_string(), run: label, effect });
                }
            }
            if table.select(module, metric).next().is_none() {
                continue;
            }
            let row = match fit_lmm(&LmmSpec::full(module, metric), &table) {
                Ok(fit) => LmmRow { module, metric: metric.to_string(), fit: Some(fit), error: None },
                Err(e) => LmmRow { module, metric: metric.to_string(), fit: None, error: Some(e.to_string()) },
            };
            lmm.push(row);
        }
    }

    let mut heatmaps = Vec::new();
    let mut rings = Vec::new();
    for group in [Group::Novice, Group::Expert] {
        let spots: Vec<SpotRecord> = records
            .iter()
            .filter(|r| r.participant.group == group && r.report.module == TaskKind::Laser)
            .flat_map(|r| laser_spots(&r.report).iter().cloned())
            .collect();
        if records.iter().any(|r| r.participant.group == group && r.report.module == TaskKind::Laser) {
            heatmaps.extend(heatmap(&spots, laser.break_count, laser.r_out_mm, DEFAULT_GRID, group.as_str()));
            rings.push(RingMass { group, spots: spots.len(), ring_mass: ring_mass(&spots, laser.r_in_mm, laser.r_out_mm) });
        }
    }

    Ok(AnalysisReport { sessions: records.len(), effect_sizes, lmm, heatmaps, ring_mass: rings })
}

/// Writes `report.json`, `effect_sizes.csv`, `lmm.csv`, `ring_mass.csv` and
/// one `heatmap_<group>_break<i>.csv` per grid into `dir`.
pub fn write_report(report: &AnalysisReport, dir: &Path) -> Result<(), AnalyticsError> {
    let io = |e: std::io::Error| AnalyticsError::Data(e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report).expect("report serializes")).map_err(io)?;

    let mut es = String::from("module,metric,run,d,ci_low,ci_high,band\n");
    for e in &report.effect_sizes {
        let x = &e.effect;
        es.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.module, e.metric, e.run, x.d, x.ci_low, x.ci_high, x.band.as_str()
        ));
    }
    fs::write(dir.join("effect_sizes.csv"), es).map_err(io)?;

    let mut lm = String::from("module,metric,term,estimate,se,p_value,sigma_b2,sigma_e2,error\n");
    for r in &report.lmm {
        match &r.fit {
            Some(fit) => {
                for (i, t) in fit.terms.iter().enumerate() {
                    lm.push_str(&format!(
                        "{},{},{},{},{},{},{},{},\n",
                        r.module,
                        r.metric,
                        t.as_str(),
                        fit.beta[i],
                        fit.se[i],
                        fit.p_value[i],
                        fit.sigma_b2,
                        fit.sigma_e2
                    ));
                }
            }
            None => {
                let err = r.error.as_deref().unwrap_or("").replace('"', "'");
                lm.push_str(&format!("{},{},,,,,,,\"{}\"\n", r.module, r.metric, err));
            }
        }
    }
    fs::write(dir.join("lmm.csv"), lm).map_err(io)?;

    let mut rm = String::from("group,spots,ring_mass\n");
    for r in &report.ring_mass {
        rm.push_str(&format!("{},{},{}\n", r.group.as_str(), r.spots, r.ring_mass));
    }
    fs::write(dir.join("ring_mass.csv"), rm).map_err(io)?;

    for h in &report.heatmaps {
        fs::write(dir.join(format!("heatmap_{}_break{}.csv", h.label, h.break_index)), h.to_csv()).map_err(io)?;
    }
    Ok(())
}

/// Run coefficient of the efficiency model, if it was fitted.
pub fn run_effect_on_efficiency(report: &AnalysisReport, module: TaskKind) -> Option<f64> {
    report.lmm_fit(module, "efficiency")?.coef(FixedEffect::RunIndex).map(|c| c.0)
}
