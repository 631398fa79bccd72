use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::task::SpotRecord;

pub const DEFAULT_GRID: usize = 21;

/// Spot counts binned over a break's tangent plane, `extent_mm` on each side
/// of the center. `counts` is row-major with rows along v and columns along u.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub break_index: usize,
    pub label: String,
    pub g: usize,
    pub extent_mm: f64,
    pub counts: Vec<u32>,
    /// Spots assigned to this break but outside the extent.
    pub dropped: u32,
}

impl HeatmapGrid {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn count_at(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.g + col]
    }

    /// Counts divided by the maximum cell, for display.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().map(|&c| if max == 0 { 0.0 } else { f64::from(c) / f64::from(max) }).collect()
    }

    fn bin(&self, x: f64) -> Option<usize> {
        if !(x.abs() <= self.extent_mm) {
            return None;
        }
        let k = ((x + self.extent_mm) / (2.0 * self.extent_mm) * self.g as f64).floor() as usize;
        Some(k.min(self.g - 1))
    }

    /// `#`-prefixed metadata line, then `g` rows of `g` comma-separated counts.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# break={} label={} g={} extent_mm={} dropped={}\n",
            self.break_index, self.label, self.g, self.extent_mm, self.dropped
        );
        for row in self.counts.chunks(self.g) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// One grid per break, binning each spot by its gnomonic coordinates at the
/// nearest break center. Extent is three times the outer annulus radius.
pub fn heatmap(spots: &[SpotRecord], n_breaks: usize, r_out_mm: f64, g: usize, label: &str) -> Vec<HeatmapGrid> {
    let g = g.max(1);
    let mut grids: Vec<HeatmapGrid> = (0..n_breaks)
        .map(|i| HeatmapGrid {
            break_index: i,
            label: label.to_string(),
            g,
            extent_mm: 3.0 * r_out_mm,
            counts: vec![0; g * g],
            dropped: 0,
        })
        .collect();
    for s in spots {
        let Some(grid) = grids.get_mut(s.break_index) else { continue };
        match (grid.bin(s.local_u), grid.bin(s.local_v)) {
            (Some(col), Some(row)) => grid.counts[row * g + col] += 1,
            _ => grid.dropped += 1,
        }
    }
    grids
}

/// Fraction of spots whose geodesic distance from their break center lies
/// in the treatment annulus `[r_in, r_out]`.
pub fn ring_mass(spots: &[SpotRecord], r_in_mm: f64, r_out_mm: f64) -> f64 {
    if spots.is_empty() {
        return 0.0;
    }
    let n = spots
        .iter()
        .filter(|s| (r_in_mm..=r_out_mm).contains(&s.geodesic_from_center_mm))
        .count();
    n as f64 / spots.len() as f64
}
