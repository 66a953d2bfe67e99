//! Waypoint heatmaps: sources, occupancy masking and NMS sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lidar::RadialOccupancyMask;
use crate::polar::{all_cells, PolarCell, CELLS, HEADING_BINS, RANGE_BINS};
use crate::rng::SplitMix64;
use crate::scene::{Point2D, Pose, Scene};

pub const DEFAULT_DELTA: f64 = 1e-4;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_SUPPRESS_HEADING: usize = 2;
pub const DEFAULT_SUPPRESS_RANGE: usize = 1;
pub const DEFAULT_BLUR_BINS: usize = 2;
/// Oracle heatmaps ignore cells nearer than this.
pub const ORACLE_MIN_RANGE_M: f64 = 0.5;
/// Log-normal shape of the spilled mass; larger values concentrate the
/// spill onto fewer spurious peaks.
const SPILL_LOG_SIGMA: f64 = 1.5;

/// Nonnegative 120×12 distribution over agent-relative polar cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarHeatmap {
    cells: Vec<f64>,
    center: Pose,
}

impl Default for PolarHeatmap {
    fn default() -> Self {
        Self::uniform(Pose::new(0.0, 0.0, 0.0))
    }
}

impl PolarHeatmap {
    /// Normalises `values` to sum to one.
    pub fn from_values(values: Vec<f64>, center: Pose) -> Result<Self> {
        if values.len() != CELLS {
            return Err(Error::contract(format!("heatmap needs {CELLS} cells, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::contract("heatmap cells must be finite and nonnegative"));
        }
        let cells = normalized(&values)
            .ok_or_else(|| Error::contract("heatmap has no positive mass"))?;
        Ok(Self { cells, center })
    }

    pub fn uniform(center: Pose) -> Self {
        Self {
            cells: vec![1.0 / CELLS as f64; CELLS],
            center,
        }
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn center(&self) -> Pose {
        self.center
    }

    pub fn get(&self, cell: PolarCell) -> f64 {
        self.cells[cell.index()]
    }

    pub fn sum(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Same distribution anchored at a different pose.
    pub fn recentered(&self, center: Pose) -> Self {
        Self {
            cells: self.cells.clone(),
            center,
        }
    }

    /// Plain-text grid: 120 lines (heading bins) of 12 decimal reals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for h in 0..HEADING_BINS {
            let row: Vec<String> = (0..RANGE_BINS)
                .map(|r| format!("{:e}", self.cells[h * RANGE_BINS + r]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the plain-text grid and normalises it.
    pub fn parse_text(text: &str, center: Pose) -> Result<Self> {
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        if rows.len() != HEADING_BINS {
            return Err(Error::parse(None, format!("expected {HEADING_BINS} rows, found {}", rows.len())));
        }
        let mut values = Vec::with_capacity(CELLS);
        for (lineno, line) in rows {
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(Some(lineno + 1), format!("bad number `{tok}`")))?;
                values.push(v);
            }
            if values.len() - before != RANGE_BINS {
                return Err(Error::parse(
                    Some(lineno + 1),
                    format!("expected {RANGE_BINS} columns, found {}", values.len() - before),
                ));
            }
        }
        Self::from_values(values, center)
    }
}

fn normalized(values: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = values.iter().sum();
    (total > 0.0).then(|| values.iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub heading_bin: usize,
    pub range_bin: usize,
    pub position: Point2D,
    pub score: f64,
}

impl Waypoint {
    pub fn cell(&self) -> PolarCell {
        PolarCell::new(self.heading_bin, self.range_bin)
    }
}

#[derive(Debug, Clone)]
pub struct OracleHeatmap {
    pub heatmap: PolarHeatmap,
    /// No cell qualified and the uniform fallback was returned.
    pub degenerate: bool,
}

/// Perfect-predictor heatmap: uniform mass over every cell at least
/// 0.5 m away where the agent fits and which it can drive to in a straight
/// line from `pose`.
pub fn oracle_heatmap(scene: &Scene, pose: &Pose) -> OracleHeatmap {
    let mut values = vec![0.0; CELLS];
    let origin = pose.position();
    let mut any = false;
    for h in 0..HEADING_BINS {
        // Straight-line reachability is monotone in range, so sweep each
        // heading outward bin by bin and stop at the first blocked segment.
        let mut prev = origin;
        for r in 0..RANGE_BINS {
            let cell = PolarCell::new(h, r);
            let p = cell.world_position(pose);
            if !scene.contains(p) || !scene.sweep_clear(prev, p) {
                break;
            }
            prev = p;
            if cell.center_range() >= ORACLE_MIN_RANGE_M {
                values[cell.index()] = 1.0;
                any = true;
            }
        }
    }
    if !any {
        return OracleHeatmap {
            heatmap: PolarHeatmap::uniform(*pose),
            degenerate: true,
        };
    }
    OracleHeatmap {
        heatmap: PolarHeatmap::from_values(values, *pose).expect("positive mass"),
        degenerate: false,
    }
}

/// Models an imperfect predictor: moves `spill` of the mass onto cells
/// within `blur_bins` of the support (heading wraps), regardless of what
/// occupies them. The spilled mass follows seeded log-normal weights, so it
/// forms a few spurious peaks rather than a flat haze.
pub fn noisy_heatmap(base: &PolarHeatmap, spill: f64, blur_bins: usize, seed: u64) -> Result<PolarHeatmap> {
    if !(0.0..=1.0).contains(&spill) {
        return Err(Error::contract(format!("spill must lie in [0, 1], got {spill}")));
    }
    if spill == 0.0 {
        return Ok(base.clone());
    }
    let mut target = vec![false; CELLS];
    for cell in all_cells().filter(|c| base.get(*c) > 0.0) {
        for n in cell.neighborhood(blur_bins, blur_bins) {
            target[n.index()] = true;
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut weights = vec![0.0; CELLS];
    for (w, _) in weights.iter_mut().zip(&target).filter(|(_, t)| **t) {
        *w = (SPILL_LOG_SIGMA * standard_normal(&mut rng)).exp();
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Ok(base.clone());
    }
    let values: Vec<f64> = base
        .cells
        .iter()
        .zip(&weights)
        .map(|(b, w)| (1.0 - spill) * b + spill * w / total)
        .collect();
    PolarHeatmap::from_values(values, base.center)
}

fn standard_normal(rng: &mut SplitMix64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone)]
pub struct MaskedHeatmap {
    pub heatmap: PolarHeatmap,
    /// Every cell clamped to zero; the unmasked heatmap was returned.
    pub saturated: bool,
}

/// `max(h + δ·m, 0)` cellwise, renormalised. `None` when nothing survives.
pub fn mask_values(h: &[f64], m: &[i8], delta: f64) -> Option<Vec<f64>> {
    let raw: Vec<f64> = h
        .iter()
        .zip(m)
        .map(|(&v, &o)| (v + delta * o as f64).max(0.0))
        .collect();
    normalized(&raw)
}

pub fn apply_mask(h: &PolarHeatmap, m: &RadialOccupancyMask, delta: f64) -> Result<MaskedHeatmap> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::contract(format!("delta must be finite and ≥ 0, got {delta}")));
    }
    Ok(match mask_values(&h.cells, m.cells(), delta) {
        Some(cells) => MaskedHeatmap {
            heatmap: PolarHeatmap { cells, center: h.center },
            saturated: false,
        },
        None => MaskedHeatmap {
            heatmap: h.clone(),
            saturated: true,
        },
    })
}

/// Masks `h` (when a mask is given) and extracts up to `k` peaks. A
/// saturated mask yields no waypoints, so a cell with `h ≤ δ` under an
/// occupied mask cell can never be emitted. The flag reports saturation.
pub fn masked_sample(
    h: &PolarHeatmap,
    mask: Option<&RadialOccupancyMask>,
    delta: f64,
    k: usize,
    suppress_h: usize,
    suppress_r: usize,
) -> Result<(Vec<Waypoint>, bool)> {
    match mask {
        None => Ok((nms_sample(h, k, suppress_h, suppress_r)?, false)),
        Some(m) => {
            let masked = apply_mask(h, m, delta)?;
            if masked.saturated {
                if k == 0 {
                    return Err(Error::contract("nms_sample needs k ≥ 1"));
                }
                return Ok((Vec::new(), true));
            }
            Ok((nms_sample(&masked.heatmap, k, suppress_h, suppress_r)?, false))
        }
    }
}

/// Greedy non-maximum suppression. Each pick is the highest remaining
/// positive cell (ties go to the lower heading bin, then the lower range
/// bin); its `(2·suppress_h+1) × (2·suppress_r+1)` neighbourhood is then
/// zeroed.
pub fn nms_sample(h: &PolarHeatmap, k: usize, suppress_h: usize, suppress_r: usize) -> Result<Vec<Waypoint>> {
    if k == 0 {
        return Err(Error::contract("nms_sample needs k ≥ 1"));
    }
    let mut work = h.cells.clone();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut best: Option<usize> = None;
        for (i, &v) in work.iter().enumerate() {
            if v > 0.0 && best.is_none_or(|b| v > work[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        let cell = PolarCell::from_index(i);
        out.push(Waypoint {
            heading_bin: cell.heading_bin,
            range_bin: cell.range_bin,
            position: cell.world_position(&h.center),
            score: h.cells[i],
        });
        for n in cell.neighborhood(suppress_h, suppress_r) {
            work[n.index()] = 0.0;
        }
    }
    Ok(out)
}
