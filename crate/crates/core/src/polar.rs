//! Geometry of the agent-centred polar grid shared by occupancy masks and
//! waypoint heatmaps: 120 heading bins of 3° by 12 range bins of 0.25 m.
//!
//! Heading bin 0 starts at the agent heading and bins advance
//! counterclockwise. Cells are stored heading-major: `h * RANGE_BINS + r`.

use crate::scene::{Point2D, Pose};

pub const HEADING_BINS: usize = 120;
pub const RANGE_BINS: usize = 12;
pub const CELLS: usize = HEADING_BINS * RANGE_BINS;
pub const HEADING_BIN_DEG: f64 = 3.0;
pub const RANGE_BIN_M: f64 = 0.25;
pub const MAX_RANGE_M: f64 = RANGE_BINS as f64 * RANGE_BIN_M;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolarCell {
    pub heading_bin: usize,
    pub range_bin: usize,
}

impl PolarCell {
    pub fn new(heading_bin: usize, range_bin: usize) -> Self {
        debug_assert!(heading_bin < HEADING_BINS && range_bin < RANGE_BINS);
        Self { heading_bin, range_bin }
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i / RANGE_BINS, i % RANGE_BINS)
    }

    pub fn index(&self) -> usize {
        self.heading_bin * RANGE_BINS + self.range_bin
    }

    /// Agent-relative angle of the bin centre in degrees.
    pub fn center_angle(&self) -> f64 {
        self.heading_bin as f64 * HEADING_BIN_DEG + HEADING_BIN_DEG / 2.0
    }

    pub fn center_range(&self) -> f64 {
        self.range_bin as f64 * RANGE_BIN_M + RANGE_BIN_M / 2.0
    }

    /// World position of the bin centre for a grid centred on `pose`.
    pub fn world_position(&self, pose: &Pose) -> Point2D {
        pose.polar_to_world(self.center_angle(), self.center_range())
    }

    /// Cells within `dh` heading bins (wrapping) and `dr` range bins
    /// (clamped) of `self`, including `self`.
    pub fn neighborhood(&self, dh: usize, dr: usize) -> impl Iterator<Item = PolarCell> {
        let dh = dh.min(HEADING_BINS / 2);
        let h0 = self.heading_bin;
        let r_lo = self.range_bin.saturating_sub(dr);
        let r_hi = (self.range_bin + dr).min(RANGE_BINS - 1);
        // A full wrap would visit some headings twice; dedupe by span.
        let span = (2 * dh + 1).min(HEADING_BINS);
        (0..span).flat_map(move |k| {
            let h = (h0 + HEADING_BINS - dh + k) % HEADING_BINS;
            (r_lo..=r_hi).map(move |r| PolarCell::new(h, r))
        })
    }
}

pub fn all_cells() -> impl Iterator<Item = PolarCell> {
    (0..CELLS).map(PolarCell::from_index)
}
