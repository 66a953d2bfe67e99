use serde::{Deserialize, Serialize};

use crate::control::ControllerConfig;
use crate::error::{Error, Result};
use crate::graph::{LinearScorer, DEFAULT_MERGE_RADIUS};
use crate::heatmap::{PolarHeatmap, DEFAULT_BLUR_BINS, DEFAULT_DELTA, DEFAULT_K, DEFAULT_SUPPRESS_HEADING, DEFAULT_SUPPRESS_RANGE};
use crate::jps::DEFAULT_CELL_SIZE;
use crate::lidar::{LidarConfig, LidarMode};

pub const DEFAULT_STEP_BUDGET: usize = 500;
pub const DEFAULT_DYNAMIC_P: f64 = 0.1;

/// How the agent turns its graph into a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    /// Geodesic reference scorer.
    Oracle,
    /// Learned linear scorer.
    Linear(LinearScorer),
    /// Oracle scorer for waypoint choice, but legs are driven along jump
    /// point search paths planned on the egocentric grid.
    Jps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapSource {
    Oracle,
    Noisy { spill: f64, blur_bins: usize },
    /// The same agent-relative heatmap at every round, e.g. loaded from a
    /// file. Only the label is serialized.
    Fixed {
        label: String,
        #[serde(skip)]
        heatmap: PolarHeatmap,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub mask: bool,
    pub reselect: bool,
    pub planner: Planner,
    pub heatmap: HeatmapSource,
    pub delta: f64,
    pub k: usize,
    pub suppress_heading: usize,
    pub suppress_range: usize,
    pub lidar: LidarConfig,
    /// Probability that a ghost selection is declared non-navigable. Only
    /// applied in the dynamic pass.
    pub dynamic_p: f64,
    pub step_budget: usize,
    pub merge_radius: f64,
    pub controller: ControllerConfig,
    pub jps_cell_size: f64,
    pub jps_projection_noise: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::safe()
    }
}

impl AgentConfig {
    /// Mask and re-selection on.
    pub fn safe() -> Self {
        Self {
            mask: true,
            reselect: true,
            planner: Planner::Oracle,
            heatmap: HeatmapSource::Oracle,
            delta: DEFAULT_DELTA,
            k: DEFAULT_K,
            suppress_heading: DEFAULT_SUPPRESS_HEADING,
            suppress_range: DEFAULT_SUPPRESS_RANGE,
            lidar: LidarConfig::default(),
            dynamic_p: DEFAULT_DYNAMIC_P,
            step_budget: DEFAULT_STEP_BUDGET,
            merge_radius: DEFAULT_MERGE_RADIUS,
            controller: ControllerConfig::default(),
            jps_cell_size: DEFAULT_CELL_SIZE,
            jps_projection_noise: false,
        }
    }

    /// Mask and re-selection off.
    pub fn baseline() -> Self {
        Self {
            mask: false,
            reselect: false,
            ..Self::safe()
        }
    }

    pub fn jps() -> Self {
        Self {
            planner: Planner::Jps,
            ..Self::baseline()
        }
    }

    pub fn with_noise(mut self, spill: f64) -> Self {
        self.heatmap = if spill > 0.0 {
            HeatmapSource::Noisy {
                spill,
                blur_bins: DEFAULT_BLUR_BINS,
            }
        } else {
            HeatmapSource::Oracle
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.lidar.validate()?;
        self.controller.validate()?;
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be finite and ≥ 0, got {}", self.delta)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dynamic_p) {
            return Err(Error::Config(format!("dynamic_p must lie in [0, 1], got {}", self.dynamic_p)));
        }
        if let HeatmapSource::Noisy { spill, .. } = self.heatmap {
            if !(0.0..=1.0).contains(&spill) {
                return Err(Error::Config(format!("noise spill must lie in [0, 1], got {spill}")));
            }
        }
        if self.step_budget == 0 || !(self.merge_radius > 0.0) || !(self.jps_cell_size > 0.0) {
            return Err(Error::Config("step budget, merge radius and cell size must be positive".into()));
        }
        Ok(())
    }

    /// Compact, stable description used to tag episodes and report rows.
    pub fn fingerprint(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        let planner = match &self.planner {
            Planner::Oracle => "oracle".to_string(),
            Planner::Linear(s) => format!(
                "linear[{}]",
                s.weights.iter().map(|w| format!("{w:e}")).collect::<Vec<_>>().join(",")
            ),
            Planner::Jps => "jps".to_string(),
        };
        let heatmap = match &self.heatmap {
            HeatmapSource::Oracle => "oracle".to_string(),
            HeatmapSource::Noisy { spill, blur_bins } => format!("noisy({spill},{blur_bins})"),
            HeatmapSource::Fixed { label, .. } => format!("fixed({label})"),
        };
        let lidar = match self.lidar.mode {
            LidarMode::TwoD => format!("2d@{}", self.lidar.sensor_height),
            LidarMode::ThreeD => format!("3d@{}", self.lidar.sensor_height_3d),
            LidarMode::Fused => format!("fused@{}/{}", self.lidar.sensor_height, self.lidar.sensor_height_3d),
        };
        format!(
            "planner={planner} mask={} reselect={} tryout={} heatmap={heatmap} delta={} k={} lidar={lidar} budget={}",
            on(self.mask),
            on(self.reselect),
            on(self.controller.tryout_enabled),
            self.delta,
            self.k,
            self.step_budget,
        )
    }
}
