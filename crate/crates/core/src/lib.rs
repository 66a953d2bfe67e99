//! Deterministic 2D navigation simulator for collision-aware waypoint
//! navigation.
//!
//! The crate is organised bottom-up:
//!
//! - [`scene`]: occupancy raster, agent kinematics, ray casting and the
//!   geodesic distance field.
//! - [`lidar`]: simulated 2D/3D scans and the polar occupancy mask.
//! - [`heatmap`]: waypoint heatmaps, mask application and NMS sampling.
//! - [`graph`]: the topological navigation graph, node scoring, greedy
//!   selection with re-selection, and the weighted two-target loss.
//! - [`control`]: point-to-point leg execution and collision classification.
//! - [`jps`]: jump point search on an egocentric grid (baseline navigator).
//! - [`harness`]: episodes, metrics, scenario generation and IO, reports.

pub mod control;
pub mod error;
pub mod graph;
pub mod harness;
pub mod heatmap;
pub mod jps;
pub mod lidar;
pub mod polar;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
pub use scene::{Action, Point2D, Pose, Scene};
