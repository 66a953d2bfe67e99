//! Episode orchestration, metrics, scene suites and reports.

pub mod config;
pub mod episode;
pub mod generate;
pub mod injector;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod trace;

pub use config::{AgentConfig, HeatmapSource, Planner};
pub use episode::{collect_samples, run_episode, EpisodeResult, RoundRecord, Termination};
pub use generate::{generate_scenes, Recipe};
pub use injector::DynamicInjector;
pub use metrics::{compute_metrics, MetricsReport};
pub use report::{compare, evaluate, run_report, CompareReport, RunReport};
pub use scenario::{load_scenes, save_scene_set};
pub use trace::{replay, ActionTrace};
