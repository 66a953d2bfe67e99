use serde::{Deserialize, Serialize};

use crate::control::CollisionKind;
use crate::error::{Error, Result};
use crate::harness::episode::{EpisodeResult, Termination};
use crate::polar::CELLS;

/// Aggregate navigation and collision metrics. Rates lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    pub tl: f64,
    pub ne: f64,
    pub ne_euclidean: f64,
    pub osr: f64,
    pub sr: f64,
    pub spl: f64,
    pub wc: f64,
    pub nc: f64,
    /// Success rate of the injector-enabled pass, when one was run.
    pub dc_sr: Option<f64>,
    pub p_o: f64,
}

/// Flat per-episode row for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scene_id: String,
    pub success: bool,
    pub oracle_hit: bool,
    pub termination: Termination,
    pub steps: usize,
    pub rounds: usize,
    pub tl: f64,
    pub ne: f64,
    pub ne_euclidean: f64,
    pub shortest: f64,
    pub spl: f64,
    pub nc: f64,
    pub wc: f64,
    pub p_o: f64,
    pub navigation_collisions: usize,
    pub waypoint_collisions: usize,
    pub dynamic_collisions: usize,
    /// Outcome of the same scene in the injector-enabled pass.
    pub dynamic_success: Option<bool>,
}

impl EpisodeRow {
    pub fn new(r: &EpisodeResult, dynamic: Option<&EpisodeResult>) -> Self {
        Self {
            scene_id: r.scene_id.clone(),
            success: r.success,
            oracle_hit: r.oracle_hit,
            termination: r.termination,
            steps: r.steps(),
            rounds: r.rounds.len(),
            tl: r.trajectory_length,
            ne: r.navigation_error,
            ne_euclidean: r.navigation_error_euclidean,
            shortest: r.shortest_path,
            spl: spl(r),
            nc: nc(r),
            wc: wc(r),
            p_o: p_o(r),
            navigation_collisions: r.count(CollisionKind::Navigation),
            waypoint_collisions: r.count(CollisionKind::Waypoint),
            dynamic_collisions: r.count(CollisionKind::Dynamic),
            dynamic_success: dynamic.map(|d| d.success),
        }
    }
}

/// `success · ℓ / max(TL, ℓ)` with `ℓ` the geodesic start–goal distance.
pub fn spl(r: &EpisodeResult) -> f64 {
    if !r.success {
        return 0.0;
    }
    let denom = r.trajectory_length.max(r.shortest_path);
    if denom == 0.0 {
        1.0
    } else {
        r.shortest_path / denom
    }
}

/// Navigation collisions per action.
pub fn nc(r: &EpisodeResult) -> f64 {
    let t = r.steps();
    if t == 0 {
        0.0
    } else {
        r.count(CollisionKind::Navigation) as f64 / t as f64
    }
}

/// Fraction of emitted waypoints that collide at one planning round.
pub fn wc_term(collisions: usize, emitted: usize) -> f64 {
    if emitted == 0 {
        0.0
    } else {
        collisions as f64 / emitted as f64
    }
}

/// Mean waypoint-collision fraction over the planning rounds that emitted
/// waypoints.
pub fn wc(r: &EpisodeResult) -> f64 {
    let terms: Vec<f64> = r
        .rounds
        .iter()
        .filter(|round| round.waypoints > 0)
        .map(|round| wc_term(round.waypoint_collisions, round.waypoints))
        .collect();
    if terms.is_empty() {
        0.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

/// Mean occupied fraction of the planner's masks over the episode.
pub fn p_o(r: &EpisodeResult) -> f64 {
    mean_fraction(r.rounds.iter().map(|round| round.mask_occupied))
}

/// Same as [`p_o`] for the 2D component mask, when it was recorded.
pub fn p_o_2d(r: &EpisodeResult) -> Option<f64> {
    let counts: Option<Vec<usize>> = r.rounds.iter().map(|round| round.mask_2d_occupied).collect();
    counts.map(|c| mean_fraction(c.into_iter()))
}

fn mean_fraction(counts: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = counts.fold((0.0, 0usize), |(s, n), c| (s + c as f64 / CELLS as f64, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn rate(flags: impl Iterator<Item = bool>) -> f64 {
    mean(flags.map(|b| if b { 1.0 } else { 0.0 }))
}

/// Aggregates a clean pass, plus the injector-enabled pass for D-C SR when
/// `dynamic` is nonempty.
pub fn compute_metrics(results: &[EpisodeResult], dynamic: &[EpisodeResult]) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(Error::contract("compute_metrics needs at least one episode"));
    }
    Ok(MetricsReport {
        episodes: results.len(),
        tl: mean(results.iter().map(|r| r.trajectory_length)),
        ne: mean(results.iter().map(|r| r.navigation_error)),
        ne_euclidean: mean(results.iter().map(|r| r.navigation_error_euclidean)),
        osr: rate(results.iter().map(|r| r.oracle_hit || r.success)),
        sr: rate(results.iter().map(|r| r.success)),
        spl: mean(results.iter().map(spl)),
        wc: mean(results.iter().map(wc)),
        nc: mean(results.iter().map(nc)),
        dc_sr: (!dynamic.is_empty()).then(|| rate(dynamic.iter().map(|r| r.success))),
        p_o: mean(results.iter().map(p_o)),
    })
}
