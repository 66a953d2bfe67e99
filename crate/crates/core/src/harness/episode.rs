use serde::{Deserialize, Serialize};

use crate::control::{classify_waypoint, navigate_leg, CollisionEvent, CollisionKind, LegOutcome, LegRequest, LegResult};
use crate::error::Result;
use crate::graph::{reselect, score_oracle, select_node, NavGraph, NodeId, ScoreVector, TrainingSample, STOP, SUCCESS_RADIUS_M};
use crate::harness::config::{AgentConfig, HeatmapSource, Planner};
use crate::harness::injector::DynamicInjector;
use crate::heatmap::{masked_sample, noisy_heatmap, oracle_heatmap};
use crate::jps::{plan, project_to_grid};
use crate::lidar::{observe, scan2d};
use crate::rng::SplitMix64;
use crate::scene::{Action, Point2D, Pose, Scene};
use rand_core::RngCore;

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    StepBudget,
    /// A leg failed and re-selection was off.
    Blocked,
    /// The selected waypoint was declared non-navigable and re-selection
    /// was off.
    Dynamic,
}

/// One observe–sample–select cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Global action count when the round started.
    pub step: usize,
    pub pose: Pose,
    pub waypoints: usize,
    pub waypoint_collisions: usize,
    pub mask_occupied: usize,
    /// Occupied cells of the 2D component mask when one was built.
    pub mask_2d_occupied: Option<usize>,
    pub heatmap_degenerate: bool,
    pub mask_saturated: bool,
    /// Every node chosen during the round, re-selections included.
    pub selections: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scene_id: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub success: bool,
    pub termination: Termination,
    pub oracle_hit: bool,
    /// Start pose followed by the pose after every action.
    pub trajectory: Vec<Pose>,
    pub actions: Vec<Action>,
    pub trajectory_length: f64,
    /// Geodesic distance from the final position to the goal.
    pub navigation_error: f64,
    pub navigation_error_euclidean: f64,
    /// Geodesic distance from start to goal.
    pub shortest_path: f64,
    pub events: Vec<CollisionEvent>,
    pub rounds: Vec<RoundRecord>,
}

impl EpisodeResult {
    /// Number of actions taken, `T`.
    pub fn steps(&self) -> usize {
        self.trajectory.len().saturating_sub(1)
    }

    pub fn count(&self, kind: CollisionKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Per-episode random stream key, derived from the run seed and scene id so
/// it does not depend on the order in which scenes are evaluated.
pub fn episode_key(seed: u64, scene_id: &str) -> u64 {
    // FNV-1a over the id bytes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    SplitMix64::derive(seed, h).next_u64()
}

const SALT_INJECTOR: u64 = 1;
const SALT_LIDAR: u64 = 2;
const SALT_HEATMAP: u64 = 1 << 20;
const SALT_PROJECTION: u64 = 1 << 40;

/// Look-ahead along a JPS path when choosing the next control target.
const JPS_LOOKAHEAD_CELLS: usize = 3;

enum Travel {
    Arrived,
    Failed,
    OutOfBudget,
}

struct Run<'a> {
    scene: &'a Scene,
    config: &'a AgentConfig,
    key: u64,
    pose: Pose,
    trajectory: Vec<Pose>,
    actions: Vec<Action>,
    events: Vec<CollisionEvent>,
    lidar_rng: SplitMix64,
    jps_plans: u64,
}

impl Run<'_> {
    fn remaining(&self) -> usize {
        self.config.step_budget.saturating_sub(self.actions.len())
    }

    fn absorb(&mut self, leg: LegResult) -> LegOutcome {
        self.trajectory.extend_from_slice(&leg.poses);
        self.actions.extend_from_slice(&leg.actions);
        self.events.extend_from_slice(&leg.events);
        self.pose = leg.pose;
        leg.outcome
    }

    fn request(&self, target: Point2D, node: NodeId) -> LegRequest {
        LegRequest {
            target,
            node: Some(node),
            start_step: self.actions.len(),
            step_allowance: self.remaining(),
            dynamic: false,
        }
    }

    /// Follows the graph route to `node` hop by hop.
    fn travel(&mut self, graph: &NavGraph, node: NodeId) -> Result<Travel> {
        let route = graph.route_to(node).unwrap_or_else(|| vec![graph.current(), node]);
        for &hop in &route[1..] {
            let target = graph.node(hop).position;
            let outcome = match self.config.planner {
                Planner::Jps => self.jps_leg(target, node)?,
                _ => {
                    let leg = navigate_leg(self.scene, self.pose, self.request(target, node), &self.config.controller)?;
                    self.absorb(leg)
                }
            };
            match outcome {
                LegOutcome::Arrived => {}
                _ if self.remaining() == 0 => return Ok(Travel::OutOfBudget),
                _ => return Ok(Travel::Failed),
            }
        }
        Ok(Travel::Arrived)
    }

    /// Drives toward `target` by replanning a JPS path on a fresh
    /// egocentric grid before every short control leg.
    fn jps_leg(&mut self, target: Point2D, node: NodeId) -> Result<LegOutcome> {
        let controller = &self.config.controller;
        let start = self.actions.len();
        loop {
            if self.pose.position().distance(&target) < controller.arrival_radius {
                return Ok(LegOutcome::Arrived);
            }
            let used = self.actions.len() - start;
            if used >= controller.max_steps_per_leg || self.remaining() == 0 {
                return Ok(LegOutcome::StepBudget);
            }
            let scan = scan2d(self.scene, &self.pose, &self.config.lidar, &mut self.lidar_rng);
            let noise = self
                .config
                .jps_projection_noise
                .then(|| SplitMix64::derive(self.key, SALT_PROJECTION + self.jps_plans).next_u64());
            self.jps_plans += 1;
            let mut grid = project_to_grid(&scan, self.config.lidar.max_range, &self.pose, self.config.jps_cell_size, noise);
            let center = grid.center();
            grid.set_blocked(center, false);
            let Some(goal) = grid.cell_of(target) else {
                return Ok(LegOutcome::Blocked);
            };
            let Ok(path) = plan(&grid, center, goal) else {
                return Ok(LegOutcome::Blocked);
            };
            let ahead = JPS_LOOKAHEAD_CELLS.min(path.cells.len() - 1);
            let sub_target = if ahead == path.cells.len() - 1 { target } else { grid.world_of(path.cells[ahead]) };
            let mut request = self.request(sub_target, node);
            request.step_allowance = request.step_allowance.min(controller.max_steps_per_leg - used);
            let leg = navigate_leg(self.scene, self.pose, request, controller)?;
            let moved = leg.actions.len();
            match self.absorb(leg) {
                LegOutcome::Blocked => return Ok(LegOutcome::Blocked),
                _ if moved == 0 => return Ok(LegOutcome::Blocked),
                _ => {}
            }
        }
    }
}

/// Runs one episode. Injection uses `config.dynamic_p`; pass a config with
/// `dynamic_p = 0` for a clean run.
pub fn run_episode(scene: &Scene, config: &AgentConfig, seed: u64) -> Result<EpisodeResult> {
    run_inner(scene, config, seed, None)
}

/// Runs an episode and records a supervision sample (oracle best and
/// second-best node) at every planning round.
pub fn collect_samples(scene: &Scene, config: &AgentConfig, seed: u64) -> Result<(EpisodeResult, Vec<TrainingSample>)> {
    let mut samples = Vec::new();
    let result = run_inner(scene, config, seed, Some(&mut samples))?;
    Ok((result, samples))
}

fn run_inner(
    scene: &Scene,
    config: &AgentConfig,
    seed: u64,
    mut samples: Option<&mut Vec<TrainingSample>>,
) -> Result<EpisodeResult> {
    config.validate()?;
    let key = episode_key(seed, scene.id());
    let mut injector = DynamicInjector::new(config.dynamic_p, SplitMix64::derive(key, SALT_INJECTOR).next_u64());
    let mut run = Run {
        scene,
        config,
        key,
        pose: scene.start(),
        trajectory: vec![scene.start()],
        actions: Vec::new(),
        events: Vec::new(),
        lidar_rng: SplitMix64::derive(key, SALT_LIDAR),
        jps_plans: 0,
    };
    let mut graph = NavGraph::with_merge_radius(config.merge_radius);
    let mut rounds: Vec<RoundRecord> = Vec::new();

    let termination = 'episode: loop {
        // Rounds that end without moving still count, so an agent that keeps
        // selecting where it already stands cannot spin forever.
        if run.remaining() == 0 || rounds.len() >= config.step_budget {
            break Termination::StepBudget;
        }
        let pose = run.pose;
        let step = run.actions.len();
        let obs = observe(scene, &pose, &config.lidar, &mut run.lidar_rng)?;
        let oracle = oracle_heatmap(scene, &pose);
        let heatmap = match &config.heatmap {
            HeatmapSource::Oracle => oracle.heatmap,
            HeatmapSource::Noisy { spill, blur_bins } => {
                let s = SplitMix64::derive(key, SALT_HEATMAP + rounds.len() as u64).next_u64();
                noisy_heatmap(&oracle.heatmap, *spill, *blur_bins, s)?
            }
            HeatmapSource::Fixed { heatmap, .. } => heatmap.recentered(pose),
        };
        let (waypoints, saturated) = masked_sample(
            &heatmap,
            config.mask.then_some(&obs.mask),
            config.delta,
            config.k,
            config.suppress_heading,
            config.suppress_range,
        )?;
        let collisions: Vec<CollisionEvent> = waypoints
            .iter()
            .filter_map(|w| classify_waypoint(scene, w, step, None))
            .collect();
        graph.update(&pose, &waypoints, step);
        if let Some(sink) = samples.as_deref_mut() {
            sink.extend(TrainingSample::from_graph(&graph, scene));
        }
        let mut scores: ScoreVector = match &config.planner {
            Planner::Oracle | Planner::Jps => score_oracle(&graph, scene),
            Planner::Linear(scorer) => scorer.score_graph(&graph, scene)?,
        };
        rounds.push(RoundRecord {
            step,
            pose,
            waypoints: waypoints.len(),
            waypoint_collisions: collisions.len(),
            mask_occupied: obs.mask.occupied_count(),
            mask_2d_occupied: obs.mask_2d.as_ref().map(|m| m.occupied_count()),
            heatmap_degenerate: oracle.degenerate,
            mask_saturated: saturated,
            selections: Vec::new(),
        });
        run.events.extend(collisions);

        let mut selected = select_node(&scores);
        loop {
            rounds.last_mut().unwrap().selections.push(selected);
            if selected == STOP {
                break 'episode Termination::Stopped;
            }
            if injector.inject(selected) {
                let mut request = run.request(graph.node(selected).position, selected);
                request.dynamic = true;
                run.absorb(navigate_leg(scene, run.pose, request, &config.controller)?);
                graph.mark_failed(selected);
                if !config.reselect {
                    break 'episode Termination::Dynamic;
                }
                selected = reselect(&mut graph, &mut scores, selected);
                continue;
            }
            match run.travel(&graph, selected)? {
                Travel::Arrived => break,
                Travel::OutOfBudget => break 'episode Termination::StepBudget,
                Travel::Failed => {
                    graph.mark_failed(selected);
                    if !config.reselect {
                        break 'episode Termination::Blocked;
                    }
                    // Anchor the blocked pose in the graph so the next route
                    // starts where the agent actually is.
                    graph.update(&run.pose, &[], run.actions.len());
                    selected = reselect(&mut graph, &mut scores, selected);
                }
            }
        }
    };

    let final_pos = run.pose.position();
    let trajectory_length = run
        .trajectory
        .windows(2)
        .map(|w| w[0].position().distance(&w[1].position()))
        .sum();
    let navigation_error = scene.geodesic(final_pos);
    let oracle_hit = run
        .trajectory
        .iter()
        .any(|p| scene.geodesic(p.position()) <= SUCCESS_RADIUS_M);
    Ok(EpisodeResult {
        scene_id: scene.id().to_string(),
        seed,
        config_fingerprint: config.fingerprint(),
        success: termination == Termination::Stopped && navigation_error <= SUCCESS_RADIUS_M,
        termination,
        oracle_hit,
        trajectory: run.trajectory,
        actions: run.actions,
        trajectory_length,
        navigation_error,
        navigation_error_euclidean: final_pos.distance(&scene.goal()),
        shortest_path: scene.geodesic(scene.start().position()),
        events: run.events,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::PolarHeatmap;
    use crate::polar::{PolarCell, CELLS};
    use crate::scene::OccupancyGrid;

    fn room(w: f64, h: f64) -> OccupancyGrid {
        let mut g = OccupancyGrid::new((w / 0.05) as usize, (h / 0.05) as usize, 0.05).unwrap();
        g.add_border(2);
        g
    }

    fn clean(mut c: AgentConfig) -> AgentConfig {
        c.dynamic_p = 0.0;
        c
    }

    #[test]
    fn trivial_goal_ahead() {
        let s = Scene::new("trivial", room(6.0, 4.0), Pose::new(1.5, 2.0, 0.0), Point2D::new(3.5, 2.0)).unwrap();
        let r = run_episode(&s, &clean(AgentConfig::safe()), 0).unwrap();
        assert!(r.success, "{:?}", r.termination);
        assert!(r.navigation_error <= 0.5, "{}", r.navigation_error);
        assert!(r.events.is_empty());
        assert_eq!(r.trajectory.len(), r.actions.len() + 1);
    }

    /// U-shaped pocket opening toward the start, goal up and to the right.
    fn trap() -> Scene {
        let mut g = room(7.0, 7.0);
        g.fill_rect(Point2D::new(3.5, 2.2), Point2D::new(3.6, 3.8), None);
        g.fill_rect(Point2D::new(2.6, 2.2), Point2D::new(3.6, 2.3), None);
        g.fill_rect(Point2D::new(2.6, 3.7), Point2D::new(3.6, 3.8), None);
        Scene::new("trap", g, Pose::new(1.5, 3.0, 0.0), Point2D::new(5.0, 4.5)).unwrap()
    }

    /// Most mass straight ahead beyond the pocket wall, the rest up-left.
    fn lure() -> HeatmapSource {
        let mut v = vec![0.0; CELLS];
        v[PolarCell::new(0, 9).index()] = 0.7;
        v[PolarCell::new(20, 11).index()] = 0.3;
        HeatmapSource::Fixed {
            label: "lure".into(),
            heatmap: PolarHeatmap::from_values(v, Pose::new(0.0, 0.0, 0.0)).unwrap(),
        }
    }

    fn trap_config(reselect: bool) -> AgentConfig {
        AgentConfig {
            heatmap: lure(),
            k: 2,
            reselect,
            mask: false,
            ..clean(AgentConfig::safe())
        }
    }

    #[test]
    fn trap_without_reselect_is_blocked() {
        let r = run_episode(&trap(), &trap_config(false), 0).unwrap();
        assert_eq!(r.termination, Termination::Blocked);
        assert!(!r.success);
        assert!(r.count(CollisionKind::Navigation) > 0);
    }

    #[test]
    fn trap_with_reselect_takes_second_choice() {
        let r = run_episode(&trap(), &trap_config(true), 0).unwrap();
        assert!(r.success, "{:?} ne {}", r.termination, r.navigation_error);
        assert!(r.count(CollisionKind::Navigation) > 0);
        assert!(r.rounds[0].selections.len() >= 2, "{:?}", r.rounds[0].selections);
    }

    #[test]
    fn injection_without_reselect_ends_episode() {
        let c = AgentConfig {
            dynamic_p: 1.0,
            reselect: false,
            ..AgentConfig::safe()
        };
        let s = Scene::new("d", room(6.0, 4.0), Pose::new(1.5, 2.0, 0.0), Point2D::new(5.0, 2.0)).unwrap();
        let r = run_episode(&s, &c, 0).unwrap();
        assert_eq!(r.termination, Termination::Dynamic);
        assert_eq!(r.count(CollisionKind::Dynamic), 1);
        assert!(r.actions.is_empty());
    }

    #[test]
    fn episodes_are_reproducible() {
        let c = AgentConfig::safe().with_noise(0.3);
        let a = run_episode(&trap(), &c, 9).unwrap();
        let b = run_episode(&trap(), &c, 9).unwrap();
        assert_eq!(a, b);
    }
}
