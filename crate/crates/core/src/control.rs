//! Point-to-point leg execution, the Tryout fallback and collision events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::heatmap::Waypoint;
use crate::rng::SplitMix64;
use crate::scene::{heading_difference, Action, Point2D, Pose, Scene, TURN_STEP_DEG};

/// Heading error below which the controller drives instead of turning.
pub const ALIGN_TOLERANCE_DEG: f64 = TURN_STEP_DEG / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    Waypoint,
    Navigation,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    pub step: usize,
    pub position: Point2D,
    pub node: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub arrival_radius: f64,
    /// Consecutive blocked forwards before Tryout (or giving up).
    pub stuck_threshold: usize,
    pub max_steps_per_leg: usize,
    pub tryout_enabled: bool,
    /// Deflections from the bearing to the target, degrees, in trial order.
    pub tryout_headings: Vec<f64>,
    /// Shuffle the deflection order per leg with this seed.
    pub tryout_shuffle_seed: Option<u64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            arrival_radius: 0.25,
            stuck_threshold: 3,
            max_steps_per_leg: 100,
            tryout_enabled: false,
            tryout_headings: vec![30.0, -30.0, 60.0, -60.0, 90.0, -90.0, 150.0, -150.0, 180.0],
            tryout_shuffle_seed: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_radius > 0.0) || self.stuck_threshold == 0 || self.max_steps_per_leg == 0 {
            return Err(Error::Config("controller thresholds must be positive".into()));
        }
        if self.tryout_headings.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("tryout headings must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegOutcome {
    Arrived,
    Blocked,
    Dynamic,
    StepBudget,
}

/// What the planner asks of one leg.
#[derive(Debug, Clone, Copy)]
pub struct LegRequest {
    pub target: Point2D,
    pub node: Option<NodeId>,
    /// Global step index of the first action; used to stamp events.
    pub start_step: usize,
    /// Upper bound on actions from the caller's own budget.
    pub step_allowance: usize,
    /// The injector declared the target non-navigable.
    pub dynamic: bool,
}

impl LegRequest {
    pub fn to(target: Point2D) -> Self {
        Self {
            target,
            node: None,
            start_step: 0,
            step_allowance: usize::MAX,
            dynamic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegResult {
    pub pose: Pose,
    pub actions: Vec<Action>,
    /// Pose after each action, parallel to `actions`.
    pub poses: Vec<Pose>,
    pub events: Vec<CollisionEvent>,
    pub outcome: LegOutcome,
}

struct Leg<'a> {
    scene: &'a Scene,
    request: LegRequest,
    limit: usize,
    pose: Pose,
    actions: Vec<Action>,
    poses: Vec<Pose>,
    events: Vec<CollisionEvent>,
}

impl Leg<'_> {
    fn exhausted(&self) -> bool {
        self.actions.len() >= self.limit
    }

    fn act(&mut self, action: Action) -> Result<bool> {
        let (pose, blocked) = self.scene.step(self.pose, action)?;
        self.pose = pose;
        self.actions.push(action);
        self.poses.push(pose);
        if blocked {
            self.events.push(CollisionEvent {
                kind: CollisionKind::Navigation,
                step: self.request.start_step + self.actions.len(),
                position: pose.position(),
                node: self.request.node,
            });
        }
        Ok(blocked)
    }

    /// Turns toward `heading` until aligned. `false` if the budget ran out.
    fn face(&mut self, heading: f64) -> Result<bool> {
        loop {
            let diff = heading_difference(self.pose.heading(), heading);
            if diff.abs() <= ALIGN_TOLERANCE_DEG {
                return Ok(true);
            }
            if self.exhausted() {
                return Ok(false);
            }
            self.act(if diff > 0.0 { Action::TurnLeft } else { Action::TurnRight })?;
        }
    }

    fn bearing(&self) -> f64 {
        self.pose.position().bearing_to(&self.request.target)
    }
}

/// Drives from `pose` toward `request.target` with rotate-then-move steps.
/// After `stuck_threshold` consecutive blocked forwards the leg either
/// runs Tryout (deflected single forwards, one per remaining deflection)
/// or gives up. Deflections are consumed for the whole leg and replenished
/// only by an ordinary forward that succeeds.
pub fn navigate_leg(scene: &Scene, pose: Pose, request: LegRequest, config: &ControllerConfig) -> Result<LegResult> {
    config.validate()?;
    let mut leg = Leg {
        scene,
        request,
        limit: config.max_steps_per_leg.min(request.step_allowance),
        pose,
        actions: Vec::new(),
        poses: Vec::new(),
        events: Vec::new(),
    };
    if request.dynamic {
        leg.events.push(CollisionEvent {
            kind: CollisionKind::Dynamic,
            step: request.start_step,
            position: pose.position(),
            node: request.node,
        });
        return Ok(finish(leg, LegOutcome::Dynamic));
    }
    let mut deflections = config.tryout_headings.clone();
    if let Some(seed) = config.tryout_shuffle_seed {
        let mut rng = SplitMix64::derive(seed, request.start_step as u64);
        for i in (1..deflections.len()).rev() {
            let j = ((rng.next_f64() * (i + 1) as f64) as usize).min(i);
            deflections.swap(i, j);
        }
    }
    let mut next_deflection = 0;
    let mut blocked_run = 0;
    loop {
        if leg.pose.position().distance(&request.target) < config.arrival_radius {
            return Ok(finish(leg, LegOutcome::Arrived));
        }
        if !leg.face(leg.bearing())? || leg.exhausted() {
            return Ok(finish(leg, LegOutcome::StepBudget));
        }
        if !leg.act(Action::Forward)? {
            blocked_run = 0;
            next_deflection = 0;
            continue;
        }
        blocked_run += 1;
        if blocked_run < config.stuck_threshold {
            continue;
        }
        if !config.tryout_enabled {
            return Ok(finish(leg, LegOutcome::Blocked));
        }
        let mut escaped = false;
        while next_deflection < deflections.len() {
            let heading = leg.bearing() + deflections[next_deflection];
            next_deflection += 1;
            if !leg.face(heading)? || leg.exhausted() {
                return Ok(finish(leg, LegOutcome::StepBudget));
            }
            if !leg.act(Action::Forward)? {
                escaped = true;
                break;
            }
        }
        if !escaped {
            return Ok(finish(leg, LegOutcome::Blocked));
        }
        blocked_run = 0;
    }
}

fn finish(leg: Leg<'_>, outcome: LegOutcome) -> LegResult {
    LegResult {
        pose: leg.pose,
        actions: leg.actions,
        poses: leg.poses,
        events: leg.events,
        outcome,
    }
}

/// A waypoint collides when the agent's disc at its position overlaps an
/// obstacle or leaves the map.
pub fn classify_waypoint(scene: &Scene, w: &Waypoint, step: usize, node: Option<NodeId>) -> Option<CollisionEvent> {
    (!scene.agent_fits(w.position)).then_some(CollisionEvent {
        kind: CollisionKind::Waypoint,
        step,
        position: w.position,
        node,
    })
}
