//! Action traces: the action sequence of an episode, replayable on its
//! scene without the planner.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::episode::EpisodeResult;
use crate::scene::{Action, Pose, Scene};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTrace {
    pub scene_id: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub start: Pose,
    /// Space-separated action mnemonics.
    pub actions: String,
    pub end: Pose,
}

impl ActionTrace {
    pub fn from_episode(r: &EpisodeResult) -> Self {
        Self {
            scene_id: r.scene_id.clone(),
            seed: r.seed,
            config_fingerprint: r.config_fingerprint.clone(),
            start: r.trajectory[0],
            actions: r.actions.iter().map(Action::mnemonic).collect::<Vec<_>>().join(" "),
            end: *r.trajectory.last().unwrap(),
        }
    }

    pub fn parse_actions(&self) -> Result<Vec<Action>> {
        self.actions
            .split_whitespace()
            .map(|m| Action::from_mnemonic(m).ok_or_else(|| Error::parse(None, format!("unknown action `{m}`"))))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub poses: Vec<Pose>,
    pub collisions: usize,
    /// Whether the replayed end pose equals the recorded one bit for bit.
    pub matches: bool,
}

/// Re-executes the trace's actions from the scene's start pose.
pub fn replay(scene: &Scene, trace: &ActionTrace) -> Result<Replay> {
    if trace.scene_id != scene.id() {
        return Err(Error::Config(format!(
            "trace is for scene `{}`, not `{}`",
            trace.scene_id,
            scene.id()
        )));
    }
    let mut pose = scene.start();
    let mut poses = vec![pose];
    let mut collisions = 0;
    for action in trace.parse_actions()? {
        let (next, hit) = scene.step(pose, action)?;
        collisions += hit as usize;
        pose = next;
        poses.push(pose);
    }
    Ok(Replay {
        matches: trace.start == scene.start() && pose == trace.end,
        poses,
        collisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::CollisionKind;
    use crate::harness::{run_episode, AgentConfig};
    use crate::scene::{OccupancyGrid, Point2D};

    #[test]
    fn replay_reproduces_episode() {
        let mut g = OccupancyGrid::new(120, 100, 0.05).unwrap();
        g.add_border(2);
        g.fill_rect(Point2D::new(3.0, 1.5), Point2D::new(3.2, 3.5), None);
        let s = Scene::new("r", g, Pose::new(1.0, 2.5, 0.0), Point2D::new(5.0, 2.5)).unwrap();
        let c = AgentConfig {
            dynamic_p: 0.0,
            ..AgentConfig::safe().with_noise(0.3)
        };
        let r = run_episode(&s, &c, 3).unwrap();
        let trace = ActionTrace::from_episode(&r);
        let back = replay(&s, &trace).unwrap();
        assert!(back.matches);
        assert_eq!(back.poses, r.trajectory);
        assert_eq!(back.collisions, r.count(CollisionKind::Navigation));

        let mut bad = trace.clone();
        bad.actions.push_str(" JUMP");
        assert!(replay(&s, &bad).is_err());
    }
}
