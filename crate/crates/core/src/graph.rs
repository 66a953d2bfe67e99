//! Topological navigation graph, node scoring, greedy selection with
//! re-selection, and the weighted two-target training loss.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::Waypoint;
use crate::rng::SplitMix64;
use crate::scene::{heading_difference, Point2D, Pose, Scene};

pub type NodeId = usize;

pub const STOP: NodeId = 0;
pub const DEFAULT_MERGE_RADIUS: f64 = 0.5;
/// Geodesic distance within which the agent counts as having arrived.
pub const SUCCESS_RADIUS_M: f64 = 3.0;
/// Inside this radius the oracle always stops.
pub const STOP_CERTAIN_M: f64 = 0.5;
/// Progress a ghost must promise before the oracle keeps walking instead of
/// stopping inside the success radius.
pub const STOP_MIN_PROGRESS_M: f64 = 0.25;
/// Stand-in for unreachable nodes in the finite feature vector.
pub const GEODESIC_FEATURE_CAP: f64 = 100.0;
pub const FEATURES: usize = 5;
pub const DEFAULT_LAMBDA1: f64 = 0.8;
pub const DEFAULT_LAMBDA2: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Stop,
    Visited,
    Current,
    Ghost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Point2D,
    pub last_visit_step: usize,
    pub failed: bool,
}

/// Episode-local graph of visited, current and ghost nodes plus the stop
/// node. Edge weights are Euclidean distances between node positions and are
/// derived on demand, so moving a ghost keeps its edges consistent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavGraph {
    nodes: Vec<NavNode>,
    edges: BTreeSet<(NodeId, NodeId)>,
    current: NodeId,
    heading: f64,
    step: usize,
    merge_radius: f64,
}

impl Default for NavGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl NavGraph {
    pub fn new() -> Self {
        Self::with_merge_radius(DEFAULT_MERGE_RADIUS)
    }

    pub fn with_merge_radius(merge_radius: f64) -> Self {
        let stop = NavNode {
            id: STOP,
            kind: NodeKind::Stop,
            position: Point2D::new(0.0, 0.0),
            last_visit_step: 0,
            failed: false,
        };
        Self {
            nodes: vec![stop],
            edges: BTreeSet::new(),
            current: STOP,
            heading: 0.0,
            step: 0,
            merge_radius,
        }
    }

    pub fn nodes(&self) -> &[NavNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NavNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Id of the Current node; `STOP` before the first update.
    pub fn current(&self) -> NodeId {
        self.current
    }

    pub fn current_position(&self) -> Point2D {
        self.nodes[self.current].position
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn ghosts(&self) -> impl Iterator<Item = &NavNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Ghost)
    }

    /// Metric edges as `(i, j, meters)` with `i < j`; stop links excluded.
    pub fn metric_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|&(i, j)| (i, j, self.distance(i, j)))
    }

    /// Edge weight between two nodes. Stop links are never travelled and
    /// carry infinite weight.
    pub fn edge_weight(&self, i: NodeId, j: NodeId) -> Option<f64> {
        if i == j || i >= self.len() || j >= self.len() {
            return None;
        }
        if i == STOP || j == STOP {
            return Some(f64::INFINITY);
        }
        self.edges.contains(&key(i, j)).then(|| self.distance(i, j))
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        if id == STOP {
            return (1..self.len()).collect();
        }
        let mut out = vec![STOP];
        out.extend(self.edges.iter().filter_map(|&(i, j)| match (i == id, j == id) {
            (true, _) => Some(j),
            (_, true) => Some(i),
            _ => None,
        }));
        out
    }

    fn distance(&self, i: NodeId, j: NodeId) -> f64 {
        // Nodes never coincide after merging, but ghost updates can bring
        // them arbitrarily close; keep weights strictly positive.
        self.nodes[i].position.distance(&self.nodes[j].position).max(1e-9)
    }

    fn link(&mut self, i: NodeId, j: NodeId) {
        if i != j && i != STOP && j != STOP {
            self.edges.insert(key(i, j));
        }
    }

    fn nearest(&self, p: Point2D, pred: impl Fn(&NavNode) -> bool) -> Option<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Stop && pred(n))
            .map(|n| (n.id, n.position.distance(&p)))
            .filter(|(_, d)| *d <= self.merge_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
    }

    fn push(&mut self, kind: NodeKind, position: Point2D, step: usize) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(NavNode {
            id,
            kind,
            position,
            last_visit_step: step,
            failed: false,
        });
        id
    }

    /// Folds a new observation into the graph: the pose becomes (or merges
    /// into) the Current node and each waypoint merges into a nearby ghost or
    /// spawns a new one linked to the Current node. Waypoints that land on a
    /// visited place are dropped.
    pub fn update(&mut self, pose: &Pose, waypoints: &[Waypoint], step: usize) {
        let here = pose.position();
        let previous = self.current;
        let current = match self.nearest(here, |_| true) {
            Some(id) => {
                if self.nodes[id].kind == NodeKind::Ghost {
                    self.nodes[id].position = here;
                }
                id
            }
            None => self.push(NodeKind::Current, here, step),
        };
        if previous != STOP && previous != current {
            self.nodes[previous].kind = NodeKind::Visited;
            self.link(previous, current);
        }
        let node = &mut self.nodes[current];
        node.kind = NodeKind::Current;
        node.last_visit_step = step;
        self.current = current;
        self.heading = pose.heading();
        self.step = step;

        for w in waypoints {
            let p = w.position;
            if self.nearest(p, |n| n.kind != NodeKind::Ghost).is_some() {
                continue;
            }
            if let Some(g) = self.nearest(p, |n| n.kind == NodeKind::Ghost) {
                self.nodes[g].position = p;
                self.link(current, g);
            } else {
                let g = self.push(NodeKind::Ghost, p, step);
                self.link(current, g);
            }
        }
    }

    pub fn mark_failed(&mut self, id: NodeId) {
        if id != STOP {
            self.nodes[id].failed = true;
        }
    }

    /// Shortest route from the Current node to `target` over metric edges,
    /// passing only through visited places. Includes both endpoints.
    pub fn route_to(&self, target: NodeId) -> Option<Vec<NodeId>> {
        if target == STOP || target >= self.len() || self.current == STOP {
            return None;
        }
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[self.current] = 0.0;
        loop {
            let u = (1..n)
                .filter(|&i| !done[i] && dist[i].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let Some(u) = u else { break };
            done[u] = true;
            if u == target {
                break;
            }
            let passable = matches!(self.nodes[u].kind, NodeKind::Visited | NodeKind::Current);
            if !passable {
                continue;
            }
            for v in self.neighbors(u).into_iter().filter(|&v| v != STOP) {
                let d = dist[u] + self.distance(u, v);
                if d < dist[v] {
                    dist[v] = d;
                    prev[v] = u;
                }
            }
        }
        if !dist[target].is_finite() {
            return None;
        }
        let mut route = vec![target];
        while *route.last().unwrap() != self.current {
            route.push(prev[*route.last().unwrap()]);
        }
        route.reverse();
        Some(route)
    }
}

fn key(i: NodeId, j: NodeId) -> (NodeId, NodeId) {
    (i.min(j), i.max(j))
}

/// Per-node scores with mask flags. Masked entries never win selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub masked: Vec<bool>,
}

impl ScoreVector {
    fn masked_for(g: &NavGraph) -> Vec<bool> {
        g.nodes
            .iter()
            .map(|n| matches!(n.kind, NodeKind::Visited | NodeKind::Current) || n.failed)
            .collect()
    }

    /// Unmasked ids ordered by descending score, ties by ascending id.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (0..self.scores.len())
            .filter(|&i| !self.masked[i] && self.scores[i] > f64::NEG_INFINITY)
            .collect();
        ids.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        ids
    }
}

/// Geodesic-aware reference scorer: a ghost scores minus the length of the
/// detour through it (walk there, then shortest path to the goal). Stop wins
/// once the agent is inside the success radius and no ghost promises
/// meaningful further progress.
pub fn score_oracle(g: &NavGraph, scene: &Scene) -> ScoreVector {
    let current = g.current_position();
    let masked = ScoreVector::masked_for(g);
    let mut scores = vec![f64::NEG_INFINITY; g.len()];
    for n in g.ghosts() {
        let geo = scene.geodesic(n.position);
        if geo.is_finite() {
            scores[n.id] = -(geo + current.distance(&n.position));
        }
    }
    let here = if g.current == STOP { f64::INFINITY } else { scene.geodesic(current) };
    let better_ghost = g
        .ghosts()
        .filter(|n| !masked[n.id])
        .any(|n| scene.geodesic(n.position) < here - STOP_MIN_PROGRESS_M);
    if here <= SUCCESS_RADIUS_M && (here <= STOP_CERTAIN_M || !better_ghost) {
        scores[STOP] = f64::INFINITY;
    }
    ScoreVector { scores, masked }
}

/// Greedy choice: highest unmasked score, ties to the lowest id; Stop when
/// nothing is selectable.
pub fn select_node(s: &ScoreVector) -> NodeId {
    let mut best: Option<NodeId> = None;
    for i in 0..s.scores.len() {
        if s.masked[i] || s.scores[i] == f64::NEG_INFINITY || s.scores[i].is_nan() {
            continue;
        }
        if best.is_none_or(|b| s.scores[i] > s.scores[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(STOP)
}

/// Marks `failed` for the rest of the episode and picks the best remaining
/// node under the same scores.
pub fn reselect(g: &mut NavGraph, s: &mut ScoreVector, failed: NodeId) -> NodeId {
    if failed != STOP {
        g.mark_failed(failed);
        s.masked[failed] = true;
    }
    select_node(s)
}

/// Per-node feature vector: geodesic to goal, distance from the current
/// node, heading alignment, visit recency, stop indicator.
pub fn node_features(g: &NavGraph, scene: &Scene) -> Vec<[f64; FEATURES]> {
    let current = g.current_position();
    let cap = |d: f64| if d.is_finite() { d.min(GEODESIC_FEATURE_CAP) } else { GEODESIC_FEATURE_CAP };
    g.nodes
        .iter()
        .map(|n| match n.kind {
            NodeKind::Stop => {
                let here = if g.current == STOP { f64::INFINITY } else { scene.geodesic(current) };
                [cap(here), 0.0, 0.0, 0.0, 1.0]
            }
            kind => {
                let dist = current.distance(&n.position);
                let align = if dist > 0.0 {
                    heading_difference(g.heading, current.bearing_to(&n.position)).to_radians().cos()
                } else {
                    1.0
                };
                let recency = match kind {
                    NodeKind::Ghost => 0.0,
                    _ => 1.0 / (1.0 + g.step.saturating_sub(n.last_visit_step) as f64),
                };
                [cap(scene.geodesic(n.position)), dist, align, recency, 0.0]
            }
        })
        .collect()
}

/// Linear stand-in for a learned node scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: [f64; FEATURES],
}

const WEIGHTS_HEADER: &str = "safenav-linear-scorer v1";

impl LinearScorer {
    pub fn new(weights: [f64; FEATURES]) -> Self {
        Self { weights }
    }

    pub fn zero() -> Self {
        Self::new([0.0; FEATURES])
    }

    pub fn score(&self, f: &[f64; FEATURES]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    pub fn score_graph(&self, g: &NavGraph, scene: &Scene) -> Result<ScoreVector> {
        let features = node_features(g, scene);
        if features.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::contract("non-finite node feature"));
        }
        Ok(ScoreVector {
            scores: features.iter().map(|f| self.score(f)).collect(),
            masked: ScoreVector::masked_for(g),
        })
    }

    pub fn to_text(&self) -> String {
        let w: Vec<String> = self.weights.iter().map(|w| format!("{w:e}")).collect();
        format!("{WEIGHTS_HEADER}\n{}\n", w.join(" "))
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(WEIGHTS_HEADER) {
            return Err(Error::parse(Some(1), format!("expected header `{WEIGHTS_HEADER}`")));
        }
        let body = lines.next().ok_or_else(|| Error::parse(Some(2), "missing weight line"))?;
        let values = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(Some(2), format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        let weights: [f64; FEATURES] = values
            .try_into()
            .map_err(|v: Vec<f64>| Error::parse(Some(2), format!("expected {FEATURES} weights, found {}", v.len())))?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::parse(Some(2), "weights must be finite"));
        }
        Ok(Self { weights })
    }
}

/// Features, mask and supervision targets extracted from one planning step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: Vec<[f64; FEATURES]>,
    pub masked: Vec<bool>,
    pub a1: NodeId,
    pub a2: NodeId,
}

impl TrainingSample {
    /// Targets are the oracle's best and second-best nodes. `None` when
    /// fewer than two nodes are selectable.
    pub fn from_graph(g: &NavGraph, scene: &Scene) -> Option<Self> {
        let oracle = score_oracle(g, scene);
        let ranking = oracle.ranking();
        let (&a1, &a2) = (ranking.first()?, ranking.get(1)?);
        Some(Self {
            features: node_features(g, scene),
            masked: oracle.masked,
            a1,
            a2,
        })
    }
}

/// `L = −(λ1·ln p(a1) + λ2·ln p(a2))` with `p` the softmax over unmasked
/// scores, and its gradient with respect to the weights.
pub fn loss_and_grad(
    scorer: &LinearScorer,
    sample: &TrainingSample,
    lambda1: f64,
    lambda2: f64,
) -> Result<(f64, [f64; FEATURES])> {
    let TrainingSample { features, masked, a1, a2 } = sample;
    let (a1, a2) = (*a1, *a2);
    if a1 == a2 {
        return Err(Error::contract("a1 and a2 must differ"));
    }
    if features.len() != masked.len() || a1 >= masked.len() || a2 >= masked.len() {
        return Err(Error::contract("target outside the graph"));
    }
    if masked[a1] || masked[a2] {
        return Err(Error::contract("loss targets must be unmasked"));
    }
    let live: Vec<usize> = (0..masked.len()).filter(|&i| !masked[i]).collect();
    let scores: Vec<f64> = live.iter().map(|&i| scorer.score(&features[i])).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    let log_p = |id: NodeId| scorer.score(&features[id]) - lse;
    let loss = -(lambda1 * log_p(a1) + lambda2 * log_p(a2));

    let mut grad = [0.0; FEATURES];
    for (&i, s) in live.iter().zip(&scores) {
        let p = (s - lse).exp();
        for (g, x) in grad.iter_mut().zip(&features[i]) {
            *g += (lambda1 + lambda2) * p * x;
        }
    }
    for (g, (x1, x2)) in grad.iter_mut().zip(features[a1].iter().zip(&features[a2])) {
        *g -= lambda1 * x1 + lambda2 * x2;
    }
    Ok((loss, grad))
}

/// Softmax probability the scorer assigns to `id` within `sample`.
pub fn probability(scorer: &LinearScorer, sample: &TrainingSample, id: NodeId) -> f64 {
    let live: Vec<f64> = (0..sample.masked.len())
        .filter(|&i| !sample.masked[i])
        .map(|i| scorer.score(&sample.features[i]))
        .collect();
    let max = live.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = live.iter().map(|s| (s - max).exp()).sum();
    (scorer.score(&sample.features[id]) - max).exp() / z
}

/// Whether the scorer's argmax over unmasked nodes equals `a1`.
pub fn agrees_top1(scorer: &LinearScorer, sample: &TrainingSample) -> bool {
    let s = ScoreVector {
        scores: sample.features.iter().map(|f| scorer.score(f)).collect(),
        masked: sample.masked.clone(),
    };
    select_node(&s) == sample.a1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Minibatch size; `None` uses the whole set every iteration.
    pub batch_size: Option<usize>,
    pub initial: LinearScorer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.05,
            lambda1: DEFAULT_LAMBDA1,
            lambda2: DEFAULT_LAMBDA2,
            batch_size: None,
            initial: LinearScorer::zero(),
            seed: 0,
        }
    }
}

/// Gradient descent on the mean loss.
pub fn train_scorer(samples: &[TrainingSample], config: &TrainConfig) -> Result<LinearScorer> {
    if samples.is_empty() {
        return Err(Error::contract("empty training set"));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    let mut scorer = config.initial;
    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let batch = config.batch_size.unwrap_or(samples.len()).clamp(1, samples.len());
    let mut cursor = samples.len();
    for _ in 0..config.iterations {
        if cursor + batch > samples.len() {
            if batch < samples.len() {
                shuffle(&mut order, &mut rng);
            }
            cursor = 0;
        }
        let mut total = [0.0; FEATURES];
        for &i in &order[cursor..cursor + batch] {
            let (_, g) = loss_and_grad(&scorer, &samples[i], config.lambda1, config.lambda2)?;
            for (t, x) in total.iter_mut().zip(g) {
                *t += x;
            }
        }
        cursor += batch;
        for (w, g) in scorer.weights.iter_mut().zip(total) {
            *w -= config.learning_rate * g / batch as f64;
        }
    }
    Ok(scorer)
}

fn shuffle(v: &mut [usize], rng: &mut SplitMix64) {
    for i in (1..v.len()).rev() {
        let j = (rng.next_f64() * (i + 1) as f64) as usize;
        v.swap(i, j.min(i));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::OccupancyGrid;
    use approx::assert_abs_diff_eq;

    fn scene() -> Scene {
        let grid = OccupancyGrid::new(200, 200, 0.05).unwrap();
        Scene::new("open", grid, Pose::new(1.0, 1.0, 0.0), Point2D::new(9.0, 9.0)).unwrap()
    }

    fn wp(x: f64, y: f64) -> Waypoint {
        Waypoint {
            heading_bin: 0,
            range_bin: 0,
            position: Point2D::new(x, y),
            score: 1.0,
        }
    }

    fn sv(scores: &[f64]) -> ScoreVector {
        ScoreVector {
            scores: scores.to_vec(),
            masked: vec![false; scores.len()],
        }
    }

    #[test]
    fn first_update_builds_star() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 1.0), wp(1.0, 2.0), wp(2.0, 2.0)], 0);
        assert_eq!(g.len(), 5);
        assert_eq!(g.nodes().iter().filter(|n| n.kind == NodeKind::Current).count(), 1);
        assert_eq!(g.ghosts().count(), 3);
        assert_eq!(g.metric_edges().count(), 3);
        assert_eq!(g.neighbors(STOP).len(), 4);
        assert_eq!(g.edge_weight(1, 2), Some(1.0));
    }

    #[test]
    fn nearby_waypoint_moves_ghost() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 1.0)], 0);
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.3, 1.0)], 1);
        assert_eq!(g.ghosts().count(), 1);
        assert_eq!(g.node(2).position, Point2D::new(2.3, 1.0));
        assert_abs_diff_eq!(g.edge_weight(1, 2).unwrap(), 1.3, epsilon = 1e-12);
    }

    /// A waypoint right under the agent must not drag an existing ghost
    /// there, or travelling to it would take no actions.
    #[test]
    fn waypoint_underfoot_leaves_ghosts_alone() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(1.6, 1.0)], 0);
        g.update(&Pose::new(1.1, 1.0, 0.0), &[wp(1.2, 1.0), wp(3.0, 1.0)], 1);
        assert_eq!(g.current(), 1);
        assert_eq!(g.ghosts().map(|n| n.position).collect::<Vec<_>>(), vec![Point2D::new(1.6, 1.0), Point2D::new(3.0, 1.0)]);
    }

    #[test]
    fn revisit_restores_current() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 1.0)], 0);
        g.update(&Pose::new(2.0, 1.0, 0.0), &[], 4);
        assert_eq!(g.current(), 2);
        assert_eq!(g.node(1).kind, NodeKind::Visited);
        assert_eq!(g.node(1).last_visit_step, 0);
        g.update(&Pose::new(1.1, 1.0, 180.0), &[], 9);
        assert_eq!(g.current(), 1);
        assert_eq!(g.node(1).kind, NodeKind::Current);
        assert_eq!(g.node(1).last_visit_step, 9);
        assert_eq!(g.node(2).kind, NodeKind::Visited);
    }

    #[test]
    fn oracle_prefers_shorter_detour() {
        let s = scene();
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 2.0), wp(1.0, 0.5)], 0);
        let scores = score_oracle(&g, &s);
        assert_eq!(select_node(&scores), 2);
        assert_eq!(scores.scores[STOP], f64::NEG_INFINITY);
        assert!(scores.masked[1]);
    }

    #[test]
    fn stop_inside_success_radius() {
        let s = scene();
        let mut g = NavGraph::new();
        g.update(&Pose::new(7.6, 7.6, 0.0), &[wp(7.0, 7.6)], 0);
        assert!(s.geodesic(Point2D::new(7.6, 7.6)) < 2.1);
        assert_eq!(select_node(&score_oracle(&g, &s)), STOP);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_node(&sv(&[f64::NEG_INFINITY, 0.5, 0.3])), 1);
        assert_eq!(select_node(&sv(&[f64::NEG_INFINITY, 0.5, 0.5])), 1);
        let all = ScoreVector {
            scores: vec![1.0, 2.0],
            masked: vec![true, true],
        };
        assert_eq!(select_node(&all), STOP);
        assert_eq!(select_node(&sv(&[f64::NEG_INFINITY; 3])), STOP);
    }

    #[test]
    fn reselect_walks_down_the_ranking() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 1.0), wp(1.0, 2.0), wp(2.0, 2.0)], 0);
        let mut s = sv(&[f64::NEG_INFINITY, 0.0, 0.5, 0.3, 0.1]);
        s.masked[1] = true;
        assert_eq!(select_node(&s), 2);
        assert_eq!(reselect(&mut g, &mut s, 2), 3);
        assert_eq!(reselect(&mut g, &mut s, 3), 4);
        assert_eq!(reselect(&mut g, &mut s, 4), STOP);
        assert!(g.node(2).failed && g.node(3).failed && g.node(4).failed);
    }

    #[test]
    fn hand_loss() {
        let sample = TrainingSample {
            features: vec![[2f64.ln(), 0.0, 0.0, 0.0, 0.0], [0.0; 5], [0.0; 5]],
            masked: vec![false; 3],
            a1: 0,
            a2: 1,
        };
        let scorer = LinearScorer::new([1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(probability(&scorer, &sample, 0), 0.5, epsilon = 1e-12);
        let (l, _) = loss_and_grad(&scorer, &sample, 0.8, 0.2).unwrap();
        assert_abs_diff_eq!(l, -(0.8 * 0.5f64.ln() + 0.2 * 0.25f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(l, 0.8318, epsilon = 1e-4);
        let (ce, _) = loss_and_grad(&scorer, &sample, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(ce, 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn loss_contract_violations() {
        let mut sample = TrainingSample {
            features: vec![[0.0; 5]; 3],
            masked: vec![false, true, false],
            a1: 0,
            a2: 1,
        };
        assert!(loss_and_grad(&LinearScorer::zero(), &sample, 0.8, 0.2).is_err());
        sample.a2 = 0;
        assert!(loss_and_grad(&LinearScorer::zero(), &sample, 0.8, 0.2).is_err());
    }

    #[test]
    fn weights_text_roundtrip() {
        let s = LinearScorer::new([-1.0, 0.25, 3.5e-7, 0.0, -2.0]);
        assert_eq!(LinearScorer::parse_text(&s.to_text()).unwrap(), s);
        assert!(LinearScorer::parse_text("1 2 3 4 5\n").is_err());
        assert!(LinearScorer::parse_text(&format!("{WEIGHTS_HEADER}\n1 2 3\n")).is_err());
    }

    #[test]
    fn route_goes_through_visited_nodes() {
        let mut g = NavGraph::new();
        g.update(&Pose::new(1.0, 1.0, 0.0), &[wp(2.0, 1.0), wp(1.0, 2.0)], 0);
        g.update(&Pose::new(2.0, 1.0, 0.0), &[wp(3.0, 1.0)], 1);
        assert_eq!(g.route_to(4), Some(vec![2, 4]));
        assert_eq!(g.route_to(3), Some(vec![2, 1, 3]));
        assert_eq!(g.route_to(STOP), None);
    }
}
